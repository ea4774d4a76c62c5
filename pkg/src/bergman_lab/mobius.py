"""Involutive automorphisms of the unit ball and the estimates built on them.

For ``w`` in the unit ball of C^k (``w != 0``) the map

    phi_w(z) = (w - P_w z - s_w Q_w z) / (1 - <z, w>),

with ``s_w = sqrt(1 - |w|^2)``, ``P_w`` the orthogonal projection onto
``C w`` and ``Q_w = I - P_w``, swaps ``0`` and ``w`` and is its own inverse.
The inner product is ``<z, w> = sum z_i conj(w_i)``.

``w = 0`` is rejected: the projections are undefined there and the
change of variables is simply skipped by callers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import DefiningFunction, SuccessorSpec, as_points
from .jets import Jet
from .kernels import h_prime_point
from .reports import FAIL, PASS, EstimateReport
from .sampling import uniform_ball

__all__ = [
    "DIVISION_FLOOR",
    "MobiusMap",
    "mobius_apply",
    "identity_residuals",
    "identity_check",
    "mobius_sweep",
    "elementary_bounds_check",
    "radial_reduction_check",
    "l_point",
]

DIVISION_FLOOR = 1e-12
#: working precision of the identity checks (x87 extended where available)
XCOMPLEX = np.clongdouble


def _inner(z, w):
    """``<z, w> = sum_i z_i conj(w_i)`` along the last axis."""
    return np.sum(z * np.conj(w), axis=-1)


@dataclass(frozen=True)
class MobiusMap:
    """The ball automorphism exchanging ``0`` and ``w``."""

    w: tuple

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex).reshape(-1)
        object.__setattr__(self, "w", tuple(complex(x) for x in w))
        n2 = float(np.sum(np.abs(w) ** 2))
        if n2 >= 1.0:
            raise ValueError("Mobius centre must lie in the open unit ball")
        if n2 == 0.0:
            raise ValueError("w = 0 has no projection P_w; callers skip the change of variables there")

    @property
    def k(self) -> int:
        return len(self.w)

    @property
    def center(self) -> np.ndarray:
        return np.array(self.w)

    def _ext(self):
        """Centre, ``|w|^2`` and ``s_w`` in extended precision."""
        w = self.center.astype(XCOMPLEX)
        n2 = np.sum(w.real**2 + w.imag**2)
        return w, n2, np.sqrt(1 - n2)

    @property
    def s(self) -> float:
        return float(self._ext()[2])

    def P(self, z) -> np.ndarray:
        w, n2, _ = self._ext()
        return (_inner(z, w) / n2)[..., None] * w

    def Q(self, z) -> np.ndarray:
        return z - self.P(z)

    def apply_extended(self, z) -> np.ndarray:
        """``phi_w(z)`` evaluated and returned in extended precision."""
        z = as_points(np.asarray(z).astype(np.result_type(np.asarray(z).dtype, XCOMPLEX)), self.k)
        w, n2, s = self._ext()
        den = 1 - _inner(z, w)
        if np.any(np.abs(den) < DIVISION_FLOOR):
            raise ZeroDivisionError("|1 - <z, w>| below the division floor")
        p = (_inner(z, w) / n2)[..., None] * w
        return (w - p - s * (z - p)) / den[..., None]

    def __call__(self, z) -> np.ndarray:
        return self.apply_extended(z).astype(complex)

    def apply_jet(self, z0, order: int = 1) -> list:
        """Jets of the components of ``phi_w`` at ``z0`` (dtype of ``z0`` kept)."""
        z = Jet.variables(z0, order)
        w, n2, s = self._ext()
        if np.asarray(z0).dtype != XCOMPLEX:
            w, n2, s = w.astype(complex), float(n2), float(s)
        zw = None
        for zi, wi in zip(z, w):
            term = zi * np.conj(wi)
            zw = term if zw is None else zw + term
        inv = (1 - zw).reciprocal()
        out = []
        for i in range(self.k):
            p_i = zw * (w[i] / n2)
            out.append((w[i] - p_i - s * (z[i] - p_i)) * inv)
        return out

    def real_jacobian(self, z0) -> np.ndarray:
        """Determinant of the real 2k x 2k linearization at ``z0``."""
        z0 = as_points(z0, self.k)
        comps = self.apply_jet(z0, 1)
        k = self.k
        J = np.empty(z0.shape[:-1] + (k, k), dtype=comps[0].coeffs.dtype)
        for i, c in enumerate(comps):
            for j in range(k):
                e = [0] * k
                e[j] = 1
                J[..., i, j] = c.coefficient(e)
        A, B = J.real, J.imag
        R = np.concatenate([np.concatenate([A, -B], axis=-1), np.concatenate([B, A], axis=-1)], axis=-2)
        return _det(R)


def _det(M: np.ndarray) -> np.ndarray:
    """Batched determinant by Gaussian elimination with partial pivoting.

    Works in any real floating dtype (LAPACK has no extended precision).
    """
    M = np.array(M, copy=True)
    n = M.shape[-1]
    det = np.ones(M.shape[:-2], dtype=M.dtype)
    rows = np.arange(n)
    for c in range(n):
        piv = c + np.argmax(np.abs(M[..., c:, c]), axis=-1)
        swap = piv != c
        if np.any(swap):
            idx = np.broadcast_to(rows, M.shape[:-1]).copy()
            idx[..., c] = piv
            np.put_along_axis(idx, piv[..., None], c, axis=-1)
            M = np.take_along_axis(M, idx[..., None], axis=-2)
            det = np.where(swap, -det, det)
        d = M[..., c, c]
        det = det * d
        safe = np.where(d == 0, 1, d)
        f = M[..., c + 1 :, c] / safe[..., None]
        M[..., c + 1 :, :] -= f[..., None] * M[..., c : c + 1, :]
    return det


def mobius_apply(m: MobiusMap, z) -> np.ndarray:
    return m(z)


def identity_residuals(w, eta) -> dict:
    """Residuals of the change-of-variables identities for ``tau = phi_w(eta)``.

    Returns arrays (one entry per pair) for: the involution
    ``eta = phi_w(tau)``; ``1 - <eta, w> = (1 - |w|^2)/(1 - <tau, w>)``;
    ``1 - |eta|^2 = (1 - |w|^2)(1 - |tau|^2)/|1 - <tau, w>|^2``; and the
    volume Jacobian ``((1 - |w|^2)/|1 - <tau, w>|^2)^(k+1)``.  All residuals
    are relative to ``max(1, |right-hand side|)``.

    Inputs are exact double-precision numbers; the map and both sides of
    each identity are evaluated in extended precision, because ``1 - |w|^2``
    and the inverse map are badly conditioned for centres near the sphere.
    """
    w = as_points(w, np.shape(w)[-1])
    eta = as_points(eta, w.shape[-1])
    k = w.shape[-1]
    res = {"involution": [], "inner": [], "norm": [], "jacobian": []}
    for wi, ei in zip(w.reshape(-1, k), eta.reshape(-1, k)):
        m = MobiusMap(wi)
        wx, w2, _ = m._ext()
        ex = ei.astype(XCOMPLEX)
        tau = m.apply_extended(ex)
        back = m.apply_extended(tau)
        d = 1 - _inner(tau, wx)
        rhs_inner = (1 - w2) / d
        rhs_norm = (1 - w2) * (1 - np.sum(np.abs(tau) ** 2)) / abs(d) ** 2
        rhs_jac = ((1 - w2) / abs(d) ** 2) ** (k + 1)
        jac = m.real_jacobian(tau[None, :])[0]
        res["involution"].append(float(np.max(np.abs(back - ex))))
        res["inner"].append(float(abs((1 - _inner(ex, wx)) - rhs_inner) / max(1, abs(rhs_inner))))
        res["norm"].append(float(abs((1 - np.sum(np.abs(ex) ** 2)) - rhs_norm) / max(1, abs(rhs_norm))))
        res["jacobian"].append(float(abs(jac - rhs_jac) / max(1, abs(rhs_jac))))
    return {key: np.array(v) for key, v in res.items()}


def identity_check(m: MobiusMap, etas, tol: float = 1e-12) -> EstimateReport:
    """Maximum identity residuals of one map over the points ``etas``."""
    etas = as_points(etas, m.k).reshape(-1, m.k)
    res = identity_residuals(np.broadcast_to(m.center, etas.shape), etas)
    metrics = {f"max_{k}": float(v.max()) for k, v in res.items()}
    metrics["phi_of_zero_error"] = float(np.max(np.abs(m(np.zeros(m.k)) - m.center)))
    metrics["phi_of_center_error"] = float(np.max(np.abs(m(m.center))))
    worst = max(metrics.values())
    return EstimateReport(
        "mobius-identities",
        PASS if worst <= tol else FAIL,
        metrics=metrics,
        settings={"tol": tol, "k": m.k, "n_points": len(etas)},
        provenance={"property": "ball automorphism change-of-variables identities and involution"},
    )


def _random_centres(rng, n, k):
    w = uniform_ball(rng, n, k)
    bad = np.sum(np.abs(w) ** 2, axis=1) == 0.0
    while np.any(bad):
        w[bad] = uniform_ball(rng, int(bad.sum()), k)
        bad = np.sum(np.abs(w) ** 2, axis=1) == 0.0
    return w


def mobius_sweep(ks=(1, 2, 3), n_pairs: int = 1000, seed: int = 0, tol: float = 1e-12) -> EstimateReport:
    """Identity residuals over random ``(w, eta)`` pairs for each fibre dimension."""
    rows = []
    worst = 0.0
    for k in ks:
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        w = _random_centres(rng, n_pairs, k)
        eta = uniform_ball(rng, n_pairs, k)
        res = identity_residuals(w, eta)
        row = {"k": k, "n_pairs": n_pairs}
        row.update({f"max_{key}": float(v.max()) for key, v in res.items()})
        rows.append(row)
        worst = max(worst, *(row[f"max_{key}"] for key in res))
    return EstimateReport(
        "mobius",
        PASS if worst <= tol else FAIL,
        metrics={"max_residual": worst},
        rows=rows,
        settings={"tol": tol, "ks": list(ks), "n_pairs": n_pairs, "seed": seed},
        provenance={"property": "ball automorphism identities (involution, inner product, norm, volume Jacobian)"},
    )


def elementary_bounds_check(n_pairs: int = 1_000_000, k: int = 1, alpha=(1.0,), seed: int = 0,
                            chunk: int = 200_000) -> EstimateReport:
    """Sweep the two elementary fibre bounds over random ball pairs.

    Checked: ``(1 - |eta|^2)/|1 - <w, eta>| < 2`` and, per exponent,
    ``|(1 - |eta|^2)^(a/2) / (1 - <w, eta>)^a| (1 - |w|^2)^(a/2) <= 1``.
    """
    alpha = np.asarray(alpha, dtype=float)
    sup_a = 0.0
    sup_b = 0.0
    rng = np.random.default_rng(np.random.SeedSequence([seed, k, 417]))
    done = 0
    while done < n_pairs:
        m = min(chunk, n_pairs - done)
        w = uniform_ball(rng, m, k)
        eta = uniform_ball(rng, m, k)
        A = 1.0 - np.sum(np.abs(eta) ** 2, axis=1)
        Aw = 1.0 - np.sum(np.abs(w) ** 2, axis=1)
        B = 1.0 - np.sum(w * np.conj(eta), axis=1)
        sup_a = max(sup_a, float(np.max(A / np.abs(B))))
        ratio = np.abs(A[:, None] ** (alpha / 2) / B[:, None] ** alpha) * Aw[:, None] ** (alpha / 2)
        sup_b = max(sup_b, float(np.max(ratio)))
        done += m
    ok = sup_a < 2.0 and sup_b <= 1.0
    return EstimateReport(
        "elementary-bounds",
        PASS if ok else FAIL,
        metrics={"sup_ratio_two_bound": sup_a, "sup_cauchy_schwarz_ratio": sup_b},
        settings={"n_pairs": n_pairs, "k": k, "alpha": alpha.tolist(), "seed": seed},
        provenance={"property": "(1-|eta|^2)/|1-<w,eta>| < 2 and the Cauchy-Schwarz fibre bound"},
    )


def l_point(spec: SuccessorSpec, z, w, tau) -> np.ndarray:
    """Moduli ``|z_j| (1 - |tau|^2)^(a_j/2) / (1 - |w|^2)^(a_j/2)``."""
    a = np.asarray(spec.alpha)
    t2 = np.sum(np.abs(tau) ** 2, axis=-1)[..., None]
    w2 = np.sum(np.abs(w) ** 2, axis=-1)[..., None]
    return np.abs(z) * (1.0 - t2) ** (a / 2) / (1.0 - w2) ** (a / 2)


def radial_reduction_check(df: DefiningFunction, spec: SuccessorSpec, n_samples: int = 1000, seed: int = 0,
                           tol: float = 1e-10) -> EstimateReport:
    """Compare ``rho`` at ``h'(z, w, phi_w(tau))`` and at ``l(z, w, tau)``.

    Samples: ``w`` and ``tau`` uniform in the ball (``w != 0``) and ``z`` in
    the ``w``-slice of the successor (the preimage of a uniform point of the
    base region under the fibre map).
    """
    from .sampling import SampleScheme, sample_interior

    domain = df.profile
    rng = np.random.default_rng(np.random.SeedSequence([seed, 434]))
    w = _random_centres(rng, n_samples, spec.k)
    tau = uniform_ball(rng, n_samples, spec.k)
    x = sample_interior(domain, SampleScheme(n_samples, seed=seed)).points
    w2 = np.sum(np.abs(w) ** 2, axis=1)[:, None]
    z = x * (1.0 - w2) ** (np.asarray(spec.alpha) / 2)
    eta = np.stack([MobiusMap(wi)(ti) for wi, ti in zip(w, tau)])
    lhs = df(h_prime_point(spec, z, w, eta))
    rhs = df(l_point(spec, z, w, tau))
    res = np.abs(lhs - rhs)
    worst = float(res.max())
    return EstimateReport(
        "radial-reduction",
        PASS if worst <= tol else FAIL,
        metrics={"max_residual": worst, "mean_residual": float(res.mean())},
        settings={"n_samples": n_samples, "seed": seed, "tol": tol, "rho_mode": df.mode, "domain": domain.key,
                  "alpha": list(spec.alpha), "k": spec.k},
        provenance={"property": "rho(h'(z, w, phi_w(tau))) = rho(l(z, w, tau)) by rotation invariance of rho"},
    )
