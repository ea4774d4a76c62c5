"""Forelli-Rudin type ball integrals and their boundary asymptotics.

``a(eps, delta; w) = int_B (1 - |eta|^2)^(-eps) |1 - <w, eta>|^-(1+k-eps-delta) dV(eta)``
over the unit ball of C^k, and
``b(delta; w) = int_S |1 - <w, eta>|^-(k-delta) d sigma(eta)`` over its
boundary sphere (surface measure, total mass ``2 pi^k / (k-1)!``).

The volume integral depends on ``|w|`` only.  Rotating ``w`` onto the first
axis and integrating out the remaining ``k - 1`` coordinates (a weighted
ball integral with a closed form) leaves a disc integral, evaluated by
nested adaptive quadrature in polar coordinates.  The sphere integral uses
Monte Carlo with normalized Gaussian directions.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .kernels import QuadratureError
from .reports import FAIL, INCONCLUSIVE, PASS, EstimateReport

__all__ = [
    "forelli_rudin_a",
    "forelli_rudin_b",
    "forelli_rudin_sweep",
    "DEFAULT_GAPS",
    "fit_power",
    "fit_log",
]

#: default values of 1 - |w|^2 for the asymptotic sweep
DEFAULT_GAPS = (1e-1, 1e-2, 1e-3, 2.0**-12)


def _angular(x: float, c: float, rtol: float) -> float:
    """``int_0^{2 pi} |1 - x e^{i phi}|^-c d phi`` for ``0 <= x < 1``."""
    if x == 0.0:
        return 2 * math.pi
    gap = 1.0 - x

    def f(phi):
        return ((1.0 - x) ** 2 + 4.0 * x * math.sin(0.5 * phi) ** 2) ** (-0.5 * c)

    pts = [p for p in (gap, 10 * gap, 100 * gap) if p < math.pi]
    val, err = integrate.quad(f, 0.0, math.pi, points=pts or None, epsabs=0.0, epsrel=rtol, limit=400)
    if err > 1e3 * rtol * abs(val):
        raise QuadratureError(f"angular quadrature did not converge at x={x}")
    return 2 * val


def forelli_rudin_a(eps: float, delta: float, w, rtol: float = 1e-10) -> float:
    """Volume integral ``a(eps, delta; w)`` over the unit ball of C^k, ``k = len(w)``.

    Parameters
    ----------
    eps
        Weight exponent, ``eps < 1``.
    delta
        Shift of the kernel exponent.
    w
        Point of the open unit ball (its dimension sets ``k``).
    rtol
        Relative tolerance of both quadrature levels.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    k = w.size
    r = float(np.linalg.norm(w))
    if r >= 1.0:
        raise ValueError("w must lie in the open unit ball")
    if eps >= 1.0:
        raise ValueError("eps must be below 1 for integrability")
    c = 1.0 + k - eps - delta
    beta = k - 1 - eps
    # weighted integral over the orthogonal complement of w
    pref = math.pi ** (k - 1) * math.exp(math.lgamma(1.0 - eps) - math.lgamma(k - eps))

    def outer(rho):
        return (1.0 - rho * rho) ** beta * rho * _angular(r * rho, c, rtol * 0.1)

    gap = 1.0 - r
    pts = sorted({p for p in (1 - 100 * gap, 1 - 10 * gap, 1 - gap, 1 - 0.1 * gap) if 0.0 < p < 1.0})
    pieces = [0.0] + pts + [1.0]
    total = 0.0
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        if hi == 1.0 and beta < 0:
            # algebraic endpoint singularity (1 - rho)^beta handled by the weight
            def g(rho):
                return (1.0 + rho) ** beta * rho * _angular(r * rho, c, rtol * 0.1)

            val, err = integrate.quad(g, lo, hi, weight="alg", wvar=(0.0, beta), epsabs=0.0, epsrel=rtol, limit=400)
        else:
            val, err = integrate.quad(outer, lo, hi, epsabs=0.0, epsrel=rtol, limit=400)
        if err > 1e3 * rtol * max(abs(val), 1e-300):
            raise QuadratureError(f"radial quadrature did not converge for |w|={r}")
        total += val
    return pref * total


def forelli_rudin_b(delta: float, w, n_samples: int = 200_000, seed: int = 0) -> tuple:
    """Sphere integral ``b(delta; w)`` by Monte Carlo; returns ``(value, standard error)``."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    k = w.size
    if np.linalg.norm(w) >= 1.0:
        raise ValueError("w must lie in the open unit ball")
    rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
    g = rng.standard_normal((n_samples, 2 * k))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    eta = g[:, :k] + 1j * g[:, k:]
    f = np.abs(1.0 - eta @ np.conj(w)) ** (-(k - delta))
    area = 2 * math.pi**k / math.factorial(k - 1)
    return area * float(f.mean()), area * float(f.std(ddof=1)) / math.sqrt(n_samples)


def fit_power(gaps, values):
    """Least-squares slope and intercept of ``log value`` against ``log gap``."""
    x = np.log(np.asarray(gaps, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, icept = np.polyfit(x, y, 1)
    return float(slope), float(icept)


def fit_log(gaps, values):
    """Linear fit of ``value`` against ``-log gap``; returns ``(slope, intercept, R^2)``."""
    x = -np.log(np.asarray(gaps, dtype=float))
    y = np.asarray(values, dtype=float)
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    r2 = 1.0 - float(np.sum(resid**2)) / float(np.sum((y - y.mean()) ** 2))
    return float(slope), float(icept), r2


def forelli_rudin_sweep(k: int = 1, deltas=(-0.5, -0.25, 0.0, 0.25), eps_grid=(0.1, 0.25, 0.5, 0.75, 0.9),
                        gaps=DEFAULT_GAPS, slope_tol: float = 0.05, r2_min: float = 0.99,
                        bounded_ratio: float = 2.0, decision_eps: float = 0.9, rtol: float = 1e-10) -> EstimateReport:
    """Boundary asymptotics of ``a`` along ``w = sqrt(1 - gap) e_1``.

    Regimes: ``delta < 0`` power law with exponent ``delta`` (fitted slope
    within ``slope_tol``); ``delta = 0`` linear in ``-log(1 - |w|^2)``
    (``R^2 >= r2_min``); ``delta > 0`` bounded (max/min ``<= bounded_ratio``).
    The verdict uses ``decision_eps``; every other ``eps`` is reported.
    """
    rows = []
    verdict = True
    gaps = tuple(float(g) for g in gaps)
    for delta in deltas:
        for eps in eps_grid:
            vals = [forelli_rudin_a(eps, delta, np.r_[math.sqrt(1.0 - g), np.zeros(k - 1)], rtol=rtol) for g in gaps]
            row = {"delta": delta, "eps": eps, "values": vals}
            if delta < 0:
                slope, _ = fit_power(gaps, vals)
                ok = abs(slope - delta) <= slope_tol
                row.update(statistic="slope", value=slope, target=delta, ok=ok)
            elif delta == 0:
                _, _, r2 = fit_log(gaps, vals)
                ok = r2 >= r2_min
                row.update(statistic="r2", value=r2, target=r2_min, ok=ok)
            else:
                ratio = max(vals) / min(vals)
                ok = ratio <= bounded_ratio
                row.update(statistic="max_over_min", value=ratio, target=bounded_ratio, ok=ok)
            row["decision"] = eps == decision_eps
            if eps == decision_eps:
                verdict = verdict and ok
            rows.append(row)
    if not any(r["decision"] for r in rows):
        status = INCONCLUSIVE
    else:
        status = PASS if verdict else FAIL
    metrics = {f"delta={r['delta']}:{r['statistic']}": r["value"] for r in rows if r["decision"]}
    return EstimateReport(
        "lemma34",
        status,
        metrics=metrics,
        rows=rows,
        settings={"k": k, "deltas": list(deltas), "eps_grid": list(eps_grid), "gaps": list(gaps),
                  "slope_tol": slope_tol, "r2_min": r2_min, "bounded_ratio": bounded_ratio,
                  "decision_eps": decision_eps, "rtol": rtol},
        provenance={"property": "boundary asymptotics of the Forelli-Rudin ball integrals: power law for "
                                "delta<0, logarithmic for delta=0, bounded for delta>0"},
    )
