"""Bergman kernels on complete Reinhardt regions and their successors.

Three kernel families share one interface:

* :class:`ClosedFormKernel` -- disc, polydisc and ball kernels;
* :class:`MonomialSeriesKernel` -- ``sum_gamma z^gamma conj(zeta)^gamma / ||z^gamma||^2``
  with norms obtained by quadrature over the modulus shadow (the oracle);
* :class:`SuccessorKernel` -- the kernel of a successor region assembled
  from the kernel of its base through a slice kernel, a shifted
  evaluation point and an Euler-type differential operator.

``kernel.jet(z, zeta, order)`` returns holomorphic Taylor data in the
first slot, computed by jet arithmetic (never by finite differences).
"""
from __future__ import annotations

import csv
import math
from functools import lru_cache
import os
import threading
import warnings
from typing import Iterable

import numpy as np
from scipy import integrate
from scipy.special import binom

from .domains import (
    Ball,
    Polydisc,
    RadialProfile,
    SuccessorChain,
    SuccessorRegion,
    SuccessorSpec,
    as_points,
)
from .expansion import expand_operator
from .jets import Jet, compose, multi_indices

__all__ = [
    "OutsideDomainError",
    "BranchFloorError",
    "QuadratureError",
    "SeriesTruncationWarning",
    "NormCache",
    "monomial_norm", "monomial_norms",
    "choose_degree",
    "KernelModel",
    "ClosedFormKernel",
    "MonomialSeriesKernel",
    "SuccessorKernel",
    "chain_kernel",
    "disc_kernel",
    "ball_kernel",
    "kernel_eval",
    "kernel_jet",
    "slice_kernel",
    "successor_kernel",
    "h_point",
    "h_prime_point",
    "BRANCH_FLOOR",
]

BRANCH_FLOOR = 1e-12


class OutsideDomainError(ValueError):
    pass


class BranchFloorError(ArithmeticError):
    pass


class QuadratureError(RuntimeError):
    pass


class SeriesTruncationWarning(UserWarning):
    pass


# -- monomial norms -----------------------------------------------------------

class NormCache:
    """Monomial norms keyed by ``(region key, gamma)``.

    Reads are lock free; writes and persistence are serialised.
    """

    def __init__(self):
        self._data: dict = {}
        self._lock = threading.Lock()

    def get(self, key, gamma):
        return self._data.get((key, tuple(gamma)))

    def put(self, key, gamma, value):
        with self._lock:
            self._data[(key, tuple(gamma))] = float(value)

    def __len__(self):
        return len(self._data)

    def save(self, path):
        with self._lock:
            rows = sorted(self._data.items())
        tmp = f"{path}.tmp{os.getpid()}"
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh, delimiter="\t")
            writer.writerow(["region", "gamma", "norm"])
            for (key, gamma), value in rows:
                writer.writerow([key, " ".join(map(str, gamma)), repr(value)])
        os.replace(tmp, path)

    def load(self, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh, delimiter="\t")
            next(reader, None)
            for key, gamma, value in reader:
                self.put(key, tuple(int(g) for g in gamma.split()), float(value))
        return self


DEFAULT_CACHE = NormCache()


def _shadow_integral(region: RadialProfile, gamma: tuple, rtol: float) -> float:
    N = region.n
    c = region.closure_axis % N
    free = [j for j in range(N) if j != c]
    gc = gamma[c]

    def integrand(*tfree):
        t = np.zeros(N)
        t[free] = tfree
        R = float(region.coordinate_bound(t, c))
        val = R ** (2 * gc + 2) / (2 * gc + 2)
        for j, x in zip(free, tfree):
            val *= x ** (2 * gamma[j] + 1)
        return val

    if not free:
        return integrand()

    def upper(i):
        def lim(*outer):
            t = np.zeros(N)
            for j, x in zip(free[i + 1 :], outer):
                t[j] = x
            return [0.0, float(region.coordinate_bound(t, free[i]))]

        return lim

    if len(free) == 1:
        hi = upper(0)()[1]
        val, err = integrate.quad(integrand, 0.0, hi, epsabs=0.0, epsrel=rtol, limit=400)
    else:
        opts = {"epsabs": 0.0, "epsrel": rtol, "limit": 200}
        val, err = integrate.nquad(integrand, [upper(i) for i in range(len(free))], opts=opts)
    if not np.isfinite(val) or val <= 0 or err > max(1e3 * rtol, 1e-6) * abs(val):
        raise QuadratureError(f"shadow quadrature for gamma={gamma} did not converge (value {val}, error {err})")
    return val


def monomial_norm(region: RadialProfile, gamma, rtol: float = 1e-12, cache: NormCache | None = DEFAULT_CACHE) -> float:
    """Squared L2 norm of ``z^gamma`` on the region: ``(2 pi)^n int t^(2 gamma + 1) dt``."""
    gamma = tuple(int(g) for g in gamma)
    if len(gamma) != region.n or any(g < 0 for g in gamma):
        raise ValueError("gamma must be a nonnegative multi-index of the region dimension")
    if cache is not None:
        hit = cache.get(region.key, gamma)
        if hit is not None:
            return hit
    value = (2 * math.pi) ** region.n * _shadow_integral(region, gamma, rtol)
    if cache is not None:
        cache.put(region.key, gamma, value)
    return value


@lru_cache(maxsize=None)
def _leggauss(m: int):
    return np.polynomial.legendre.leggauss(m)


def _batched_shadow_integrals(region: RadialProfile, gammas: np.ndarray, rtol: float) -> np.ndarray:
    """Shadow integrals for many multi-indices when one radial axis is free.

    Each component is rescaled by a coarse Gauss-Legendre estimate so that a
    single vector-valued adaptive quadrature controls every relative error.
    """
    N = region.n
    c = region.closure_axis % N
    f = [j for j in range(N) if j != c][0]
    gc = gammas[:, c].astype(float)
    gf = gammas[:, f].astype(float)
    hi = float(region.coordinate_bound(np.zeros(N), f))

    def raw(x):
        t = np.zeros(N)
        t[f] = x
        R = float(region.coordinate_bound(t, c))
        with np.errstate(under="ignore"):
            return np.exp((2 * gc + 2) * math.log(R) if R > 0 else -np.inf) / (2 * gc + 2) * x ** (2 * gf + 1)

    nodes, weights = _leggauss(400)
    xs = 0.5 * hi * (nodes + 1)
    rough = 0.5 * hi * sum(w * raw(x) for x, w in zip(xs, weights))
    if np.any(~np.isfinite(rough)) or np.any(rough <= 0):
        raise QuadratureError("coarse shadow quadrature failed")
    val, err = integrate.quad_vec(lambda x: raw(x) / rough, 0.0, hi, epsabs=0.0, epsrel=rtol, norm="max", limit=2000)
    if not np.all(np.isfinite(val)) or np.any(val <= 0) or err > max(1e3 * rtol, 1e-6):
        raise QuadratureError(f"batched shadow quadrature did not converge (error {err})")
    return val * rough


def monomial_norms(region: RadialProfile, gammas, rtol: float = 1e-12,
                   cache: NormCache | None = DEFAULT_CACHE) -> np.ndarray:
    """Vector of :func:`monomial_norm` values, batching uncached entries."""
    gammas = [tuple(int(g) for g in gamma) for gamma in gammas]
    out = np.empty(len(gammas))
    todo = []
    for i, g in enumerate(gammas):
        hit = cache.get(region.key, g) if cache is not None else None
        if hit is None:
            todo.append(i)
        else:
            out[i] = hit
    if not todo:
        return out
    if region.n == 2:
        G = np.array([gammas[i] for i in todo])
        vals = (2 * math.pi) ** region.n * _batched_shadow_integrals(region, G, rtol)
        for i, v in zip(todo, vals):
            out[i] = v
            if cache is not None:
                cache.put(region.key, gammas[i], v)
    else:
        for i in todo:
            out[i] = monomial_norm(region, gammas[i], rtol=rtol, cache=cache)
    return out


def _norm_table(region, indices, cache) -> np.ndarray:
    return monomial_norms(region, indices, cache=cache)


def choose_degree(region: RadialProfile, points, tol: float = 1e-8, d_min: int = 4, d_max: int = 400,
                  cache: NormCache | None = DEFAULT_CACHE) -> int:
    """Smallest total degree whose diagonal tail is below ``tol`` (relative).

    The diagonal series is evaluated at the componentwise maximum modulus
    of ``points``; its terms dominate the off-diagonal ones.
    """
    t = np.max(np.abs(as_points(points, region.n)).reshape(-1, region.n), axis=0)
    total = 0.0
    prev = None
    streak = 0
    for D in range(d_max + 1):
        G = _shell(region.n, D)
        if region.n == 2 and cache is not None and cache.get(region.key, G[0]) is None:
            # prefetch a block of shells in one batched quadrature
            block = [g for d in range(D, min(D + 32, d_max + 1)) for g in _shell(region.n, d)]
            monomial_norms(region, block, cache=cache)
        shell = float(np.sum(np.prod(t ** (2 * np.array(G)), axis=1) / monomial_norms(region, G, cache=cache)))
        total += shell
        if D >= d_min and prev:
            q = shell / prev
            tail = shell * q / (1 - q) if q < 1 else math.inf
            streak = streak + 1 if max(tail, shell) <= tol * total else 0
            if streak >= 2:
                return D
        prev = shell
    raise RuntimeError(f"diagonal tail did not reach {tol} below degree {d_max}")


def _shell(n, D):
    if n == 1:
        return [(D,)]
    return [(i,) + rest for i in range(D, -1, -1) for rest in _shell(n - 1, D - i)]


# -- kernel models ------------------------------------------------------------

class KernelModel:
    """Evaluable Bergman kernel ``K(z; conj(zeta))``."""

    region: RadialProfile

    @property
    def dim(self) -> int:
        return self.region.n

    def _check(self, *pts):
        for p in pts:
            if not np.all(self.region.contains(p)):
                raise OutsideDomainError(f"point outside {self.region.key}")

    def eval(self, z, zeta) -> np.ndarray:
        return self.jet(z, zeta, 0).value

    def jet(self, z, zeta, order: int) -> Jet:
        raise NotImplementedError

    def __call__(self, z, zeta):
        return self.eval(z, zeta)


class ClosedFormKernel(KernelModel):
    """Disc, polydisc or ball kernel."""

    def __init__(self, kind: str, n: int = 1):
        if kind == "disc":
            kind, n = "polydisc", 1
        if kind not in ("polydisc", "ball"):
            raise ValueError(f"no closed form for {kind!r}")
        self.kind = kind
        self.region = Polydisc(n) if kind == "polydisc" else Ball(n)
        self.check_points = True

    @property
    def key(self):
        return f"closed:{self.region.key}"

    def eval(self, z, zeta):
        n = self.dim
        z = as_points(z, n)
        zeta = as_points(zeta, n)
        if self.check_points:
            self._check(z, zeta)
        if self.kind == "polydisc":
            return np.prod(1.0 / (math.pi * (1.0 - z * np.conj(zeta)) ** 2), axis=-1)
        s = 1.0 - np.sum(z * np.conj(zeta), axis=-1)
        return math.factorial(n) / (math.pi**n * s ** (n + 1))

    def jet(self, z, zeta, order):
        n = self.dim
        z = as_points(z, n)
        zeta = as_points(zeta, n)
        if self.check_points:
            self._check(z, zeta)
        u = Jet.variables(z, order)
        if self.kind == "polydisc":
            out = None
            for j in range(n):
                f = (1.0 - u[j] * np.conj(zeta[..., j])) ** -2 * (1.0 / math.pi)
                out = f if out is None else out * f
            return out
        s = 1.0
        for j in range(n):
            s = s - u[j] * np.conj(zeta[..., j])
        return s ** (-(n + 1)) * (math.factorial(n) / math.pi**n)


def disc_kernel() -> ClosedFormKernel:
    return ClosedFormKernel("disc")


def ball_kernel(n: int) -> ClosedFormKernel:
    return ClosedFormKernel("ball", n)


class MonomialSeriesKernel(KernelModel):
    """Truncated orthogonal-monomial expansion of the Bergman kernel."""

    def __init__(self, region: RadialProfile, degree: int, cache: NormCache | None = DEFAULT_CACHE,
                 tail_tol: float = 1e-8):
        self.region = region
        self.degree = int(degree)
        self.tail_tol = tail_tol
        self.indices = np.array(multi_indices(region.n, self.degree), dtype=int)
        self.norms = _norm_table(region, [tuple(g) for g in self.indices], cache)
        if not np.all(np.isfinite(self.norms)) or np.any(self.norms <= 0):
            raise QuadratureError("monomial norms must be positive and finite")
        self._top = self.indices.sum(axis=1) == self.degree

    @classmethod
    def for_points(cls, region, points, tol: float = 1e-8, cache: NormCache | None = DEFAULT_CACHE):
        return cls(region, choose_degree(region, points, tol, cache=cache), cache=cache, tail_tol=tol)

    @property
    def key(self):
        return f"series:{self.region.key}:D={self.degree}"

    def _weights(self, zeta) -> np.ndarray:
        # conj(zeta)^gamma / N_gamma, shape batch + (terms,)
        zc = np.conj(zeta)
        w = np.ones(zc.shape[:-1] + (len(self.indices),), dtype=complex)
        for j in range(self.dim):
            w = w * zc[..., j : j + 1] ** self.indices[:, j]
        return w / self.norms

    def _tail_check(self, z, zeta):
        diag = np.ones(z.shape[:-1] + (len(self.indices),))
        t = np.maximum(np.abs(z), np.abs(zeta))
        for j in range(self.dim):
            diag = diag * t[..., j : j + 1] ** (2 * self.indices[:, j])
        diag = diag / self.norms
        top = diag[..., self._top].sum(axis=-1)
        rel = top / diag.sum(axis=-1)
        if np.any(rel > self.tail_tol):
            warnings.warn(
                f"series truncation at degree {self.degree}: top shell carries {float(np.max(rel)):.2e} of the diagonal",
                SeriesTruncationWarning,
                stacklevel=3,
            )

    def eval(self, z, zeta):
        z = as_points(z, self.dim)
        zeta = as_points(zeta, self.dim)
        self._check(z, zeta)
        self._tail_check(z, zeta)
        terms = self._weights(zeta)
        for j in range(self.dim):
            terms = terms * z[..., j : j + 1] ** self.indices[:, j]
        return terms.sum(axis=-1)

    def jet(self, z, zeta, order):
        if order > self.degree:
            raise ValueError(f"jet order {order} exceeds series degree {self.degree}")
        z = as_points(z, self.dim)
        zeta = as_points(zeta, self.dim)
        self._check(z, zeta)
        self._tail_check(z, zeta)
        w = self._weights(zeta)
        n = self.dim
        # univariate jets of u_j^g: binom(g, b) z_j^(g - b)
        g = np.arange(self.degree + 1)
        tables = []
        for j in range(n):
            b = np.arange(order + 1)
            expo = g[:, None] - b[None, :]
            pw = np.where(expo >= 0, z[..., j, None, None] ** np.maximum(expo, 0), 0.0)
            tables.append(pw * binom(g[:, None], b[None, :]))
        coeffs = np.zeros(z.shape[:-1] + (order + 1,) * n, dtype=complex)
        for beta in multi_indices(n, order):
            prod = w
            for j in range(n):
                prod = prod * tables[j][..., self.indices[:, j], beta[j]]
            coeffs[(...,) + beta] = prod.sum(axis=-1)
        return Jet(coeffs, n)


class SuccessorKernel(KernelModel):
    """Kernel of the successor region built from the kernel of its base.

    When ``inner`` is itself a successor kernel, the exponent vector is
    padded with zeros over the inner fibre coordinates, which realises the
    iterated successor where every base coordinate is scaled by the
    product of all fibre factors.
    """

    def __init__(self, inner: KernelModel, spec: SuccessorSpec):
        self.inner = inner
        self.spec = spec
        if isinstance(inner, SuccessorKernel):
            base = inner.region.base
            if spec.n != base.n:
                raise ValueError("successor exponent vector does not match base dimension")
            chain = SuccessorChain(inner.region.chain.specs + (spec,))
            pad = inner.dim - spec.n
            self.region = SuccessorRegion(base, chain)
        else:
            if spec.n != inner.dim:
                raise ValueError("successor exponent vector does not match base dimension")
            pad = 0
            self.region = SuccessorRegion(inner.region, spec)
        self.alpha = np.concatenate([np.asarray(spec.alpha), np.zeros(pad)])
        self.k = spec.k
        self.expansion = expand_operator(tuple(self.alpha), self.k)

    @property
    def key(self):
        return f"successor:{self.region.key}:inner={getattr(self.inner, 'key', '?')}"

    def _split(self, p):
        m = self.inner.dim
        return p[..., :m], p[..., m:]

    def slice_jet(self, u0, zeta, eta, order) -> Jet:
        """Jet in ``u`` of the slice kernel over the fibre point ``eta``."""
        A = 1.0 - np.sum(np.abs(eta) ** 2, axis=-1)
        scale = A[..., None] ** (-self.alpha / 2.0)
        inner_jet = self.inner.jet(u0 * scale, zeta * scale, order)
        c = inner_jet.coeffs
        m = self.inner.dim
        for j in range(m):
            shape = [1] * m
            shape[j] = order + 1
            powers = scale[..., j, None] ** np.arange(order + 1)
            c = c * powers.reshape(powers.shape[:-1] + tuple(shape))
        return Jet(c * (A ** (-self.alpha.sum())).reshape(A.shape + (1,) * m), m)

    def jet(self, zw, zeta_eta, order):
        zw = as_points(zw, self.dim)
        zeta_eta = as_points(zeta_eta, self.dim)
        zw, zeta_eta = np.broadcast_arrays(zw, zeta_eta)
        self._check(zw, zeta_eta)
        z, w = self._split(zw)
        zeta, eta = self._split(zeta_eta)
        A = 1.0 - np.sum(np.abs(eta) ** 2, axis=-1)
        B0 = 1.0 - np.sum(w * np.conj(eta), axis=-1)
        if np.any(np.abs(B0) < BRANCH_FLOOR):
            raise BranchFloorError("|1 - <w, eta>| below the branch floor")
        var = Jet.variables(zw, order)
        m = self.inner.dim
        B = 1.0
        for i in range(self.k):
            B = B - var[m + i] * np.conj(eta[..., i])
        ratio = B ** -1 * A
        h = [var[j] * ratio ** self.alpha[j] if self.alpha[j] else var[j] for j in range(m)]
        h0 = np.stack([hj.value for hj in h], axis=-1)
        F = self.slice_jet(h0, zeta, eta, order + self.k)
        G = self.expansion.apply(F, h0)
        out = compose(G, h)
        pref = B ** (-(1 + self.k + self.alpha.sum())) * (A ** self.alpha.sum() / math.pi**self.k)
        return out * pref

    def eval(self, zw, zeta_eta):
        return self.jet(zw, zeta_eta, 0).value


def chain_kernel(inner: KernelModel, chain: SuccessorChain) -> SuccessorKernel:
    """Kernel of the iterated successor defined by ``chain``."""
    model = inner
    for spec in chain:
        model = SuccessorKernel(model, spec)
    return model


# -- functional surface ----------------------------------------------------------

def kernel_eval(model: KernelModel, z, zeta):
    out = model.eval(z, zeta)
    return complex(out[0]) if np.ndim(z) <= 1 and np.ndim(out) == 1 and out.shape == (1,) else out


def kernel_jet(model: KernelModel, z, zeta, order: int) -> Jet:
    if order < 0:
        raise ValueError("jet order must be nonnegative")
    return model.jet(z, zeta, order)


def _fibre_terms(spec, w, eta):
    w = as_points(w, spec.k)
    eta = as_points(eta, spec.k)
    A = 1.0 - np.sum(np.abs(eta) ** 2, axis=-1)
    if np.any(A <= 0) or np.any(np.sum(np.abs(w) ** 2, axis=-1) >= 1):
        raise ValueError("fibre points must lie in the open unit ball")
    B = 1.0 - np.sum(w * np.conj(eta), axis=-1)
    if np.any(np.abs(B) < BRANCH_FLOOR):
        raise BranchFloorError("|1 - <w, eta>| below the branch floor")
    return A, B


def h_point(spec: SuccessorSpec, z, w, eta) -> np.ndarray:
    """``z_j ((1 - |eta|^2) / (1 - <w, eta>))^alpha_j`` (principal branch)."""
    A, B = _fibre_terms(spec, w, eta)
    z = as_points(z, spec.n)
    return z * ((A / B)[..., None] ** np.asarray(spec.alpha))


def h_prime_point(spec: SuccessorSpec, z, w, eta) -> np.ndarray:
    """``z_j (1 - |eta|^2)^(alpha_j/2) / (1 - <w, eta>)^alpha_j``."""
    A, B = _fibre_terms(spec, w, eta)
    z = as_points(z, spec.n)
    a = np.asarray(spec.alpha)
    return z * A[..., None] ** (a / 2.0) / B[..., None] ** a


def slice_kernel(inner: KernelModel, spec: SuccessorSpec, eta, z, zeta):
    """Kernel of the fibre slice over ``eta`` by the biholomorphic transformation rule."""
    eta = as_points(eta, spec.k)
    A = 1.0 - np.sum(np.abs(eta) ** 2, axis=-1)
    if np.any(A <= 0):
        raise ValueError("fibre point must lie in the open unit ball")
    scale = A[..., None] ** (-np.asarray(spec.alpha) / 2.0)
    fz = as_points(z, spec.n) * scale
    fzeta = as_points(zeta, spec.n) * scale
    for p in (fz, fzeta):
        if not np.all(inner.region.contains(p)):
            raise OutsideDomainError("mapped point outside the base domain")
    out = A ** (-spec.total) * inner.eval(fz, fzeta)
    return complex(out[0]) if out.shape == (1,) and np.ndim(z) <= 1 else out


def successor_kernel(inner: KernelModel, spec: SuccessorSpec, zw, zeta_eta):
    """Bergman kernel of the successor of ``inner.region`` at a point pair."""
    model = SuccessorKernel(inner, spec)
    return kernel_eval(model, zw, zeta_eta)
