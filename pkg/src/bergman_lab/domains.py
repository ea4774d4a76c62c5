"""Complete Reinhardt domains described by their modulus shadow.

A complete Reinhardt domain in C^n is determined by the set of modulus
vectors ``t = (|z_1|, ..., |z_n|)`` of its points.  Every region class in
this module works on that shadow: membership, Minkowski gauge, the
largest admissible value of one modulus when the others are fixed, and
nonsmooth loci for finite-difference gradients.

Successor regions (Hartogs-type domains fibred over unit balls) are
complete Reinhardt in all their coordinates, so they implement the same
interface and can be fed to every consumer of a plain profile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaln

__all__ = [
    "RadialProfile",
    "Polydisc",
    "Ball",
    "Egg",
    "Tabulated",
    "SuccessorRegion",
    "SuccessorSpec",
    "SuccessorChain",
    "DefiningFunction",
    "NonSmoothPointError",
    "disc",
    "polydisc",
    "ball",
    "egg",
    "tabulated",
    "contains",
    "rho",
    "rho_gradient",
    "f_alpha",
    "successor_contains",
    "iterated_contains",
]

_BISECT_STEPS = 200


class NonSmoothPointError(ValueError):
    """Raised when a gradient is requested too close to a nonsmooth locus."""


def as_points(z, n: int) -> np.ndarray:
    """Coerce ``z`` to a complex array with trailing dimension ``n``."""
    z = np.asarray(z)
    z = z.astype(np.result_type(z.dtype, np.complex128), copy=False)
    if z.ndim == 0:
        z = z.reshape(1)
    if z.shape[-1] != n:
        raise ValueError(f"expected points of dimension {n}, got trailing shape {z.shape[-1]}")
    return z


def _bisect_gauge(inside, t: np.ndarray) -> np.ndarray:
    """Gauge ``inf{g > 0 : t/g in profile}`` by vectorised bisection."""
    t = np.asarray(t, dtype=float)
    batch = t.shape[:-1]
    zero = np.all(t == 0.0, axis=-1)
    safe = np.where(zero[..., None], 1.0, t)
    hi = np.ones(batch)
    for _ in range(1100):
        bad = ~inside(safe / hi[..., None])
        if not bad.any():
            break
        hi = np.where(bad, 2.0 * hi, hi)
    lo = np.zeros(batch)
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        ok = inside(safe / mid[..., None])
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
        if np.all(hi - lo <= 4.0 * np.spacing(hi)):
            break
    return np.where(zero, 0.0, hi)


class RadialProfile:
    """Base class for bounded complete Reinhardt regions.

    Subclasses implement :meth:`inside` on modulus vectors; everything
    else has a generic (bisection based) fallback.
    """

    n: int
    kind: str = "profile"
    #: coordinate integrated analytically in monomial-norm quadrature
    closure_axis: int = -1

    # -- shadow geometry -------------------------------------------------
    def inside(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def radii(self) -> np.ndarray:
        """Bounding radius of every coordinate."""
        raise NotImplementedError

    def gauge(self, t: np.ndarray) -> np.ndarray:
        return _bisect_gauge(self.inside, t)

    def coordinate_bound(self, t: np.ndarray, j: int) -> np.ndarray:
        """Supremum of ``t_j`` with the other moduli held at ``t``."""
        t = np.array(t, dtype=float)
        batch = t.shape[:-1]
        lo = np.zeros(batch)
        hi = np.full(batch, float(self.radii[j]))
        base_in = self.inside(np.where(np.arange(self.n) == j, 0.0, t))
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            t[..., j] = mid
            ok = self.inside(t)
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
            if np.all(hi - lo <= 4.0 * np.spacing(np.maximum(hi, 1e-300))):
                break
        return np.where(base_in, lo, 0.0)

    def nonsmooth_distance(self, t: np.ndarray, mode: str) -> np.ndarray:
        """Distance in modulus space to the set where rho may fail to be smooth."""
        return np.linalg.norm(t, axis=-1)

    def signed_distance(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"no exact signed distance for {self.kind} profiles")

    @property
    def has_signed_distance(self) -> bool:
        return False

    def volume(self) -> float:
        from .kernels import monomial_norm

        return monomial_norm(self, (0,) * self.n)

    @property
    def key(self) -> str:
        """Stable identifier used by caches and report hashes."""
        return self.kind

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.key}>"

    # -- points ----------------------------------------------------------
    def contains(self, z) -> np.ndarray:
        z = as_points(z, self.n)
        return self.inside(np.abs(z))

    def default_rho(self) -> "DefiningFunction":
        mode = "signed_distance" if self.has_signed_distance else "gauge"
        return DefiningFunction(self, mode)


@dataclass(frozen=True, repr=False)
class Polydisc(RadialProfile):
    n: int = 1
    kind: str = field(default="polydisc", init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")

    @property
    def key(self):
        return "disc" if self.n == 1 else f"polydisc(n={self.n})"

    @property
    def radii(self):
        return np.ones(self.n)

    def inside(self, t):
        return np.max(t, axis=-1) < 1.0

    def gauge(self, t):
        return np.max(np.asarray(t, dtype=float), axis=-1)

    def coordinate_bound(self, t, j):
        others = np.delete(np.asarray(t, dtype=float), j, axis=-1)
        ok = np.all(others < 1.0, axis=-1) if others.shape[-1] else np.ones(others.shape[:-1], bool)
        return np.where(ok, 1.0, 0.0)

    @property
    def has_signed_distance(self):
        return True

    def signed_distance(self, t):
        t = np.asarray(t, dtype=float)
        inner = np.max(t, axis=-1) - 1.0
        outer = np.sqrt(np.sum(np.maximum(t - 1.0, 0.0) ** 2, axis=-1))
        return np.where(inner < 0.0, inner, outer)

    def nonsmooth_distance(self, t, mode):
        t = np.asarray(t, dtype=float)
        if self.n == 1:
            return t[..., 0]
        srt = np.sort(t, axis=-1)
        return np.minimum(srt[..., -1] - srt[..., -2], srt[..., -1])

    def volume(self):
        return math.pi**self.n


@dataclass(frozen=True, repr=False)
class Ball(RadialProfile):
    n: int = 2
    kind: str = field(default="ball", init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")

    @property
    def key(self):
        return f"ball(n={self.n})"

    @property
    def radii(self):
        return np.ones(self.n)

    def inside(self, t):
        return np.sum(np.asarray(t, dtype=float) ** 2, axis=-1) < 1.0

    def gauge(self, t):
        return np.linalg.norm(np.asarray(t, dtype=float), axis=-1)

    def coordinate_bound(self, t, j):
        t = np.asarray(t, dtype=float)
        rest = np.sum(np.delete(t, j, axis=-1) ** 2, axis=-1)
        return np.sqrt(np.maximum(1.0 - rest, 0.0))

    @property
    def has_signed_distance(self):
        return True

    def signed_distance(self, t):
        return np.linalg.norm(np.asarray(t, dtype=float), axis=-1) - 1.0

    def volume(self):
        return math.pi**self.n / math.factorial(self.n)


@dataclass(frozen=True, repr=False)
class Egg(RadialProfile):
    """``sum_j |z_j|^(2/p_j) < 1``."""

    p: tuple = (1.0, 1.0)
    kind: str = field(default="egg", init=False)

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if not self.p or any(v <= 0 for v in self.p):
            raise ValueError("egg exponents must be positive")

    @property
    def n(self):
        return len(self.p)

    @property
    def exponents(self) -> np.ndarray:
        return 2.0 / np.asarray(self.p)

    @property
    def key(self):
        return "egg(p=" + ",".join(repr(v) for v in self.p) + ")"

    @property
    def radii(self):
        return np.ones(self.n)

    def inside(self, t):
        return np.sum(np.asarray(t, dtype=float) ** self.exponents, axis=-1) < 1.0

    def gauge(self, t):
        t = np.asarray(t, dtype=float)
        s = self.exponents
        if np.all(s == s[0]):
            return np.sum(t ** s[0], axis=-1) ** (1.0 / s[0])
        g = _bisect_gauge(self.inside, t)
        # Newton polish keeps the gauge smooth enough for finite differences
        pos = g > 0
        gs = np.where(pos, g, 1.0)
        for _ in range(3):
            q = (t / gs[..., None]) ** s
            F = np.sum(q, axis=-1) - 1.0
            dF = -np.sum(s * q, axis=-1) / gs
            gs = np.where(pos, gs - F / np.where(pos, dF, -1.0), 1.0)
        return np.where(pos, gs, 0.0)

    def coordinate_bound(self, t, j):
        t = np.asarray(t, dtype=float)
        s = self.exponents
        rest = np.sum(np.delete(t, j, axis=-1) ** np.delete(s, j), axis=-1)
        return np.maximum(1.0 - rest, 0.0) ** (1.0 / s[j])

    def nonsmooth_distance(self, t, mode):
        t = np.asarray(t, dtype=float)
        d = np.linalg.norm(t, axis=-1)
        s = self.exponents
        rough = [j for j in range(self.n) if not (abs(s[j] - round(s[j])) < 1e-12 and round(s[j]) % 2 == 0)]
        for j in rough:
            d = np.minimum(d, t[..., j])
        return d

    def volume(self):
        s = self.exponents
        logv = self.n * math.log(2 * math.pi)
        logv += float(np.sum(gammaln(2.0 / s) - np.log(s))) - float(gammaln(1.0 + np.sum(2.0 / s)))
        return math.exp(logv)


@dataclass(frozen=True, repr=False)
class Tabulated(RadialProfile):
    """Two-dimensional profile ``t_2 < B(t_1)`` with ``B`` a decreasing table."""

    t1: tuple = (0.0, 1.0)
    t2: tuple = (1.0, 0.0)
    kind: str = field(default="tabulated", init=False)

    def __post_init__(self):
        t1 = np.asarray(self.t1, dtype=float)
        t2 = np.asarray(self.t2, dtype=float)
        if t1.shape != t2.shape or t1.size < 2:
            raise ValueError("tabulated boundary needs matching arrays with at least two nodes")
        if t1[0] != 0.0 or np.any(np.diff(t1) <= 0) or np.any(np.diff(t2) > 0) or t2[0] <= 0:
            raise ValueError("boundary table must start at t1=0 and decrease monotonically")
        object.__setattr__(self, "t1", tuple(t1))
        object.__setattr__(self, "t2", tuple(t2))
        object.__setattr__(self, "_curve", PchipInterpolator(t1, t2, extrapolate=False))

    n = 2

    @property
    def key(self):
        return f"tabulated(nodes={len(self.t1)},hash={hash((self.t1, self.t2)) & 0xFFFFFFFF:08x})"

    @property
    def radii(self):
        return np.array([self.t1[-1], self.t2[0]])

    def _boundary(self, a):
        b = self._curve(np.clip(a, 0.0, self.t1[-1]))
        return np.where(a < self.t1[-1], np.nan_to_num(b, nan=0.0), 0.0)

    def inside(self, t):
        t = np.asarray(t, dtype=float)
        return (t[..., 0] < self.t1[-1]) & (t[..., 1] < self._boundary(t[..., 0]))

    def nonsmooth_distance(self, t, mode):
        t = np.asarray(t, dtype=float)
        return np.min(t, axis=-1)


@dataclass(frozen=True)
class SuccessorSpec:
    """Exponent vector ``alpha`` and fibre dimension ``k`` of a successor."""

    alpha: tuple
    k: int = 1

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        object.__setattr__(self, "alpha", alpha)
        if not alpha or any(a <= 0 for a in alpha):
            raise ValueError("successor exponents must all be positive")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("fibre dimension k must be a positive integer")
        object.__setattr__(self, "k", int(self.k))

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def total(self) -> float:
        return float(sum(self.alpha))


@dataclass(frozen=True)
class SuccessorChain:
    specs: tuple

    def __post_init__(self):
        specs = tuple(self.specs)
        if not specs:
            raise ValueError("a successor chain needs at least one entry")
        if len({s.n for s in specs}) != 1:
            raise ValueError("all chain entries must share the base dimension")
        object.__setattr__(self, "specs", specs)

    def __iter__(self):
        return iter(self.specs)

    def __len__(self):
        return len(self.specs)

    @property
    def fibre_dims(self) -> tuple:
        return tuple(s.k for s in self.specs)


def _fibre_scale(alpha_rows: np.ndarray, wnorm2: np.ndarray) -> np.ndarray:
    """``prod_j (1 - |w_j|^2)^(alpha^(j)/2)`` for every base coordinate."""
    # alpha_rows: (l, n); wnorm2: (..., l)
    return np.exp(0.5 * np.log1p(-wnorm2) @ alpha_rows)


class SuccessorRegion(RadialProfile):
    """The region ``{(z, w_1..w_l): |w_j| < 1, f(z, w) in base}``.

    With a single chain entry this is the ordinary successor; longer
    chains scale every base coordinate by the product of all fibre
    factors.  The modulus vector is ``(|z|, |w_1|, ..., |w_l|)``.
    """

    kind = "successor"

    def __init__(self, base: RadialProfile, chain):
        if isinstance(chain, SuccessorSpec):
            chain = SuccessorChain((chain,))
        if chain.specs[0].n != base.n:
            raise ValueError("successor exponent vector does not match base dimension")
        self.base = base
        self.chain = chain
        self.n = base.n + sum(chain.fibre_dims)
        self.closure_axis = 0
        self._alpha = np.array([s.alpha for s in chain.specs])
        bounds = np.cumsum((base.n,) + chain.fibre_dims)
        self._slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]

    @property
    def key(self):
        parts = [f"a={list(s.alpha)},k={s.k}" for s in self.chain]
        return f"successor[{self.base.key};" + ";".join(parts) + "]"

    def __eq__(self, other):
        return isinstance(other, SuccessorRegion) and other.key == self.key

    def __hash__(self):
        return hash(self.key)

    @property
    def radii(self):
        return np.concatenate([self.base.radii, np.ones(self.n - self.base.n)])

    def _split(self, t):
        t = np.asarray(t, dtype=float)
        tz = t[..., : self.base.n]
        wn2 = np.stack([np.sum(t[..., sl] ** 2, axis=-1) for sl in self._slices], axis=-1)
        return tz, wn2

    def inside(self, t):
        tz, wn2 = self._split(t)
        fib = np.all(wn2 < 1.0, axis=-1)
        wsafe = np.where(fib[..., None], wn2, 0.0)
        return fib & self.base.inside(tz / _fibre_scale(self._alpha, wsafe))

    def gauge(self, t):
        a = self._alpha
        if len(self.chain) == 1 and np.all(a == a[0, 0]) and a[0, 0] in (1.0, 2.0):
            # the base gauge is 1-homogeneous, so g solves G = g (1 - W/g^2)^(a/2)
            tz, wn2 = self._split(t)
            G = self.base.gauge(tz)
            W = wn2[..., 0]
            if a[0, 0] == 1.0:
                return np.sqrt(G * G + W)
            return 0.5 * (G + np.sqrt(G * G + 4.0 * W))
        return super().gauge(t)

    def coordinate_bound(self, t, j):
        if j >= self.base.n:
            t = np.asarray(t, dtype=float)
            if not np.any(t[..., : self.base.n]):
                # base moduli at zero: only the fibre ball constrains w
                sl = next(s for s in self._slices if s.start <= j < s.stop)
                rest = np.sum(t[..., sl] ** 2, axis=-1) - t[..., j] ** 2
                return np.sqrt(np.maximum(1.0 - rest, 0.0))
            return super().coordinate_bound(t, j)
        tz, wn2 = self._split(t)
        fib = np.all(wn2 < 1.0, axis=-1)
        scale = _fibre_scale(self._alpha, np.where(fib[..., None], wn2, 0.0))
        return np.where(fib, scale[..., j] * self.base.coordinate_bound(tz / scale, j), 0.0)

    def nonsmooth_distance(self, t, mode):
        tz, wn2 = self._split(t)
        scale = _fibre_scale(self._alpha, np.minimum(wn2, 1.0 - 1e-300))
        return self.base.nonsmooth_distance(tz / scale, mode)

    def fibre_map(self, z, ws) -> np.ndarray:
        """Base point ``f(z, w_1, ..., w_l)``."""
        wn2 = np.stack([np.sum(np.abs(w) ** 2, axis=-1) for w in ws], axis=-1)
        return z / _fibre_scale(self._alpha, wn2)

    def volume(self):
        if len(self.chain) == 1 and isinstance(self.base, (Polydisc, Ball, Egg)):
            # integrate the slice volume (1-|w|^2)^|alpha| over the fibre ball
            spec = self.chain.specs[0]
            s = spec.total
            k = spec.k
            logv = k * math.log(math.pi) + math.lgamma(s + 1) - math.lgamma(k + s + 1)
            return self.base.volume() * math.exp(logv)
        return super().volume()


# -- catalog ---------------------------------------------------------------

def disc() -> Polydisc:
    return Polydisc(1)


def polydisc(n: int) -> Polydisc:
    return Polydisc(n)


def ball(n: int) -> Ball:
    return Ball(n)


def egg(p: Sequence[float]) -> Egg:
    return Egg(tuple(p))


def tabulated(t1, t2) -> Tabulated:
    return Tabulated(tuple(t1), tuple(t2))


# -- defining functions ----------------------------------------------------

@dataclass(frozen=True)
class DefiningFunction:
    """Rotation invariant defining function of a profile.

    ``mode`` is ``"signed_distance"`` (exact, catalog shapes only) or
    ``"gauge"`` (Minkowski gauge minus one, any profile).
    """

    profile: RadialProfile
    mode: str = "gauge"
    fd_scale: float = 1e-5

    def __post_init__(self):
        if self.mode not in ("signed_distance", "gauge"):
            raise ValueError(f"unknown defining-function mode {self.mode!r}")
        if self.mode == "signed_distance" and not self.profile.has_signed_distance:
            raise ValueError(f"{self.profile.kind} profiles have no exact signed distance; use gauge mode")

    def of_moduli(self, t) -> np.ndarray:
        if self.mode == "signed_distance":
            return self.profile.signed_distance(t)
        return self.profile.gauge(t) - 1.0

    def __call__(self, z) -> np.ndarray:
        z = as_points(z, self.profile.n)
        return self.of_moduli(np.abs(z))

    def fd_steps(self, z) -> np.ndarray:
        return self.fd_scale * (1.0 + np.abs(z))

    def nonsmooth_mask(self, z) -> np.ndarray:
        z = as_points(z, self.profile.n)
        limit = 10.0 * np.max(self.fd_steps(z), axis=-1)
        return self.profile.nonsmooth_distance(np.abs(z), self.mode) < limit

    def gradient_unchecked(self, z) -> np.ndarray:
        """Wirtinger gradient by central differences, no smoothness guard."""
        z = as_points(z, self.profile.n)
        h = self.fd_steps(z)
        grad = np.empty(z.shape, dtype=complex)
        for j in range(self.profile.n):
            e = np.zeros(self.profile.n)
            e[j] = 1.0
            hj = h[..., j : j + 1]
            dx = (self(z + hj * e) - self(z - hj * e)) / (2 * h[..., j])
            dy = (self(z + 1j * hj * e) - self(z - 1j * hj * e)) / (2 * h[..., j])
            grad[..., j] = 0.5 * (dx - 1j * dy)
        return grad

    def gradient(self, z) -> np.ndarray:
        bad = self.nonsmooth_mask(z)
        if np.any(bad):
            raise NonSmoothPointError(
                f"{int(np.sum(bad))} point(s) lie within 10 finite-difference steps of a nonsmooth locus"
            )
        return self.gradient_unchecked(z)


def contains(domain: RadialProfile, z) -> np.ndarray:
    """Open-domain membership of ``z`` (array of points or a single point)."""
    out = domain.contains(z)
    return bool(out) if np.ndim(out) == 0 else out


def rho(df: DefiningFunction, z):
    out = df(z)
    return float(out[0]) if np.ndim(z) <= 1 and out.shape == (1,) else out


def rho_gradient(df: DefiningFunction, z):
    return df.gradient(z)


# -- successor maps ----------------------------------------------------------

def _check_fibre(w) -> np.ndarray:
    wn2 = np.sum(np.abs(w) ** 2, axis=-1)
    if np.any(wn2 >= 1.0):
        raise ValueError("fibre point must lie in the open unit ball")
    return wn2


def f_alpha(spec: SuccessorSpec, z, w) -> np.ndarray:
    """``z_j / (1 - |w|^2)^(alpha_j/2)`` componentwise."""
    z = as_points(z, spec.n)
    w = as_points(w, spec.k)
    wn2 = _check_fibre(w)
    return z / (1.0 - wn2[..., None]) ** (np.asarray(spec.alpha) / 2.0)


def successor_contains(domain: RadialProfile, spec: SuccessorSpec, z, w):
    z = as_points(z, domain.n)
    w = as_points(w, spec.k)
    if spec.n != domain.n:
        raise ValueError("successor exponent vector does not match base dimension")
    wn2 = np.sum(np.abs(w) ** 2, axis=-1)
    fib = wn2 < 1.0
    wsafe = np.where(fib, wn2, 0.0)
    mapped = z / (1.0 - wsafe[..., None]) ** (np.asarray(spec.alpha) / 2.0)
    out = fib & domain.inside(np.abs(mapped))
    return bool(out) if out.shape == (1,) and np.ndim(z) == 1 else out


def iterated_contains(domain: RadialProfile, chain: SuccessorChain, z, *ws):
    if len(ws) != len(chain):
        raise ValueError("one fibre point per chain entry is required")
    z = as_points(z, domain.n)
    ws = [as_points(w, s.k) for w, s in zip(ws, chain)]
    for w in ws:
        _check_fibre(w)
    alpha = np.array([s.alpha for s in chain])
    wn2 = np.stack([np.sum(np.abs(w) ** 2, axis=-1) for w in ws], axis=-1)
    out = domain.inside(np.abs(z / _fibre_scale(alpha, wn2)))
    return bool(out) if out.shape == (1,) and np.ndim(z) == 1 else out
