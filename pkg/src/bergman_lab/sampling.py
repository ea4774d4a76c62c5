"""Seeded interior and boundary-layer sampling on Reinhardt regions.

Two samplers are provided:

* :func:`sample_interior` draws uniform points by rejection from a bounding
  product of discs (and unit balls for successor fibres).  Every accepted
  point carries the weight ``box volume / draws``, so weights sum to an
  unbiased volume estimate.
* :func:`sample_layers` stratifies by gauge distance to the boundary.  Layer
  ``m`` holds points whose gauge distance ``1 - g(z)`` lies in
  ``[outer 2^-m, outer 2^-(m-1))`` (the deepest layer extends to the
  boundary).  Directions follow the cone measure (a uniform interior point
  divided by its gauge) and the gauge radius is drawn from the exact
  ``lambda^(2N-1)`` law, so each layer is sampled uniformly and weighted by
  its exact share of the volume.

All randomness comes from :class:`numpy.random.Generator` instances spawned
from a :class:`numpy.random.SeedSequence`, so results are reproducible and
disjoint seed partitions can be merged.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .domains import DefiningFunction, RadialProfile, SuccessorRegion

__all__ = [
    "SampleScheme",
    "SampleSet",
    "SamplingError",
    "sample_interior",
    "sample_layers",
    "uniform_ball",
    "uniform_disc",
    "orthant_direction",
    "orthant_angles",
    "gauge_polar",
    "peak_samples",
]


class SamplingError(RuntimeError):
    """Raised for degenerate sampling requests (empty schemes, tiny acceptance)."""


@dataclass(frozen=True)
class SampleScheme:
    """Sample-count, stratification and seed configuration.

    Parameters
    ----------
    n_samples
        Number of accepted points requested.
    strata
        Number of boundary-distance layers ``M``.
    seed
        Root seed; there is deliberately no nondeterministic default.
    acceptance_floor
        Rejection sampling aborts if the measured acceptance rate falls
        below this value.
    """

    n_samples: int
    seed: int
    strata: int = 12
    acceptance_floor: float = 1e-3

    def __post_init__(self):
        if self.n_samples < 1:
            raise SamplingError("a sample scheme needs at least one sample")
        if self.strata < 1:
            raise SamplingError("at least one stratum is required")
        if not 0.0 < self.acceptance_floor < 1.0:
            raise SamplingError("acceptance floor must lie in (0, 1)")

    def rng(self, *key: int) -> np.random.Generator:
        """Generator for the sub-stream identified by ``key``."""
        return np.random.default_rng(np.random.SeedSequence([int(self.seed), *map(int, key)]))


@dataclass
class SampleSet:
    """Points with quadrature weights and boundary distances."""

    points: np.ndarray
    weights: np.ndarray
    boundary_distance: np.ndarray
    layer: np.ndarray = field(default=None)
    acceptance: float = 1.0

    def __len__(self):
        return len(self.weights)

    @property
    def volume_estimate(self) -> float:
        return float(np.sum(self.weights))

    def records(self):
        for i in range(len(self)):
            rec = {
                "point": [[float(c.real), float(c.imag)] for c in self.points[i]],
                "weight": float(self.weights[i]),
                "boundary_distance": float(self.boundary_distance[i]),
            }
            if self.layer is not None:
                rec["layer"] = int(self.layer[i])
            yield rec

    def to_jsonl(self, path) -> None:
        """Write one JSON record per point (coordinates as ``[re, im]`` pairs)."""
        with open(path, "w") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


# -- primitive draws ----------------------------------------------------------

def uniform_disc(rng: np.random.Generator, size, radius=1.0) -> np.ndarray:
    r = np.asarray(radius) * np.sqrt(rng.random(size))
    return r * np.exp(2j * np.pi * rng.random(size))


def uniform_ball(rng: np.random.Generator, size: int, k: int) -> np.ndarray:
    """Uniform points in the unit ball of C^k."""
    g = rng.standard_normal((size, 2 * k))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = rng.random(size) ** (1.0 / (2 * k))
    v = g * r[:, None]
    return v[:, :k] + 1j * v[:, k:]


def _box(region: RadialProfile):
    """Blocks of the proposal: list of (slice, kind, size) and its volume."""
    if isinstance(region, SuccessorRegion):
        base_r = np.asarray(region.base.radii, dtype=float)
        blocks = [("disc", j, base_r[j]) for j in range(region.base.n)]
        vol = float(np.prod(np.pi * base_r**2))
        start = region.base.n
        for k in region.chain.fibre_dims:
            blocks.append(("ball", start, k))
            vol *= math.pi**k / math.factorial(k)
            start += k
        return blocks, vol
    radii = np.asarray(region.radii, dtype=float)
    return [("disc", j, radii[j]) for j in range(region.n)], float(np.prod(np.pi * radii**2))


def _propose(rng, blocks, n, size):
    out = np.empty((size, n), dtype=complex)
    for kind, start, par in blocks:
        if kind == "disc":
            out[:, start] = uniform_disc(rng, size, par)
        else:
            out[:, start : start + par] = uniform_ball(rng, size, par)
    return out


def _rejection(region: RadialProfile, n_samples: int, floor: float, rng: np.random.Generator):
    blocks, vol = _box(region)
    kept = []
    n_kept = 0
    draws = 0
    batch = max(n_samples, 1024)
    while n_kept < n_samples:
        cand = _propose(rng, blocks, region.n, batch)
        ok = region.contains(cand)
        acc = float(np.mean(ok))
        if draws == 0 and acc < floor:
            raise SamplingError(
                f"acceptance rate {acc:.2e} below floor {floor:.2e} for {region.key}; region looks degenerate"
            )
        need = n_samples - n_kept
        idx = np.flatnonzero(ok)
        if len(idx) >= need:
            kept.append(cand[idx[:need]])
            draws += int(idx[need - 1]) + 1
            n_kept = n_samples
        else:
            kept.append(cand[idx])
            draws += batch
            n_kept += len(idx)
            batch = int(min(max(1.2 * need / max(acc, floor), 1024), 4_000_000))
    pts = np.concatenate(kept)
    return pts, vol, draws


def sample_interior(region: RadialProfile, scheme: SampleScheme, rho: DefiningFunction | None = None,
                    stream: int = 0) -> SampleSet:
    """Uniform interior sample with volume weights.

    Parameters
    ----------
    region
        Any bounded complete Reinhardt region, including successor regions.
    scheme
        Sample count, seed and acceptance floor.
    rho
        Defining function used for the recorded boundary distance
        (``-rho``); defaults to the region's own.
    stream
        Sub-stream index, for partitioned runs.
    """
    rng = scheme.rng(0, stream)
    pts, vol, draws = _rejection(region, scheme.n_samples, scheme.acceptance_floor, rng)
    rho = rho or region.default_rho()
    return SampleSet(
        points=pts,
        weights=np.full(len(pts), vol / draws),
        boundary_distance=-rho(pts),
        acceptance=scheme.n_samples / draws,
    )


def _layer_edges(strata: int, outer: float) -> np.ndarray:
    """Gauge-distance edges ``outer, outer/2, ..., outer 2^-(M-1), 0``."""
    edges = outer * 0.5 ** np.arange(strata)
    return np.append(edges, 0.0)


def sample_layers(region: RadialProfile, scheme: SampleScheme, outer: float = 1.0,
                  rho: DefiningFunction | None = None, stream: int = 0) -> SampleSet:
    """Boundary-stratified sample with exact per-layer volume weights.

    The total count is split evenly over ``scheme.strata`` layers.  Layer
    weights use the region volume (closed form for catalog shapes and
    single successors, quadrature otherwise).
    """
    if not 0.0 < outer <= 1.0:
        raise SamplingError("outer layer edge must lie in (0, 1]")
    M = scheme.strata
    counts = np.full(M, scheme.n_samples // M)
    counts[: scheme.n_samples % M] += 1
    if np.any(counts == 0):
        raise SamplingError(f"{scheme.n_samples} samples cannot fill {M} layers")
    rng = scheme.rng(1, stream)
    dirs, _, _ = _rejection(region, scheme.n_samples, scheme.acceptance_floor, rng)
    g = region.gauge(np.abs(dirs))
    dirs = dirs / g[:, None]
    N = region.n
    vol = region.volume()
    edges = _layer_edges(M, outer)
    lam_lo = 1.0 - edges[:-1]
    lam_hi = 1.0 - edges[1:]
    layer = np.repeat(np.arange(1, M + 1), counts)
    a = lam_lo[layer - 1] ** (2 * N)
    b = lam_hi[layer - 1] ** (2 * N)
    lam = (a + rng.random(len(layer)) * (b - a)) ** (1.0 / (2 * N))
    lam = np.minimum(lam, np.nextafter(1.0, 0.0))
    pts = dirs * lam[:, None]
    weights = vol * (b - a) / counts[layer - 1]
    rho = rho or region.default_rho()
    return SampleSet(points=pts, weights=weights, boundary_distance=-rho(pts), layer=layer)


# -- gauge-polar coordinates ---------------------------------------------------

def orthant_direction(psi: np.ndarray, n: int) -> np.ndarray:
    """Unit vector of the nonnegative orthant of R^n from hyperspherical angles.

    ``psi`` has trailing dimension ``n - 1`` with entries in ``[0, pi/2]``.
    """
    psi = np.asarray(psi, dtype=float)
    out = np.empty(psi.shape[:-1] + (n,))
    sprod = np.ones(psi.shape[:-1])
    for i in range(n - 1):
        out[..., i] = sprod * np.cos(psi[..., i])
        sprod = sprod * np.sin(psi[..., i])
    out[..., n - 1] = sprod
    return out


def orthant_angles(omega) -> np.ndarray:
    """Inverse of :func:`orthant_direction` (trailing dimension ``n`` to ``n - 1``)."""
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[-1]
    out = np.empty(omega.shape[:-1] + (n - 1,))
    for i in range(n - 1):
        out[..., i] = np.arctan2(np.linalg.norm(omega[..., i + 1 :], axis=-1), omega[..., i])
    return out


def gauge_polar(region: RadialProfile, lam, psi, phi):
    """Map gauge-polar coordinates to points and the volume density.

    ``zeta_j = lam r(omega) omega_j exp(i phi_j)`` where ``omega`` comes from
    ``psi`` and ``r(omega) = 1 / g(omega)`` is the boundary radius along
    ``omega``.  Returns ``(points, jacobian)`` with ``dV = jacobian
    dlam dpsi dphi``.
    """
    N = region.n
    lam = np.asarray(lam, dtype=float)
    psi = np.asarray(psi, dtype=float).reshape(lam.shape + (N - 1,))
    om = orthant_direction(psi, N)
    r = 1.0 / region.gauge(om)
    jac = lam ** (2 * N - 1) * r ** (2 * N) * np.prod(om, axis=-1)
    for i in range(N - 1):
        jac = jac * np.sin(psi[..., i]) ** (N - 2 - i)
    pts = (lam * r)[..., None] * om * np.exp(1j * np.asarray(phi))
    return pts, jac


# -- peak-adapted importance sampling ------------------------------------------

def _side_mass(length, a):
    return np.where(length <= a, length / a, 1.0 + np.log(np.maximum(length, a) / a))


def _loglocal_density(x, lo, hi, c, a):
    Z = _side_mass(c - lo, a) + _side_mass(hi - c, a)
    return 1.0 / (np.maximum(np.abs(x - c), a) * Z)


def _loglocal_sample(rng, shape, lo, hi, c, a):
    """Draw from the density ``∝ 1 / max(|x - c|, a)`` on ``[lo, hi]``."""
    left, right = c - lo, hi - c
    ml, mr = _side_mass(left, a), _side_mass(right, a)
    side = np.where(rng.random(shape) < ml / (ml + mr), -1.0, 1.0)
    L = np.where(side < 0, left, right)
    m = _side_mass(L, a)
    core = np.minimum(L, a)
    in_core = rng.random(shape) * m < core / a
    v = rng.random(shape)
    off = np.where(in_core, v * core, a * np.exp(v * np.log(np.maximum(L, a) / a)))
    return np.clip(c + side * off, lo, hi)


@dataclass(frozen=True)
class _Mixture1D:
    """Uniform + log-local (+ optional ``(x - lo)^-q``) mixture on ``[lo, hi]``.

    Bounds, centre and core width broadcast against the sample shape.
    """

    lo: object
    hi: object
    center: object
    core: object
    w_uniform: float
    w_local: float
    heavy: float | None = None

    @property
    def w_heavy(self):
        return 1.0 - self.w_uniform - self.w_local if self.heavy is not None else 0.0

    def sample(self, rng, shape):
        u = rng.random(shape)
        x = self.lo + (self.hi - self.lo) * rng.random(shape)
        loc = _loglocal_sample(rng, shape, self.lo, self.hi, self.center, self.core)
        x = np.where((u >= self.w_uniform) & (u < self.w_uniform + self.w_local), loc, x)
        if self.heavy is not None:
            hv = self.lo + (self.hi - self.lo) * rng.random(shape) ** (1.0 / (1.0 - self.heavy))
            x = np.where(u >= self.w_uniform + self.w_local, hv, x)
        return x

    def density(self, x):
        span = self.hi - self.lo
        p = self.w_uniform / span + self.w_local * _loglocal_density(x, self.lo, self.hi, self.center, self.core)
        if self.heavy is not None:
            y = np.maximum((x - self.lo) / span, 1e-300)
            p = p + self.w_heavy * (1.0 - self.heavy) * y ** (-self.heavy) / span
        return p


def _euler_weights(region: RadialProfile, t: np.ndarray) -> np.ndarray:
    """``w_j = t_j dg/dt_j / sum_k t_k dg/dt_k`` at modulus points ``t`` (central differences)."""
    M, N = t.shape
    out = np.zeros((M, N))
    for j in range(N):
        step = 1e-6 * np.maximum(t[:, j], 1e-3)
        e = np.zeros(N)
        e[j] = 1.0
        tp = t + step[:, None] * e
        tm = np.maximum(t - step[:, None] * e, 0.0)
        out[:, j] = t[:, j] * (region.gauge(tp) - region.gauge(tm)) / (tp[:, j] - tm[:, j])
    out = np.maximum(out, 0.0)
    tot = out.sum(axis=1, keepdims=True)
    return np.where(tot > 0, out / np.where(tot > 0, tot, 1.0), 1.0 / N)


def _wrap(x):
    return np.mod(x + math.pi, 2 * math.pi) - math.pi


class _TorusProposal:
    """Torus-angle law adapted to the complex-normal direction at a point.

    With Euler weights ``w`` (pivot ``j* = argmax w``) the angle offsets
    ``x = phi - phi0`` are written ``x_j = u + v_j`` with ``sum_j w_j v_j = 0``.
    The normal combination ``u = w . x`` (kernel width ~ distance ``d``) and
    the differences ``v_j``, ``j != j*`` (width ~ ``sqrt(d)``) are drawn from
    log-local laws on ``[-pi, pi]``; the result is wrapped onto the torus and
    its density summed over the lattice images that land in the sampling box.
    A uniform component of weight ``w_uniform`` is mixed in.
    """

    def __init__(self, phi0, w, core, w_uniform=0.3):
        self.phi0 = phi0  # (M, N)
        self.w = w  # (M, N)
        self.core = core  # (M, 1)
        self.w_uniform = w_uniform
        M, N = w.shape
        self.N = N
        self.jstar = np.argmax(w, axis=1)
        self.wstar = w[np.arange(M), self.jstar][:, None]
        # |x_j*| <= N pi and the other offsets stay within [-2 pi, 2 pi], so
        # only one coordinate of an image shift can exceed 1 in magnitude
        kmax = (N + 1) // 2
        ks = np.array(list(np.ndindex(*(2 * kmax + 1,) * N))) - kmax
        self.images = ks[np.sum(np.abs(ks) > 1, axis=1) <= 1]

    def _local_density(self, x):
        """Unwrapped local density at offsets ``x`` of shape (M, n, N)."""
        M, n, N = x.shape
        c = self.core[:, :, None]
        u = np.einsum("mnj,mj->mn", x, self.w)
        v = x - u[..., None]
        ok = np.abs(u) <= math.pi
        dens = _loglocal_density(u, -math.pi, math.pi, 0.0, self.core)
        mask = np.ones((M, 1, N), dtype=bool)
        mask[np.arange(M), 0, self.jstar] = False
        vd = np.where(mask, _loglocal_density(v, -math.pi, math.pi, 0.0, c), 1.0)
        ok &= np.all(np.where(mask, np.abs(v) <= math.pi, True), axis=-1)
        return np.where(ok, dens * np.prod(vd, axis=-1) * self.wstar, 0.0)

    def sample(self, rng, shape):
        M, n = shape
        N = self.N
        c = self.core[:, :, None]
        u = _loglocal_sample(rng, shape, -math.pi, math.pi, 0.0, self.core)
        v = _loglocal_sample(rng, shape + (N,), -math.pi, math.pi, 0.0, c)
        v[np.arange(M), :, self.jstar] = 0.0
        vstar = -np.einsum("mnj,mj->mn", v, self.w) / self.wstar
        v[np.arange(M), :, self.jstar] = vstar
        local = _wrap(u[..., None] + v)
        uni = rng.uniform(-math.pi, math.pi, shape + (N,))
        pick = rng.random(shape)[..., None] < self.w_uniform
        return self.phi0[:, None, :] + np.where(pick, uni, local)

    def density(self, phi):
        x0 = _wrap(phi - self.phi0[:, None, :])
        loc = np.zeros(x0.shape[:-1])
        for k in self.images:
            loc = loc + self._local_density(x0 + 2 * math.pi * k)
        return self.w_uniform / (2 * math.pi) ** self.N + (1.0 - self.w_uniform) * loc


def peak_samples(region: RadialProfile, centers, n: int, rng: np.random.Generator, q: float = 0.95):
    """Importance samples for integrals with a peak at ``centers`` and boundary growth.

    Points are drawn in gauge-polar coordinates (gauge distance ``s``,
    modulus angles ``psi``, torus angles ``phi``).  Each coordinate follows
    a mixture of a uniform law and a log-local law ``∝ 1/max(|x - c|, a)``
    around the centre's coordinate with core ``a`` = half the centre's gauge
    distance; ``s`` additionally has a ``s^(-q)`` component for integrands
    growing like ``s^(-eps)``, ``eps < q``, at the boundary.  The torus
    angles are drawn along the complex-normal combination and its
    complement separately (:class:`_TorusProposal`), matching the
    anisotropic shape of the kernel peak.

    Parameters
    ----------
    region
        Reinhardt region.
    centers
        Peak locations, shape ``(M, N)``.
    n
        Samples per centre.
    rng
        Random generator.
    q
        Exponent of the heavy boundary component, ``0 < q < 1``.

    Returns
    -------
    zeta, weights
        Points of shape ``(M, n, N)`` and weights ``(M, n)`` with
        ``E[sum_i weights_i g(zeta_i)] / n = int g dV`` per centre.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("heavy exponent must lie in (0, 1)")
    centers = np.atleast_2d(np.asarray(centers, dtype=complex))
    M, N = centers.shape
    shape = (M, n)
    t = np.abs(centers)
    d = np.clip(1.0 - region.gauge(t), 1e-12, 1.0)[:, None]
    core = 0.5 * d
    s_mix = _Mixture1D(0.0, 1.0, d, core, 0.2, 0.35, heavy=q)
    # keep samples strictly interior (the discarded layer s < 1e-12 is negligible)
    s = np.maximum(s_mix.sample(rng, shape), 1e-12)
    dens = s_mix.density(s)
    norm = np.linalg.norm(t, axis=1, keepdims=True)
    om0 = np.where(norm > 0, t / np.where(norm > 0, norm, 1.0), 1.0 / math.sqrt(N))
    psi0 = orthant_angles(om0)
    psi = np.empty(shape + (N - 1,))
    for i in range(N - 1):
        mix = _Mixture1D(0.0, 0.5 * math.pi, psi0[:, i : i + 1], core, 0.3, 0.7)
        psi[..., i] = mix.sample(rng, shape)
        dens = dens * mix.density(psi[..., i])
    torus = _TorusProposal(np.angle(centers), _euler_weights(region, t), core)
    phi = torus.sample(rng, shape)
    dens = dens * torus.density(phi)
    zeta, jac = gauge_polar(region, 1.0 - s, psi, phi)
    return zeta, jac / dens
