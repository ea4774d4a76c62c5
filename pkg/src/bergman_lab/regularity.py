"""Monte Carlo test of h-regularity for Bergman kernels.

For a weight ``h`` (positive inside, vanishing on the boundary) and a kernel
``K`` the ratio

    R(z, eps) = h(z)^(eps + l) * int |K(z; conj zeta)| h(zeta)^(-eps) dV(zeta)

is estimated at probe points ``z`` approaching the boundary.  Boundedness
cannot be proven numerically; the verdict tests *stability*: over the last
decade of probe distances the ratio may vary by at most a fixed factor.

Integration scheme
------------------
Each probe integral uses :func:`bergman_lab.sampling.peak_samples`:
importance sampling in gauge-polar coordinates from a product of mixtures
that resolve the kernel peak at the probe on all scales and the
``h^(-eps)`` growth at the boundary.

Samples are iid from the product mixture, grouped in chunks with seeds
derived from ``(seed, probe, chunk)``; chunk sums are stored so partial
runs merge exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domains import DefiningFunction, RadialProfile, SuccessorRegion, SuccessorSpec
from .kernels import KernelModel
from .reports import (FAIL, INCONCLUSIVE, PASS, ChunkStats, EstimateReport, combine_chunks,
                      register_summarizer)
from .sampling import peak_samples

__all__ = [
    "NegRho",
    "SuccessorWeight",
    "PowerWeight",
    "RegularityProbe",
    "h_regularity_ratio",
    "probe_point",
    "summarize_regularity",
]

DEFAULT_EPS = tuple(round(0.1 * i, 1) for i in range(1, 10))


# -- weights --------------------------------------------------------------

@dataclass(frozen=True)
class NegRho:
    """``h = -c rho`` for a defining function ``rho``."""

    df: DefiningFunction
    scale: float = 1.0

    @property
    def region(self) -> RadialProfile:
        return self.df.profile

    @property
    def key(self) -> str:
        return f"neg_rho[{self.df.profile.key};{self.df.mode};c={self.scale}]"

    def __call__(self, z) -> np.ndarray:
        return -self.scale * self.df(z)


@dataclass(frozen=True)
class SuccessorWeight:
    """``h(z, w) = c (1 - |w|^2) (-rho(f(z, w)))`` on a successor region."""

    spec: SuccessorSpec
    df: DefiningFunction
    scale: float = 1.0

    @property
    def region(self) -> SuccessorRegion:
        return SuccessorRegion(self.df.profile, self.spec)

    @property
    def key(self) -> str:
        return f"successor_weight[{self.region.key};{self.df.mode};c={self.scale}]"

    def __call__(self, zw) -> np.ndarray:
        zw = np.asarray(zw)
        n = self.spec.n
        z, w = zw[..., :n], zw[..., n:]
        a = 1.0 - np.sum(np.abs(w) ** 2, axis=-1)
        base = z / np.maximum(a, 1e-300)[..., None] ** (np.asarray(self.spec.alpha) / 2.0)
        return self.scale * a * (-self.df(base))


@dataclass(frozen=True)
class PowerWeight:
    """``h^p`` for another weight ``h`` (used as a deliberately wrong weight)."""

    inner: object
    power: float

    @property
    def region(self):
        return self.inner.region

    @property
    def key(self) -> str:
        return f"({self.inner.key})^{self.power}"

    def __call__(self, z) -> np.ndarray:
        return self.inner(z) ** self.power


# -- probe configuration ----------------------------------------------------

@dataclass(frozen=True)
class RegularityProbe:
    """Probe points, epsilon grid and Monte Carlo budget.

    Parameters
    ----------
    eps_grid
        Exponents tested; each must lie in ``(0, a)``.
    a
        Upper end of the admissible exponent window.
    l
        Type of the regularity estimate.
    levels
        Probe gauge distances are ``2^-m``, ``m = 1..levels``.
    n_samples
        Monte Carlo draws per probe (split in chunks of ``chunk_size``).
    seed
        Root seed.
    direction
        Nonnegative modulus direction of the probe ray (default diagonal).
    beta
        Optional multi-index: test ``|D^beta_z K|`` instead of ``|K|``.
    stability
        Allowed max/min ratio over the last decade of distances.
    q
        Exponent of the heavy boundary proposal; raised automatically
        above the largest ``eps``.
    transpose
        Integrate ``|K(zeta; conj z)|`` instead (the second Schur premise).
    chunks
        Optional ``(start, stop)`` chunk range for partial runs.
    """

    eps_grid: tuple = DEFAULT_EPS
    a: float = 1.0
    l: float = 0.0
    levels: int = 12
    n_samples: int = 200_000
    chunk_size: int = 20_000
    seed: int = 0
    direction: tuple | None = None
    beta: tuple | None = None
    stability: float = 3.0
    q: float = 0.95
    transpose: bool = False
    chunks: tuple | None = None

    def __post_init__(self):
        if not self.eps_grid:
            raise ValueError("empty epsilon grid")
        if any(not 0.0 < e < self.a for e in self.eps_grid):
            raise ValueError(f"every eps must lie in (0, {self.a})")
        if self.levels < 1 or self.n_samples < 2 or self.chunk_size < 2:
            raise ValueError("invalid probe budget")

    @property
    def distances(self) -> np.ndarray:
        return 0.5 ** np.arange(1, self.levels + 1)

    @property
    def n_chunks(self) -> int:
        return -(-self.n_samples // self.chunk_size)

    @property
    def chunk_range(self) -> tuple:
        return tuple(self.chunks) if self.chunks is not None else (0, self.n_chunks)

    @property
    def heavy_exponent(self) -> float:
        top = max(self.eps_grid)
        return self.q if self.q > top else 0.5 * (1.0 + top)

    def settings(self) -> dict:
        return {
            "eps_grid": list(self.eps_grid), "a": self.a, "l": self.l, "levels": self.levels,
            "n_samples": self.n_samples, "chunk_size": self.chunk_size, "seed": self.seed,
            "direction": None if self.direction is None else list(self.direction),
            "beta": None if self.beta is None else list(self.beta), "stability": self.stability,
            "q": self.heavy_exponent, "transpose": self.transpose, "chunks": list(self.chunk_range),
        }


# -- probes ------------------------------------------------------------------

def probe_point(region: RadialProfile, distance: float, direction=None) -> np.ndarray:
    """Point at gauge distance ``distance`` from the boundary on a modulus ray."""
    N = region.n
    om = np.full(N, 1.0 / math.sqrt(N)) if direction is None else np.asarray(direction, dtype=float)
    if np.any(om < 0) or not np.any(om > 0):
        raise ValueError("probe direction must be a nonzero nonnegative vector")
    om = om / np.linalg.norm(om)
    r = 1.0 / float(region.gauge(om[None, :])[0])
    return ((1.0 - distance) * r * om).astype(complex)


def _integrand_abs(K: KernelModel, z: np.ndarray, zeta: np.ndarray, beta, transpose: bool) -> np.ndarray:
    zb = np.broadcast_to(z, zeta.shape)
    if beta is not None:
        if transpose:
            raise ValueError("derivative tests are defined in the holomorphic slot of the probe only")
        jet = K.jet(zb, zeta, int(sum(beta)))
        return np.abs(jet.partial(tuple(beta)))
    if transpose:
        return np.abs(K.eval(zeta, zb))
    return np.abs(K.eval(zb, zeta))


def _chunk_values(K, h, probe: RegularityProbe, level: int, chunk: int) -> np.ndarray:
    """Importance-weighted ratio samples of one chunk, shape ``(n_eps, n)``."""
    region = h.region
    d = float(probe.distances[level])
    start = chunk * probe.chunk_size
    n = min(probe.chunk_size, probe.n_samples - start)
    rng = np.random.default_rng(np.random.SeedSequence([probe.seed, level, chunk]))
    z = probe_point(region, d, probe.direction)
    zeta, wts = peak_samples(region, z[None, :], n, rng, q=probe.heavy_exponent)
    zeta, wts = zeta[0], wts[0]
    kabs = _integrand_abs(K, z[None, :], zeta, probe.beta, probe.transpose)
    hz = float(h(z[None, :])[0])
    hzeta = h(zeta)
    base = kabs * wts
    eps = np.asarray(probe.eps_grid)[:, None]
    return base[None, :] * hzeta[None, :] ** (-eps) * hz ** (eps + probe.l)


def _cell(level, ie):
    return f"m={level + 1:02d}|eps#{ie}"


def h_regularity_ratio(K: KernelModel, h, probe: RegularityProbe, **context) -> EstimateReport:
    """Estimate ``R(z, eps)`` on the probe grid and judge its stability.

    Parameters
    ----------
    K
        Kernel model on ``h.region``.
    h
        Weight function (:class:`NegRho`, :class:`SuccessorWeight`, ...).
    probe
        Probe configuration.
    context
        Extra entries recorded in the report settings.
    """
    if K.region.key != h.region.key:
        raise ValueError(f"kernel region {K.region.key} differs from weight region {h.region.key}")
    chunks = []
    c0, c1 = probe.chunk_range
    for level in range(probe.levels):
        for c in range(c0, c1):
            vals = _chunk_values(K, h, probe, level, c)
            for ie in range(len(probe.eps_grid)):
                v = vals[ie]
                chunks.append(ChunkStats(_cell(level, ie), c, int(v.size), float(np.sum(v)), float(np.sum(v * v))))
    settings = {"kernel": getattr(K, "key", type(K).__name__), "weight": h.key, "region": h.region.key,
                **probe.settings(), **context}
    return summarize_regularity(settings, chunks)


@register_summarizer("h-regularity")
def summarize_regularity(settings: dict, chunks, rows=None) -> EstimateReport:
    """Build the report (table, stability verdict, trend slopes) from chunk sums.

    ``rows`` is accepted for the merge interface and ignored: every row is
    recomputed from the chunks.
    """
    cells = combine_chunks(chunks)
    eps_grid = settings["eps_grid"]
    levels = settings["levels"]
    dist = 0.5 ** np.arange(1, levels + 1)
    rows = []
    inconclusive = False
    stable_all = True
    per_eps = {}
    last = dist <= 10 * dist[-1]
    for ie, eps in enumerate(eps_grid):
        ratios = np.array([cells[_cell(m, ie)][0] for m in range(levels)])
        errs = np.array([cells[_cell(m, ie)][1] for m in range(levels)])
        for m in range(levels):
            bad = errs[m] > 0.5 * abs(ratios[m])
            inconclusive |= bool(bad)
            rows.append({"eps": eps, "distance": float(dist[m]), "ratio": float(ratios[m]),
                         "error": float(errs[m]), "n": cells[_cell(m, ie)][2], "inconclusive": bool(bad)})
        window = ratios[last]
        spread = float(window.max() / window.min()) if np.all(window > 0) else math.inf
        slope = float(np.polyfit(np.log(dist), np.log(np.maximum(ratios, 1e-300)), 1)[0]) if levels > 1 else 0.0
        stable = spread <= settings["stability"]
        stable_all &= stable
        per_eps[f"eps={eps}"] = {"last_decade_spread": spread, "trend_slope": slope, "stable": stable,
                                 "max_ratio": float(ratios.max()), "max_rel_error": float(np.max(errs / np.abs(ratios)))}
    if inconclusive:
        status = INCONCLUSIVE
    else:
        status = PASS if stable_all else FAIL
    metrics = {
        "max_last_decade_spread": max(v["last_decade_spread"] for v in per_eps.values()),
        "max_rel_error": max(v["max_rel_error"] for v in per_eps.values()),
        "min_trend_slope": min(v["trend_slope"] for v in per_eps.values()),
        "per_eps": per_eps,
    }
    return EstimateReport(
        "h-regularity",
        status,
        metrics=metrics,
        rows=rows,
        settings=settings,
        provenance={"property": "weighted absolute-kernel integral dominated by h^(-eps-l) at the probe "
                                "(stability of the ratio across the last decade of boundary distances)"},
        chunks=list(chunks),
    )
