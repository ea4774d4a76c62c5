"""Discretized Bergman projection and absolute-kernel operator.

The operators are discretized on a jittered stratified node set: the region
is mapped onto a box by gauge-polar coordinates

    u = lambda^(2N) in [0, 1),  psi in [0, pi/2]^(N-1),  theta in [-pi, pi)^N,

(``lambda`` the gauge radius, ``psi`` hyperspherical angles of the modulus
direction, ``theta`` the torus angles).  The box is cut into ``m^(2N)``
equal cells with one uniform point per cell.  The map is onto the region,
so no point is rejected and the weights (cell volume times the Jacobian)
give an unbiased quadrature.  Per-stratum error decays like ``N^(-1/2)``;
the pooled error of a smooth integrand decays faster and is measured by
:func:`reproducing_study`.

Boundary-concentrated test functions need nodes close to the boundary: a
*graded* node set replaces ``u`` by the gauge distance ``s = (1 - x)^kappa``
(``x`` stratified), which puts a geometric range of boundary distances
into the outermost cells.

``L^p`` norms use the same nodes and weights as the operator, so the
discretization is consistent on both sides of each ratio.

Evaluating an operator *at* its own nodes (needed for ``L^p`` norms of the
image) cannot use the node sum: the kernel peak at the evaluation point
is not resolved by the other nodes.  :meth:`ProjectionOperator.adaptive`
evaluates the image at arbitrary points with per-point importance
sampling centred on the point (:func:`bergman_lab.sampling.peak_samples`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domains import RadialProfile
from .kernels import KernelModel
from .reports import FAIL, INCONCLUSIVE, PASS, EstimateReport, register_summarizer
from .sampling import SampleScheme, gauge_polar, peak_samples, sample_interior

__all__ = [
    "NodeSet",
    "stratified_nodes",
    "ProjectionOperator",
    "TestFamily",
    "project",
    "lp_norm",
    "lp_ratio",
    "lp_ratios",
    "reproducing_study",
    "idempotence_check",
    "adjointness_check",
    "schur_pipeline",
    "summarize_schur",
    "interior_probes",
    "monomial_exponents",
]

#: pairwise kernel evaluations per block
_BLOCK = 1 << 22

#: p values swept for information only (no pass/fail semantics)
EXPLORATORY_P = (1.1, 10.0)


# -- node sets ----------------------------------------------------------------

@dataclass(frozen=True)
class NodeSet:
    """Quadrature nodes with positive weights on a region."""

    region: RadialProfile
    points: np.ndarray
    weights: np.ndarray
    cells_per_axis: int
    seed: int
    grading: float | None = None

    def __post_init__(self):
        if np.any(~(self.weights > 0)):
            raise ValueError("quadrature weights must be positive")

    @property
    def size(self) -> int:
        return len(self.weights)

    def describe(self) -> dict:
        return {"region": self.region.key, "nodes": self.size, "cells_per_axis": self.cells_per_axis,
                "seed": self.seed, "grading": self.grading, "volume_estimate": float(self.weights.sum())}


def stratified_nodes(region: RadialProfile, n_nodes: int, seed: int = 0, grading: float | None = None) -> NodeSet:
    """One jittered point per cell of a ``m^(2N)`` grid, ``m = round(n_nodes^(1/2N))``.

    Parameters
    ----------
    region
        Reinhardt region.
    n_nodes
        Target node count (the actual count is ``m^(2N)``).
    seed
        Seed of the jitter.
    grading
        ``None``: the radial box coordinate is ``u = lambda^(2N)`` (uniform
        volume per cell).  A number ``kappa >= 1``: the radial coordinate
        ``x`` maps to gauge distance ``s = (1 - x)^kappa``, refining the grid
        towards the boundary; with ``kappa (1 - eps) >= 1`` the integrand
        ``h^(-eps)`` is bounded in the box coordinates.
    """
    N = region.n
    D = 2 * N
    m = max(1, int(round(n_nodes ** (1.0 / D))))
    rng = np.random.default_rng(np.random.SeedSequence([seed, N, m]))
    idx = np.indices((m,) * D).reshape(D, -1).T
    x = (idx + rng.random(idx.shape)) / m
    psi = 0.5 * math.pi * x[:, 1:N]
    theta = 2 * math.pi * x[:, N:] - math.pi
    if grading is None:
        lam = np.minimum(x[:, 0], 1.0 - 1e-15) ** (1.0 / D)
        pts, jac = gauge_polar(region, lam, psi, theta)
        # d(lambda) lambda^(2N-1) = du / 2N replaces the radial part of the Jacobian
        dens = jac / np.maximum(lam, 1e-300) ** (D - 1) / D
    else:
        if grading < 1.0:
            raise ValueError("grading exponent must be >= 1")
        # keep nodes strictly interior
        s = np.maximum((1.0 - x[:, 0]) ** grading, 1e-14)
        pts, jac = gauge_polar(region, 1.0 - s, psi, theta)
        dens = jac * grading * (1.0 - x[:, 0]) ** (grading - 1.0)
    cell = (0.5 * math.pi) ** (N - 1) * (2 * math.pi) ** N / m**D
    return NodeSet(region, pts, cell * dens, m, seed, grading)


def interior_probes(region: RadialProfile, n: int, gauge: float = 0.5, seed: int = 0) -> np.ndarray:
    """Uniform points of the region scaled into the sub-level set ``g <= gauge``."""
    return sample_interior(region, SampleScheme(n, seed)).points * gauge


# -- operator -----------------------------------------------------------------

@dataclass
class ProjectionOperator:
    """Quadrature discretization of the Bergman projection.

    ``mode = "signed"`` integrates against ``K(z; conj zeta)`` (the
    projection), ``mode = "absolute"`` against ``|K|`` applied to ``|f|``
    (the absolute-kernel operator of the Schur test).
    """

    kernel: KernelModel
    nodes: NodeSet
    mode: str = "signed"

    def __post_init__(self):
        if self.mode not in ("signed", "absolute"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.kernel.region.key != self.nodes.region.key:
            raise ValueError("kernel and node set live on different regions")

    def with_mode(self, mode: str) -> "ProjectionOperator":
        return ProjectionOperator(self.kernel, self.nodes, mode)

    def node_values(self, f) -> np.ndarray:
        vals = f(self.nodes.points) if callable(f) else np.asarray(f)
        return np.asarray(vals)

    def apply(self, values: np.ndarray, z) -> np.ndarray:
        """``sum_j w_j K(z; conj zeta_j) f_j`` for node values ``f_j`` (columns allowed)."""
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        self.kernel._check(z)
        values = np.asarray(values)
        vec = values.ndim == 1
        F = values[:, None] if vec else values
        if self.mode == "absolute":
            F = np.abs(F)
        F = F * self.nodes.weights[:, None]
        out = np.zeros((len(z), F.shape[1]), dtype=float if self.mode == "absolute" else complex)
        nodes = self.nodes.points
        check = getattr(self.kernel, "check_points", None)
        if check is not None:
            self.kernel.check_points = False
        try:
            zb = max(1, min(len(z), _BLOCK // max(len(nodes), 1)))
            nb = max(1, _BLOCK // zb)
            for i in range(0, len(z), zb):
                zi = z[i : i + zb, None, :]
                for j in range(0, len(nodes), nb):
                    K = self.kernel.eval(zi, nodes[None, j : j + nb, :])
                    if self.mode == "absolute":
                        K = np.abs(K)
                    out[i : i + zb] += K @ F[j : j + nb]
        finally:
            if check is not None:
                self.kernel.check_points = check
        return out[:, 0] if vec else out

    def apply_on_nodes(self, values: np.ndarray) -> np.ndarray:
        """The quadrature sum evaluated at its own nodes (dense, blockwise).

        Only meaningful where the node spacing resolves the kernel peak;
        use :meth:`adaptive` near the boundary.
        """
        return self.apply(values, self.nodes.points)

    def adaptive(self, fs, z, n_inner: int = 2000, seed: int = 0, q: float = 0.95) -> np.ndarray:
        """Operator applied to callables ``fs`` at points ``z`` by peak-adapted sampling.

        Each evaluation point gets its own importance sample concentrated at
        the point and at the boundary (:func:`peak_samples`), so the result
        stays accurate arbitrarily close to the boundary.  Seeds depend on
        ``(seed, block)`` only; the signed and absolute modes of the same
        configuration share their samples.

        Returns an array of shape ``(len(z), len(fs))``.
        """
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        single = callable(fs)
        fs = [fs] if single else list(fs)
        out = np.zeros((len(z), len(fs)), dtype=float if self.mode == "absolute" else complex)
        block = max(1, _BLOCK // (8 * n_inner))
        check = getattr(self.kernel, "check_points", None)
        if check is not None:
            self.kernel.check_points = False
        try:
            for b, i in enumerate(range(0, len(z), block)):
                zi = z[i : i + block]
                rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
                zeta, wts = peak_samples(self.kernel.region, zi, n_inner, rng, q=q)
                K = self.kernel.eval(np.broadcast_to(zi[:, None, :], zeta.shape), zeta)
                if self.mode == "absolute":
                    K = np.abs(K)
                for k, f in enumerate(fs):
                    fv = f(zeta)
                    if self.mode == "absolute":
                        fv = np.abs(fv)
                    out[i : i + block, k] = np.mean(K * fv * wts, axis=1)
        finally:
            if check is not None:
                self.kernel.check_points = check
        return out[:, 0] if single else out


def project(op: ProjectionOperator, f, z) -> np.ndarray:
    """Discretized ``(P f)(z)`` (or the absolute-kernel version)."""
    return op.apply(op.node_values(f), z)


def lp_norm(nodes: NodeSet, values: np.ndarray, p: float) -> float:
    """``(sum_j w_j |f_j|^p)^(1/p)`` on the node set."""
    return float(np.sum(nodes.weights * np.abs(values) ** p) ** (1.0 / p))


# -- test families --------------------------------------------------------------

def monomial_exponents(n: int, degree: int) -> np.ndarray:
    """All multi-indices of ``n`` variables with total degree ``<= degree``."""
    out = [g for g in np.ndindex(*(degree + 1,) * n) if sum(g) <= degree]
    return np.array(sorted(out, key=lambda g: (sum(g), g)), dtype=int)


def _polynomial(coeffs, exps):
    def q(z):
        z = np.asarray(z)
        return np.prod(z[..., None, :] ** exps, axis=-1) @ coeffs

    return q


@dataclass(frozen=True)
class TestFamily:
    """Named list of test functions ``(id, callable)``."""

    name: str
    members: tuple

    def __post_init__(self):
        if not self.members:
            raise ValueError("test family is empty")

    @classmethod
    def polynomials(cls, region: RadialProfile, degree: int, count: int, seed: int = 0) -> "TestFamily":
        """Random holomorphic polynomials of total degree ``<= degree``.

        Coefficients are complex Gaussian, rescaled so that
        ``sum |c_gamma| R^gamma = 1`` with ``R`` the coordinate radii; hence
        ``|q| <= 1`` on the region.
        """
        exps = monomial_exponents(region.n, degree)
        R = np.asarray(region.radii, dtype=float)
        scale = np.prod(R[None, :] ** exps, axis=1)
        rng = np.random.default_rng(np.random.SeedSequence([seed, region.n, degree]))
        members = []
        for i in range(count):
            c = rng.standard_normal(len(exps)) + 1j * rng.standard_normal(len(exps))
            c = c / np.sum(np.abs(c) * scale)
            members.append((f"poly{i}[deg<={degree}]", _polynomial(c, exps)))
        return cls(f"polynomials(deg<={degree})", tuple(members))

    @classmethod
    def boundary(cls, h: Callable, eps_grid, p: float) -> "TestFamily":
        """``f = h^(-eps/p)``: ``|f|^p = h^(-eps)`` concentrates at the boundary."""
        members = tuple((f"h^(-{eps}/p)", (lambda z, e=eps: h(z) ** (-e / p))) for eps in eps_grid)
        return cls("boundary", members)

    @classmethod
    def smooth(cls, region: RadialProfile, count: int, seed: int = 0) -> "TestFamily":
        """Random smooth non-holomorphic functions ``q1(z) + conj(q2(z)) + c |z|^2``."""
        exps = monomial_exponents(region.n, 2)
        rng = np.random.default_rng(np.random.SeedSequence([seed, region.n, 7]))
        members = []
        for i in range(count):
            c1 = rng.standard_normal(len(exps)) + 1j * rng.standard_normal(len(exps))
            c2 = rng.standard_normal(len(exps)) + 1j * rng.standard_normal(len(exps))
            c3 = complex(rng.standard_normal(), rng.standard_normal())
            q1, q2 = _polynomial(c1, exps), _polynomial(c2, exps)
            members.append((f"smooth{i}", (lambda z, q1=q1, q2=q2, c3=c3:
                                           q1(z) + np.conj(q2(z)) + c3 * np.sum(np.abs(z) ** 2, axis=-1))))
        return cls("smooth", tuple(members))


# -- studies -------------------------------------------------------------------

def lp_ratio(op: ProjectionOperator, family: TestFamily, p: float, n_inner: int = 2000,
             seed: int = 0) -> EstimateReport:
    """``||P f||_p / ||f||_p`` per family member on the operator's node set.

    ``P f`` is evaluated at every node with :meth:`ProjectionOperator.adaptive`;
    both norms use the node weights.  The status is ``pass`` unless a norm
    degenerates: the table reports family-relative suprema only.
    """
    return lp_ratios(op, family, [p], n_inner, seed)


def lp_ratios(op: ProjectionOperator, family: TestFamily, p_list, n_inner: int = 2000,
              seed: int = 0, family_by_p=None) -> EstimateReport:
    """:func:`lp_ratio` for several ``p`` sharing one set of operator samples.

    ``family_by_p`` optionally maps ``p`` to its own family (for families
    that depend on ``p``); otherwise ``family`` is used for every ``p``.
    """
    for p in p_list:
        if not 1.0 < p < math.inf:
            raise ValueError("p must lie in (1, inf)")
    nodes = op.nodes
    fams = [(p, family_by_p(p) if family_by_p else family) for p in p_list]
    fs = [f for _, fam in fams for _, f in fam.members]
    img = op.adaptive(fs, nodes.points, n_inner=n_inner, seed=seed)
    rows = []
    k = 0
    for p, fam in fams:
        for fid, f in fam.members:
            den = lp_norm(nodes, f(nodes.points), p)
            if not den > 1e-300 or not math.isfinite(den):
                raise FloatingPointError(f"degenerate norm for {fid}")
            rows.append({"function": fid, "p": p, "mode": op.mode, "ratio": lp_norm(nodes, img[:, k], p) / den})
            k += 1
    return EstimateReport(
        "lp-ratio",
        PASS,
        metrics={"max_ratio": max(r["ratio"] for r in rows), "mode": op.mode},
        rows=rows,
        settings={"family": family.name, "p_list": list(p_list), "kernel": getattr(op.kernel, "key", ""),
                  "n_inner": n_inner, "seed": seed, **op.nodes.describe()},
        provenance={"property": "family-relative L^p operator ratios of the discretized projection"},
    )


def reproducing_study(kernel: KernelModel, node_counts=(10_000, 100_000, 1_000_000), degree: int = 5,
                      n_polys: int = 5, n_probes: int = 16, probe_gauge: float = 0.5, seed: int = 0,
                      tol: float = 1e-3) -> EstimateReport:
    """Reproducing property ``||P q - q||_inf`` under node refinement.

    Pass iff the error at the finest node set is ``<= tol`` and the fitted
    slope of ``log error`` against ``log N`` is negative (the slope is
    reported as the measured convergence rate).
    """
    region = kernel.region
    family = TestFamily.polynomials(region, degree, n_polys, seed)
    probes = interior_probes(region, n_probes, probe_gauge, seed)
    exact = np.stack([f(probes) for _, f in family.members], axis=1)
    rows, errs, sizes = [], [], []
    for n in node_counts:
        nodes = stratified_nodes(region, n, seed)
        op = ProjectionOperator(kernel, nodes)
        vals = np.stack([f(nodes.points) for _, f in family.members], axis=1)
        err = np.max(np.abs(op.apply(vals, probes) - exact), axis=0)
        for (fid, _), e in zip(family.members, err):
            rows.append({"nodes": nodes.size, "function": fid, "max_abs_error": float(e)})
        errs.append(float(err.max()))
        sizes.append(nodes.size)
    slope = float(np.polyfit(np.log(sizes), np.log(errs), 1)[0]) if len(sizes) > 1 else float("nan")
    ok = errs[-1] <= tol and (len(sizes) == 1 or slope < 0)
    return EstimateReport(
        "project",
        PASS if ok else FAIL,
        metrics={"max_abs_error": errs[-1], "finest_nodes": sizes[-1], "refinement_slope": slope,
                 "errors": errs, "node_counts": sizes},
        rows=rows,
        settings={"region": region.key, "kernel": getattr(kernel, "key", ""), "degree": degree,
                  "n_polys": n_polys, "n_probes": n_probes, "probe_gauge": probe_gauge, "seed": seed,
                  "tol": tol, "node_counts": list(node_counts)},
        provenance={"property": "reproducing property of the Bergman projection on holomorphic polynomials"},
    )


def idempotence_check(op: ProjectionOperator, family: TestFamily, probes, n_inner: int = 2000,
                      seed: int = 0) -> float:
    """Max over probes and members of ``|P(Pf) - Pf|``.

    The inner ``P f`` is evaluated at the nodes adaptively, the outer
    application is the quadrature sum at the probes.
    """
    fs = [f for _, f in family.members]
    inner = op.adaptive(fs, op.nodes.points, n_inner=n_inner, seed=seed)
    direct = np.stack([op.node_values(f) for f in fs], axis=1)
    return float(np.max(np.abs(op.apply(inner, probes) - op.apply(direct, probes))))


def adjointness_check(op: ProjectionOperator, family: TestFamily) -> float:
    """Max relative mismatch ``|<Pf, g> - <f, Pg>|`` over consecutive member pairs."""
    w = op.nodes.weights
    vals = [op.node_values(f) for _, f in family.members]
    worst = 0.0
    for f, g in zip(vals, vals[1:] + vals[:1]):
        lhs = np.sum(w * op.apply_on_nodes(f) * np.conj(g))
        rhs = np.sum(w * f * np.conj(op.apply_on_nodes(g)))
        worst = max(worst, float(abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)))
    return worst


def schur_pipeline(K: KernelModel, h, probe, p_list=(1.5, 2.0, 3.0, 6.0), n_nodes: int = 4096,
                   node_seed: int = 0, n_inner: int = 2000, grading: float = 10.0, blowup: float = 1e3,
                   exploratory_p=EXPLORATORY_P) -> EstimateReport:
    """Premise (h-regularity) and conclusion (absolute-operator ratios) side by side.

    The boundary family ``h^(-eps/p)`` uses the probe's epsilon grid; its
    norms live on a boundary-graded node set.  The run is flagged when the
    premise passes but a conclusion ratio exceeds ``blowup``; that
    combination indicates a defect rather than a mathematical failure.
    Ratios for ``exploratory_p`` are reported without entering the verdict.
    """
    from .regularity import h_regularity_ratio

    premise = h_regularity_ratio(K, h, probe)
    nodes = stratified_nodes(K.region, n_nodes, node_seed, grading=grading)
    op = ProjectionOperator(K, nodes, "absolute")
    ps = tuple(p_list) + tuple(exploratory_p)
    rep = lp_ratios(op, TestFamily.boundary(h, probe.eps_grid, 2.0), ps, n_inner=n_inner, seed=node_seed,
                    family_by_p=lambda p: TestFamily.boundary(h, probe.eps_grid, p))
    rows = [{**r, "exploratory": r["p"] in exploratory_p} for r in rep.rows]
    settings = {"premise": premise.settings, "p_list": list(p_list), "exploratory_p": list(exploratory_p),
                "blowup": blowup, "n_inner": n_inner, "chunks": premise.settings["chunks"], **nodes.describe()}
    return summarize_schur(settings, premise.chunks, rows)


@register_summarizer("schur")
def summarize_schur(settings: dict, chunks, rows) -> EstimateReport:
    """Joint premise/conclusion report from premise chunks and conclusion rows."""
    from .regularity import summarize_regularity

    premise = summarize_regularity({**settings["premise"], "chunks": settings["chunks"]}, chunks)
    settings = {**settings, "premise": premise.settings}
    worst = max(r["ratio"] for r in rows if not r["exploratory"])
    flagged = premise.status == PASS and worst > settings["blowup"]
    if premise.status == INCONCLUSIVE:
        status = INCONCLUSIVE
    else:
        status = PASS if premise.status == PASS and not flagged else FAIL
    return EstimateReport(
        "schur",
        status,
        metrics={"premise_status": premise.status, "premise_max_spread": premise.metrics["max_last_decade_spread"],
                 "premise_max_rel_error": premise.metrics["max_rel_error"],
                 "premise_min_trend_slope": premise.metrics["min_trend_slope"], "max_conclusion_ratio": worst,
                 "flag_premise_pass_conclusion_blowup": flagged},
        rows=list(rows),
        settings=settings,
        provenance={"property": "Schur test: h-regularity premise of the absolute kernel and the resulting "
                                "L^p ratios of the absolute-kernel operator on h^(-eps/p) test functions"},
        chunks=list(chunks),
    )
