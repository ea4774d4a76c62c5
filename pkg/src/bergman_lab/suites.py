"""Verification suites: oracle checks and the suite runners used by the CLI.

Kernel-engine checks
--------------------
* :func:`ball_oracle_check` -- the successor kernel over the disc with
  ``alpha = (1)`` lives on the unit ball of ``C^(1+k)``, whose kernel has a
  closed form;
* :func:`series_oracle_check` -- the successor kernel against the
  orthogonal-monomial series built directly on the successor region;
* :func:`expansion_check` -- expanded Stirling coefficients against
  sequential application of the Euler-type factors, plus exact hand cases.

Suite runners
-------------
``run_suite(name, config)`` returns one bundled report per suite
(:func:`bergman_lab.reports.bundle_reports`).  Without a region in the
configuration each runner uses its default catalog (the instances listed
in the README); with a region it checks that region.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .config import ConfigError, RegionConfig, RunConfig
from .defining import check_defining_properties
from .domains import Ball, Polydisc, RadialProfile, SuccessorRegion, SuccessorSpec, ball, disc, egg, polydisc
from .expansion import apply_factors_sequentially, expand_operator
from .forelli_rudin import forelli_rudin_sweep
from .jets import Jet
from .kernels import (ClosedFormKernel, KernelModel, MonomialSeriesKernel, SuccessorKernel, ball_kernel,
                      chain_kernel, disc_kernel)
from .mobius import elementary_bounds_check, mobius_sweep, radial_reduction_check
from .projection import (ProjectionOperator, TestFamily, adjointness_check, idempotence_check, interior_probes,
                         lp_ratios, reproducing_study, schur_pipeline, stratified_nodes)
from .regularity import NegRho, RegularityProbe, SuccessorWeight
from .reports import FAIL, PASS, EstimateReport, bundle_reports
from .sampling import SampleScheme, sample_interior

__all__ = [
    "ball_oracle_check",
    "series_oracle_check",
    "expansion_check",
    "hand_expansion_cases",
    "build_kernel",
    "interior_pairs",
    "run_suite",
    "SUITE_RUNNERS",
]


# -- helpers --------------------------------------------------------------------

def interior_pairs(region: RadialProfile, n_pairs: int, seed: int, fraction: float = 1.0):
    """Independent uniform interior points ``z`` and ``zeta``, scaled by ``fraction``.

    Scaling a point of a complete Reinhardt region by ``fraction`` keeps
    every coordinate within ``fraction`` of its bound given the others.
    """
    z = sample_interior(region, SampleScheme(n_pairs, seed=seed), stream=1).points
    zeta = sample_interior(region, SampleScheme(n_pairs, seed=seed), stream=2).points
    return fraction * z, fraction * zeta


def _rel_errors(a, b) -> np.ndarray:
    return np.abs(a - b) / np.abs(b)


def _closed_form(region: RadialProfile) -> ClosedFormKernel | None:
    if isinstance(region, Polydisc):
        return ClosedFormKernel("polydisc", region.n)
    if isinstance(region, Ball):
        return ClosedFormKernel("ball", region.n)
    return None


def build_kernel(region: RadialProfile, variant: str = "auto", points=None, tail_tol: float = 1e-8) -> KernelModel:
    """Kernel model of ``region`` in the requested variant.

    ``closed`` needs a polydisc or ball; ``successor`` needs a successor
    region (its base kernel is closed form when available, otherwise a
    monomial series sized for the base at gauge 0.95); ``series`` builds
    the monomial series on ``region`` itself, sized by the diagonal-tail
    rule at ``points`` (default: the radii scaled by 0.9).  ``auto`` picks
    the first that applies of successor, closed, series.
    """
    if variant == "auto":
        if isinstance(region, SuccessorRegion):
            variant = "successor"
        elif _closed_form(region) is not None:
            variant = "closed"
        else:
            variant = "series"
    if variant == "closed":
        K = _closed_form(region)
        if K is None:
            raise ConfigError(f"no closed-form kernel for {region.key}")
        return K
    if variant == "successor":
        if not isinstance(region, SuccessorRegion):
            raise ConfigError("the successor kernel needs a successor region (give alpha/k or a chain)")
        inner = _closed_form(region.base)
        if inner is None:
            inner = MonomialSeriesKernel.for_points(region.base, 0.95 * region.base.radii[None, :], tail_tol)
        return chain_kernel(inner, region.chain)
    if variant == "series":
        pts = 0.9 * region.radii[None, :] if points is None else points
        return MonomialSeriesKernel.for_points(region, pts, tail_tol)
    raise ConfigError(f"unknown kernel variant {variant!r}")


# -- kernel engine checks ----------------------------------------------------------

def ball_oracle_check(ks=(1, 2), n_pairs: int = 100, seed: int = 0, tol: float = 1e-8) -> EstimateReport:
    """Successor kernel over the disc with ``alpha = (1)`` against the ball kernel.

    For each fibre dimension ``k`` the region is the unit ball of
    ``C^(1+k)``; ``n_pairs`` uniform interior pairs are compared by
    relative error.
    """
    rows = []
    worst = 0.0
    for k in ks:
        K = SuccessorKernel(disc_kernel(), SuccessorSpec((1.0,), k))
        oracle = ball_kernel(1 + k)
        z, zeta = interior_pairs(K.region, n_pairs, seed + 1000 * k)
        err = _rel_errors(K.eval(z, zeta), oracle.eval(z, zeta))
        rows.append({"k": k, "n_pairs": n_pairs, "max_rel_error": float(err.max()),
                     "median_rel_error": float(np.median(err))})
        worst = max(worst, float(err.max()))
    return EstimateReport(
        "thm22-ball",
        PASS if worst <= tol else FAIL,
        metrics={"max_rel_error": worst},
        rows=rows,
        settings={"ks": list(ks), "n_pairs": n_pairs, "seed": seed, "tol": tol},
        provenance={"property": "successor kernel of the disc with alpha=(1) equals the Bergman kernel of "
                                "the unit ball of C^(1+k)"},
    )


def series_oracle_check(base: RadialProfile | None = None, spec: SuccessorSpec | None = None, n_pairs: int = 50,
                        seed: int = 0, tol: float = 1e-5, fraction: float = 0.6,
                        tail_tol: float = 1e-10) -> EstimateReport:
    """Successor kernel against the monomial series on the successor region.

    Defaults to the egg ``|z| < 1 - |w|^2`` (disc, ``alpha = (2)``,
    ``k = 1``).  Pairs are uniform interior points scaled by ``fraction``;
    the series degree follows the diagonal-tail rule at tolerance
    ``tail_tol`` for those points.  Hermitian symmetry
    ``K(z, zeta) = conj K(zeta, z)`` of the successor kernel is reported too.
    """
    base = disc() if base is None else base
    spec = SuccessorSpec((2.0,), 1) if spec is None else spec
    region = SuccessorRegion(base, spec)
    K = build_kernel(region, "successor", tail_tol=tail_tol)
    z, zeta = interior_pairs(region, n_pairs, seed, fraction)
    oracle = MonomialSeriesKernel.for_points(region, np.concatenate([z, zeta]), tail_tol)
    val = K.eval(z, zeta)
    err = _rel_errors(val, oracle.eval(z, zeta))
    herm = float(np.max(np.abs(val - np.conj(K.eval(zeta, z))) / np.abs(val)))
    worst = float(err.max())
    return EstimateReport(
        "thm22-series",
        PASS if worst <= tol and herm <= tol else FAIL,
        metrics={"max_rel_error": worst, "series_degree": oracle.degree, "max_hermitian_defect": herm},
        rows=[{"pair": i, "rel_error": float(e)} for i, e in enumerate(err)],
        settings={"region": region.key, "n_pairs": n_pairs, "seed": seed, "tol": tol, "fraction": fraction,
                  "tail_tol": tail_tol, "inner_kernel": getattr(K.inner, "key", "")},
        provenance={"property": "successor kernel equals the orthogonal-monomial Bergman series of the "
                                "successor region"},
    )


def hand_expansion_cases(values=(Fraction(1), Fraction(1, 2), Fraction(7, 3), Fraction(2))) -> list:
    """Exact one-variable coefficients for ``k = 1, 2`` against hand formulas.

    ``k = 1``: ``c_0 = 1 + a``, ``c_1 = a``;
    ``k = 2``: ``c_0 = (1 + a)(2 + a)``, ``c_1 = a(3 + 2a) + a^2``, ``c_2 = a^2``.
    """
    rows = []
    for a in values:
        e1 = expand_operator((a,), 1).coeffs
        e2 = expand_operator((a,), 2).coeffs
        want1 = {(0,): 1 + a, (1,): a}
        want2 = {(0,): (1 + a) * (2 + a), (1,): a * (3 + 2 * a) + a * a, (2,): a * a}
        rows.append({"a": str(a), "k1_exact": e1 == want1, "k2_exact": e2 == want2})
    return rows


def expansion_check(n_max: int = 3, k_max: int = 4, n_jets: int = 1000, seed: int = 0, tol: float = 1e-10,
                    extra_order: int = 2) -> EstimateReport:
    """Expanded coefficients against sequential factor application on random jets.

    For each ``(n, k)`` with ``n <= n_max`` and ``k <= k_max`` one exponent
    vector ``alpha`` (entries uniform in ``(0.25, 2)``) and ``n_jets`` random
    jets of order ``k + extra_order`` at random base points are drawn; the
    maximum absolute difference of the resulting jets is recorded.
    Taylor coefficients are drawn as ``N(0, 1) / beta!`` so every
    derivative is of unit size.
    """
    rows = []
    worst = 0.0
    for n in range(1, n_max + 1):
        for k in range(1, k_max + 1):
            rng = np.random.default_rng(np.random.SeedSequence([seed, n, k]))
            alpha = tuple(rng.uniform(0.25, 2.0, n))
            order = k + extra_order
            shape = (n_jets,) + (order + 1,) * n
            coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            grids = np.indices((order + 1,) * n)
            beta_fact = np.prod(np.vectorize(math.factorial)(grids), axis=0)
            jet = Jet(coeffs / beta_fact, n)
            z0 = rng.uniform(-1, 1, (n_jets, n)) + 1j * rng.uniform(-1, 1, (n_jets, n))
            a = expand_operator(alpha, k).apply(jet, z0)
            b = apply_factors_sequentially(alpha, k, jet, z0)
            res = float(np.max(np.abs(a.partials() - b.partials())))
            rows.append({"n": n, "k": k, "alpha": list(alpha), "jet_order": order, "max_abs_residual": res})
            worst = max(worst, res)
    hand = hand_expansion_cases()
    hand_ok = all(r["k1_exact"] and r["k2_exact"] for r in hand)
    return EstimateReport(
        "expansion",
        PASS if worst <= tol and hand_ok else FAIL,
        metrics={"max_abs_residual": worst, "hand_cases_exact": hand_ok},
        rows=rows + [{"hand_case": r["a"], "k1_exact": r["k1_exact"], "k2_exact": r["k2_exact"]} for r in hand],
        settings={"n_max": n_max, "k_max": k_max, "n_jets": n_jets, "seed": seed, "tol": tol,
                  "extra_order": extra_order},
        provenance={"property": "Stirling-number expansion of the product of Euler-type factors equals their "
                                "sequential application"},
    )


# -- suite runners -------------------------------------------------------------------

def _successor_spec(rc: RegionConfig, base: RadialProfile) -> SuccessorSpec:
    specs = rc.specs()
    if len(specs) > 1:
        raise ConfigError("this suite takes a single successor spec, not a chain")
    return specs[0] if specs else SuccessorSpec((1.0,) * base.n, rc.k or 1)


def run_thm22(cfg: RunConfig) -> EstimateReport:
    rc = cfg.region
    parts = {}
    if not rc.given and rc.k is None:
        parts["ball_oracle"] = ball_oracle_check((1, 2), cfg.n or 100, cfg.seed, cfg.tol("thm22", "ball_rel"))
        parts["series_oracle"] = series_oracle_check(n_pairs=50 if cfg.n is None else cfg.n, seed=cfg.seed,
                                                     tol=cfg.tol("thm22", "series_rel"),
                                                     tail_tol=cfg.tol("thm22", "series_tail"))
        parts["expansion"] = expansion_check(seed=cfg.seed, tol=cfg.tol("thm22", "expansion_abs"))
        return bundle_reports("thm22", parts, cfg.record())
    base = rc.base()
    spec = _successor_spec(rc, base)
    if isinstance(base, Polydisc) and base.n == 1 and spec.alpha == (1.0,):
        parts["ball_oracle"] = ball_oracle_check((spec.k,), cfg.n or 100, cfg.seed, cfg.tol("thm22", "ball_rel"))
    else:
        parts["series_oracle"] = series_oracle_check(base, spec, cfg.n or 50, cfg.seed,
                                                     cfg.tol("thm22", "series_rel"),
                                                     tail_tol=cfg.tol("thm22", "series_tail"))
    parts["expansion"] = expansion_check(n_max=len(spec.alpha), k_max=spec.k, seed=cfg.seed,
                                         tol=cfg.tol("thm22", "expansion_abs"))
    return bundle_reports("thm22", parts, cfg.record())


def run_lemma34(cfg: RunConfig) -> EstimateReport:
    k = cfg.region.k or 1
    deltas = tuple(cfg.option("deltas", (-0.5, -0.25, 0.0, 0.25)))
    eps = tuple(cfg.option("eps", (0.1, 0.25, 0.5, 0.75, 0.9)))
    decision = cfg.tol("lemma34", "decision_eps")
    if decision not in eps:
        eps = tuple(sorted(eps + (decision,)))
    rep = forelli_rudin_sweep(k=k, deltas=deltas, eps_grid=eps, slope_tol=cfg.tol("lemma34", "slope_tol"),
                              r2_min=cfg.tol("lemma34", "r2_min"),
                              bounded_ratio=cfg.tol("lemma34", "bounded_ratio"), decision_eps=decision)
    return bundle_reports("lemma34", {"forelli_rudin": rep}, cfg.record())


def run_mobius(cfg: RunConfig) -> EstimateReport:
    rc = cfg.region
    n = cfg.n or 1000
    tol = cfg.tol("mobius", "identity")
    rtol = cfg.tol("mobius", "radial")
    ks = (rc.k,) if rc.k is not None else (1, 2, 3)
    parts = {"identities": mobius_sweep(ks, n, cfg.seed, tol)}
    if rc.given:
        base = rc.base()
        spec = _successor_spec(rc, base)
        parts["elementary_bounds"] = elementary_bounds_check(max(n, 1000) * 100, spec.k, spec.alpha, cfg.seed)
        parts["radial_reduction"] = radial_reduction_check(base.default_rho(), spec, n, cfg.seed, rtol)
        return bundle_reports("mobius", parts, cfg.record())
    parts["elementary_bounds"] = elementary_bounds_check(max(n, 1000) * 1000, 1, (1.0, 2.0), cfg.seed)
    d = disc().default_rho()
    parts["radial_reduction_ball"] = radial_reduction_check(d, SuccessorSpec((1.0,), 1), n, cfg.seed, rtol)
    parts["radial_reduction_egg"] = radial_reduction_check(d, SuccessorSpec((2.0,), 1), n, cfg.seed, rtol)
    e = egg((1.0, 2.0))
    parts["radial_reduction_egg_base"] = radial_reduction_check(e.default_rho(), SuccessorSpec((1.0, 2.0), 2), n,
                                                                cfg.seed, rtol)
    return bundle_reports("mobius", parts, cfg.record())


def _defining_regions(cfg: RunConfig) -> dict:
    if cfg.region.given:
        r = cfg.region.region()
        return {r.key.replace("/", "|"): r}
    return {"disc": disc(), "polydisc2": polydisc(2), "ball2": ball(2), "egg": egg((1.0, 2.0))}


def run_defining(cfg: RunConfig) -> EstimateReport:
    scheme = SampleScheme(cfg.n or 10_000, seed=cfg.seed, strata=cfg.strata)
    tol = cfg.tol("defining", "property")
    parts = {name: check_defining_properties(r.default_rho(), scheme, tol=tol)
             for name, r in _defining_regions(cfg).items()}
    return bundle_reports("defining", parts, cfg.record())


def _weight(region: RadialProfile):
    """Default weight of a region: successor weight or minus the defining function."""
    if isinstance(region, SuccessorRegion):
        if len(region.chain) != 1:
            raise ConfigError("the successor weight is defined for a single successor spec")
        return SuccessorWeight(region.chain.specs[0], region.base.default_rho())
    return NegRho(region.default_rho())


def run_schur(cfg: RunConfig) -> EstimateReport:
    probe_kw = {"levels": cfg.strata, "n_samples": cfg.n or 200_000, "seed": cfg.seed,
                "stability": cfg.tol("schur", "stability")}
    if cfg.option("eps") is not None:
        probe_kw["eps_grid"] = tuple(cfg.option("eps"))
    if cfg.option("chunks") is not None:
        probe_kw["chunks"] = tuple(cfg.option("chunks"))
    probe = RegularityProbe(**probe_kw)
    if probe.chunks is not None and probe.chunk_range[1] > probe.n_chunks:
        raise ConfigError(f"chunk range {probe.chunk_range} exceeds the {probe.n_chunks} chunks of the budget")
    if cfg.region.given:
        region = cfg.region.region()
        cases = {"region": (build_kernel(region, cfg.kernel), _weight(region))}
    else:
        spec = SuccessorSpec((1.0,), 1)
        cases = {"disc": (disc_kernel(), NegRho(disc().default_rho())),
                 "ball2_successor": (SuccessorKernel(disc_kernel(), spec), SuccessorWeight(spec, disc().default_rho()))}
    kw = {"n_nodes": cfg.option("n_nodes", 4096), "n_inner": cfg.option("n_inner", 2000),
          "blowup": cfg.tol("schur", "blowup"), "node_seed": cfg.seed}
    if cfg.option("p") is not None:
        kw["p_list"] = tuple(cfg.option("p"))
    parts = {name: schur_pipeline(K, h, probe, **kw) for name, (K, h) in cases.items()}
    return bundle_reports("schur", parts, cfg.record())


def projection_invariants(K: KernelModel, n_nodes: int = 4096, seed: int = 0, n_inner: int = 2000,
                          idem_tol: float = 1e-3, adj_tol: float = 1e-8, p2_tol: float = 0.02,
                          p_list=(1.5, 3.0, 6.0)) -> EstimateReport:
    """Idempotence, adjointness, ``p = 2`` polynomial ratio and signed <= absolute monotonicity.

    Uses the ungraded node set: the test functions are bounded, and the
    tiny weights of a graded set would make the symmetric node sums of the
    adjointness check lose precision.
    """
    region = K.region
    nodes = stratified_nodes(region, n_nodes, seed)
    op = ProjectionOperator(K, nodes)
    polys = TestFamily.polynomials(region, 5, 3, seed)
    smooth = TestFamily.smooth(region, 3, seed)
    idem = idempotence_check(op, polys, interior_probes(region, 8, seed=seed), n_inner, seed)
    adj = adjointness_check(op, smooth)
    p2 = lp_ratios(op, polys, (2.0,), n_inner=n_inner, seed=seed)
    p2_dev = max(abs(r["ratio"] - 1.0) for r in p2.rows)
    signed = lp_ratios(op, smooth, p_list, n_inner=n_inner, seed=seed)
    absolute = lp_ratios(op.with_mode("absolute"), smooth, p_list, n_inner=n_inner, seed=seed)
    mono = [s["ratio"] <= a["ratio"] for s, a in zip(signed.rows, absolute.rows)]
    checks = {"idempotence": idem <= idem_tol, "adjointness": adj <= adj_tol, "p2_polynomial_ratio": p2_dev <= p2_tol,
              "signed_le_absolute": all(mono)}
    return EstimateReport(
        "projection-invariants",
        PASS if all(checks.values()) else FAIL,
        metrics={"idempotence_defect": idem, "adjointness_defect": adj, "p2_ratio_max_deviation": p2_dev,
                 "signed_le_absolute": all(mono)},
        rows=p2.rows + signed.rows + absolute.rows,
        settings={"region": region.key, "kernel": getattr(K, "key", ""), "n_inner": n_inner, "p_list": list(p_list),
                  "idem_tol": idem_tol, "adj_tol": adj_tol, "p2_tol": p2_tol, **nodes.describe()},
        provenance={"property": "idempotence, self-adjointness and L^2 isometry on holomorphic polynomials of the "
                                "discretized projection; signed ratios below absolute-kernel ratios"},
    )


def run_project(cfg: RunConfig) -> EstimateReport:
    finest = cfg.n or 1_000_000
    counts = tuple(cfg.option("node_counts", [c for c in (10_000, 100_000) if c < finest] + [finest]))
    degree = cfg.option("degree", 5)
    tol = cfg.tol("project", "sup_error")
    if cfg.region.given:
        region = cfg.region.region()
        K = build_kernel(region, cfg.kernel)
        parts = {"reproducing": reproducing_study(K, counts, degree=degree, seed=cfg.seed, tol=tol)}
    else:
        parts = {"reproducing_disc": reproducing_study(disc_kernel(), counts, degree=degree, seed=cfg.seed, tol=tol),
                 "reproducing_ball2": reproducing_study(ball_kernel(2), counts, degree=degree, seed=cfg.seed,
                                                        tol=tol)}
        K = disc_kernel()
    parts["invariants"] = projection_invariants(K, cfg.option("n_nodes", 4096), cfg.seed,
                                                cfg.option("n_inner", 2000), cfg.tol("project", "idempotence"),
                                                cfg.tol("project", "adjointness"), cfg.tol("project", "p2_ratio"))
    return bundle_reports("project", parts, cfg.record())


SUITE_RUNNERS = {
    "thm22": run_thm22,
    "lemma34": run_lemma34,
    "mobius": run_mobius,
    "defining": run_defining,
    "schur": run_schur,
    "project": run_project,
}


def run_suite(name: str, cfg: RunConfig) -> EstimateReport:
    """Run one suite of the closed set and return its bundled report."""
    if name not in SUITE_RUNNERS:
        raise ConfigError(f"unknown suite {name!r}")
    return SUITE_RUNNERS[name](cfg.for_suite(name))
