"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test logs a one-line verdict (collected in the terminal summary under
"acceptance criteria") before asserting, so a failing criterion is
reported with its measured value.
"""
import time

import pytest

from bergman_lab.cli import main
from bergman_lab.config import SUITES, parse_config
from bergman_lab.domains import SuccessorSpec, disc
from bergman_lab.forelli_rudin import forelli_rudin_sweep
from bergman_lab.kernels import SuccessorKernel, ball_kernel, disc_kernel
from bergman_lab.mobius import mobius_sweep, radial_reduction_check
from bergman_lab.projection import reproducing_study
from bergman_lab.regularity import NegRho, RegularityProbe, SuccessorWeight, h_regularity_ratio
from bergman_lab.suites import ball_oracle_check, expansion_check, run_suite, series_oracle_check

pytestmark = pytest.mark.slow


def test_criterion_01_ball_oracle(acceptance_log):
    t0 = time.perf_counter()
    rep = ball_oracle_check(ks=(1, 2), n_pairs=100, seed=0, tol=1e-8)
    elapsed = time.perf_counter() - t0
    err = rep.metrics["max_rel_error"]
    ok = rep.status == "pass" and err <= 1e-8 and elapsed <= 60.0 and all(r["n_pairs"] >= 100 for r in rep.rows)
    acceptance_log(1, ok, f"successor vs ball kernel, k=1,2, 100 pairs each: max rel err {err:.2e} "
                          f"(<= 1e-8), {elapsed:.1f}s (<= 60s)")
    assert ok


def test_criterion_02_series_oracle(acceptance_log):
    rep = series_oracle_check(n_pairs=50, seed=0, tol=1e-5, fraction=0.6)
    err = rep.metrics["max_rel_error"]
    ok = rep.status == "pass" and err <= 1e-5 and len(rep.rows) == 50
    acceptance_log(2, ok, f"egg |z| < 1-|w|^2 vs monomial series (degree {rep.metrics['series_degree']} by "
                          f"diagonal-tail rule): max rel err {err:.2e} (<= 1e-5)")
    assert ok


def test_criterion_03_operator_expansion(acceptance_log):
    rep = expansion_check(n_max=3, k_max=4, n_jets=1000, seed=0, tol=1e-10)
    res = rep.metrics["max_abs_residual"]
    ok = rep.status == "pass" and res <= 1e-10 and rep.metrics["hand_cases_exact"]
    acceptance_log(3, ok, f"expanded vs sequential Euler factors, n<=3, k<=4, 1000 jets: max abs residual "
                          f"{res:.2e} (<= 1e-10); hand cases exact: {rep.metrics['hand_cases_exact']}")
    assert ok


def test_criterion_04_mobius_identities(acceptance_log):
    rep = mobius_sweep(ks=(1, 2, 3), n_pairs=1000, seed=0, tol=1e-12)
    inv = max(r["max_involution"] for r in rep.rows)
    worst = rep.metrics["max_residual"]
    ok = rep.status == "pass" and worst <= 1e-12 and inv <= 1e-12
    acceptance_log(4, ok, f"ball automorphism identities, k=1,2,3, 1000 pairs each: max residual {worst:.2e}, "
                          f"involution {inv:.2e} (<= 1e-12)")
    assert ok


def test_criterion_05_forelli_rudin_asymptotics(acceptance_log):
    rep = forelli_rudin_sweep(k=1)
    got = {r["delta"]: r for r in rep.rows if r["decision"]}
    ok = (abs(got[-0.5]["value"] + 0.5) <= 0.05 and abs(got[-0.25]["value"] + 0.25) <= 0.05
          and got[0.0]["value"] >= 0.99 and got[0.25]["value"] <= 2.0)
    acceptance_log(5, ok and rep.status == "pass",
                   f"k=1, eps={rep.settings['decision_eps']}: slopes {got[-0.5]['value']:.4f} (-0.5), "
                   f"{got[-0.25]['value']:.4f} (-0.25); delta=0 R^2 {got[0.0]['value']:.5f} (>= 0.99); "
                   f"delta=0.25 max/min {got[0.25]['value']:.3f} (<= 2)")
    assert ok and rep.status == "pass"


def test_criterion_06_defining_functions(acceptance_log):
    cfg = parse_config({"schema_version": 1, "suites": ["defining"], "sampling": {"seed": 0, "n": 10_000}})
    rep = run_suite("defining", cfg)
    statuses = {name: m["status"] for name, m in rep.metrics.items()}
    ok = rep.status == "pass" and set(statuses) == {"disc", "polydisc2", "ball2", "egg"}
    acceptance_log(6, ok, f"sampled properties at tol 1e-8 on 10^4 boundary-layer points: {statuses}")
    assert ok


def test_criterion_07_h_regularity(acceptance_log):
    probe = RegularityProbe(seed=0)
    spec = SuccessorSpec((1.0,), 1)
    cases = {
        "disc": h_regularity_ratio(disc_kernel(), NegRho(disc().default_rho()), probe),
        "B2": h_regularity_ratio(SuccessorKernel(disc_kernel(), spec), SuccessorWeight(spec, disc().default_rho()),
                                 probe),
    }
    ok = True
    parts = []
    for name, rep in cases.items():
        spread = rep.metrics["max_last_decade_spread"]
        rel = rep.metrics["max_rel_error"]
        ok &= rep.status == "pass" and spread <= 3.0 and rel < 0.5
        parts.append(f"{name}: spread {spread:.3f} (<= 3), max SE/ratio {rel:.3f} (< 0.5), {rep.status}")
    acceptance_log(7, ok, f"eps grid {list(probe.eps_grid)}: " + "; ".join(parts))
    assert ok


def test_criterion_08_reproducing_property(acceptance_log):
    counts = (10_000, 100_000, 1_000_000)
    ok = True
    parts = []
    for name, K in (("disc", disc_kernel()), ("B2", ball_kernel(2))):
        rep = reproducing_study(K, counts, degree=5, seed=0, tol=1e-3)
        m = rep.metrics
        ok &= rep.status == "pass" and m["max_abs_error"] <= 1e-3 and m["refinement_slope"] < 0
        parts.append(f"{name}: sup err {m['max_abs_error']:.2e} at {m['finest_nodes']} nodes, "
                     f"rate N^{m['refinement_slope']:.2f}")
    acceptance_log(8, ok, "degree<=5 polynomials, tol 1e-3: " + "; ".join(parts))
    assert ok


def test_criterion_09_radial_reduction(acceptance_log):
    d = disc().default_rho()
    reps = {name: radial_reduction_check(d, SuccessorSpec(alpha, 1), 1000, seed=0, tol=1e-10)
            for name, alpha in (("disc alpha=(1)", (1.0,)), ("egg alpha=(2)", (2.0,)))}
    ok = all(r.status == "pass" and r.metrics["max_residual"] <= 1e-10 for r in reps.values())
    acceptance_log(9, ok, "1000 triples: " + "; ".join(f"{n} max residual {r.metrics['max_residual']:.2e}"
                                                        for n, r in reps.items()) + " (<= 1e-10)")
    assert ok


# reduced budgets keep the double run short; determinism does not depend on budget size
DETERMINISM_ARGS = {
    "thm22": [],
    "lemma34": ["--delta", "-0.5", "0.25"],
    "mobius": ["--samples", "200"],
    "defining": ["--samples", "2000"],
    "schur": ["--samples", "20000", "--strata", "6", "--nodes", "256", "--inner", "300"],
    "project": ["--samples", "20000", "--nodes", "256", "--inner", "300"],
}


def test_criterion_10_determinism(acceptance_log, tmp_path, capsys):
    same = {}
    for suite in SUITES:
        bodies = []
        for run, stamp in (("a", "2000-01-01T00:00:00Z"), ("b", "2099-12-31T23:59:59Z")):
            out = tmp_path / run
            code = main(["verify", suite, "--seed", "3", "--out", str(out), "--timestamp", stamp]
                        + DETERMINISM_ARGS[suite])
            assert code in (0, 1, 3)
            bodies.append((out / f"{suite}.jsonl").read_bytes().split(b"\n", 1)[1])
        same[suite] = bodies[0] == bodies[1]
    capsys.readouterr()
    ok = all(same.values())
    acceptance_log(10, ok, "byte-identical report bodies on re-run: " + ", ".join(
        f"{s}={'yes' if v else 'NO'}" for s, v in same.items()))
    assert ok
