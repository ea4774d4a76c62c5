"""Ball automorphisms, Forelli-Rudin integrals and h-regularity ratios."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma, hyp2f1

from bergman_lab.domains import SuccessorSpec, disc, egg
from bergman_lab.forelli_rudin import fit_log, fit_power, forelli_rudin_a, forelli_rudin_b, forelli_rudin_sweep
from bergman_lab.kernels import SuccessorKernel, disc_kernel
from bergman_lab.mobius import (MobiusMap, elementary_bounds_check, identity_check, identity_residuals, mobius_sweep,
                                radial_reduction_check)
from bergman_lab.regularity import (NegRho, PowerWeight, RegularityProbe, SuccessorWeight, h_regularity_ratio,
                                    probe_point, summarize_regularity)
from bergman_lab.reports import merge_reports

# [DERIVED] phi_{1/2}(1/4) = (1/2 - 1/4) / (1 - 1/8) = 2/7
MOBIUS_QUARTER = 2 / 7


def a_oracle(eps, delta, r, k):
    """Hypergeometric closed form of the Forelli-Rudin volume integral (independent route)."""
    c = 1 + k - eps - delta
    return math.pi**k * gamma(1 - eps) / gamma(k + 1 - eps) * hyp2f1(c / 2, c / 2, k + 1 - eps, r * r)


def b_oracle(delta, r, k):
    t = (k - delta) / 2
    return 2 * math.pi**k / math.factorial(k - 1) * hyp2f1(t, t, k, r * r)


class TestMobius:
    def test_one_dimensional_value(self):
        m = MobiusMap([0.5])
        assert complex(m(np.array([0.25]))[0]) == pytest.approx(MOBIUS_QUARTER, rel=1e-15)

    def test_exchanges_zero_and_center(self):
        w = np.array([0.3 + 0.1j, -0.2j, 0.4])
        m = MobiusMap(w)
        np.testing.assert_allclose(m(np.zeros(3)), w, atol=1e-15)
        np.testing.assert_allclose(m(w), np.zeros(3), atol=1e-15)

    def test_zero_center_rejected(self):
        with pytest.raises(ValueError):
            MobiusMap([0.0, 0.0])

    def test_outside_center_rejected(self):
        with pytest.raises(ValueError):
            MobiusMap([0.8, 0.8])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_involution_and_identities(self, k, seed):
        rng = np.random.default_rng(seed)
        w = rng.standard_normal(2 * k)
        w = (w[:k] + 1j * w[k:]) / np.linalg.norm(w) * rng.uniform(0.05, 0.999)
        e = rng.standard_normal(2 * k)
        eta = (e[:k] + 1j * e[k:]) / np.linalg.norm(e) * rng.uniform(0, 0.999)
        res = identity_residuals(w[None], eta[None])
        for key, v in res.items():
            assert float(v.max()) <= 1e-12, key

    def test_maps_ball_to_ball(self):
        rng = np.random.default_rng(3)
        m = MobiusMap([0.6, 0.3j])
        z = rng.standard_normal((500, 4))
        z = (z[:, :2] + 1j * z[:, 2:]) * rng.uniform(0, 1, (500, 1)) / np.linalg.norm(z, axis=1, keepdims=True)
        assert np.all(np.linalg.norm(m(z), axis=1) < 1)

    def test_identity_check_report(self):
        rep = identity_check(MobiusMap([0.2, 0.5]), np.array([[0.1, 0.1j], [0.7, 0.0]]))
        assert rep.status == "pass"

    def test_sweep_small(self):
        rep = mobius_sweep((1, 2, 3), n_pairs=100, seed=1)
        assert rep.status == "pass" and rep.metrics["max_residual"] <= 1e-12

    def test_elementary_bounds(self):
        rep = elementary_bounds_check(20_000, k=2, alpha=(1.0, 2.0), seed=2)
        assert rep.status == "pass"
        assert rep.metrics["sup_ratio_two_bound"] < 2.0

    @pytest.mark.parametrize("alpha", [(1.0,), (2.0,)])
    def test_radial_reduction_disc(self, alpha):
        rep = radial_reduction_check(disc().default_rho(), SuccessorSpec(alpha, 1), 200, seed=4)
        assert rep.status == "pass", rep.metrics

    def test_radial_reduction_egg_base(self):
        rep = radial_reduction_check(egg((1.0, 2.0)).default_rho(), SuccessorSpec((1.0, 2.0), 2), 200, seed=5)
        assert rep.status == "pass", rep.metrics


class TestForelliRudin:
    def test_origin_value(self):
        # [DERIVED] a(eps, delta; 0) over the disc = int (1 - |eta|^2)^(-eps) dA = pi / (1 - eps)
        assert forelli_rudin_a(0.5, -0.25, [0.0]) == pytest.approx(2 * math.pi, rel=1e-10)

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("eps,delta", [(0.1, -0.5), (0.5, 0.0), (0.9, 0.25), (0.75, -0.25)])
    def test_against_hypergeometric(self, k, eps, delta):
        for r in (0.3, 0.9, 0.99):
            w = np.r_[r, np.zeros(k - 1)]
            assert forelli_rudin_a(eps, delta, w) == pytest.approx(a_oracle(eps, delta, r, k), rel=1e-8)

    def test_depends_on_modulus_only(self):
        w1 = np.array([0.6, 0.0])
        w2 = np.array([0.6 * np.exp(0.3j) / math.sqrt(2), 0.6j / math.sqrt(2)])
        assert forelli_rudin_a(0.3, -0.2, w1) == pytest.approx(forelli_rudin_a(0.3, -0.2, w2), rel=1e-10)

    def test_monotone_in_modulus(self):
        vals = [forelli_rudin_a(0.5, 0.1, [r]) for r in (0.0, 0.3, 0.6, 0.9, 0.99)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("k,delta", [(1, -0.3), (2, 0.5)])
    def test_sphere_integral(self, k, delta):
        r = 0.7
        val, se = forelli_rudin_b(delta, np.r_[r, np.zeros(k - 1)], n_samples=200_000, seed=1)
        assert abs(val - b_oracle(delta, r, k)) < 5 * se

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            forelli_rudin_a(1.0, 0.0, [0.5])
        with pytest.raises(ValueError):
            forelli_rudin_a(0.5, 0.0, [1.0])

    def test_fits_on_synthetic_data(self):
        gaps = np.array([1e-1, 1e-2, 1e-3])
        assert fit_power(gaps, 3 * gaps**-0.4)[0] == pytest.approx(-0.4)
        slope, _, r2 = fit_log(gaps, 2 - 5 * np.log(gaps))
        assert slope == pytest.approx(5) and r2 == pytest.approx(1)

    def test_sweep_negative_delta(self):
        rep = forelli_rudin_sweep(k=1, deltas=(-0.5,), eps_grid=(0.9,))
        assert rep.status == "pass"
        assert abs(rep.rows[0]["value"] + 0.5) <= 0.05

    def test_sweep_without_decision_eps_is_inconclusive(self):
        rep = forelli_rudin_sweep(k=1, deltas=(0.25,), eps_grid=(0.5,), decision_eps=0.9)
        assert rep.status == "inconclusive"


def _small_probe(**kw):
    base = {"eps_grid": (0.2, 0.8), "levels": 8, "n_samples": 20_000, "chunk_size": 5_000, "seed": 3}
    base.update(kw)
    return RegularityProbe(**base)


class TestRegularity:
    def test_probe_point_distance(self):
        for region in (disc(), SuccessorWeight(SuccessorSpec((2.0,), 1), disc().default_rho()).region):
            z = probe_point(region, 0.125)
            assert float(region.gauge(np.abs(z)[None])[0]) == pytest.approx(0.875, rel=1e-12)

    def test_invalid_probe(self):
        with pytest.raises(ValueError):
            RegularityProbe(eps_grid=(1.2,))
        with pytest.raises(ValueError):
            RegularityProbe(levels=0)

    def test_scale_invariance(self):
        # R(z, eps) = h(z)^eps int |K| h^-eps: a constant factor in h cancels
        probe = _small_probe()
        K = disc_kernel()
        a = h_regularity_ratio(K, NegRho(disc().default_rho()), probe)
        b = h_regularity_ratio(K, NegRho(disc().default_rho(), scale=7.0), probe)
        np.testing.assert_allclose([r["ratio"] for r in a.rows], [r["ratio"] for r in b.rows], rtol=1e-12)

    def test_transpose_consistency_disc(self):
        probe = _small_probe()
        K = disc_kernel()
        h = NegRho(disc().default_rho())
        a = h_regularity_ratio(K, h, probe)
        b = h_regularity_ratio(K, h, _small_probe(transpose=True))
        np.testing.assert_allclose([r["ratio"] for r in a.rows], [r["ratio"] for r in b.rows], rtol=1e-12)

    def test_disc_boundary_distance_stable(self):
        rep = h_regularity_ratio(disc_kernel(), NegRho(disc().default_rho()), _small_probe(n_samples=40_000))
        assert rep.status == "pass", rep.metrics
        assert rep.metrics["max_last_decade_spread"] <= 3.0

    def test_successor_weight_ball2(self):
        spec = SuccessorSpec((1.0,), 1)
        K = SuccessorKernel(disc_kernel(), spec)
        rep = h_regularity_ratio(K, SuccessorWeight(spec, disc().default_rho()), _small_probe(n_samples=40_000))
        assert rep.status in ("pass", "inconclusive")
        assert rep.metrics["max_last_decade_spread"] <= 3.0

    def test_negative_control_squared_distance(self):
        # h = d^2 is not an admissible weight: the ratio keeps growing towards the boundary
        probe = RegularityProbe(eps_grid=(0.9,), levels=12, n_samples=40_000, chunk_size=10_000, seed=1)
        rep = h_regularity_ratio(disc_kernel(), PowerWeight(NegRho(disc().default_rho()), 2), probe)
        assert rep.status != "pass"
        assert rep.metrics["per_eps"]["eps=0.9"]["trend_slope"] < -0.3 or \
            rep.metrics["max_last_decade_spread"] > 3.0

    def test_region_mismatch(self):
        with pytest.raises(ValueError):
            h_regularity_ratio(disc_kernel(), NegRho(egg((1.0, 2.0)).default_rho()), _small_probe())

    def test_partial_runs_merge_to_full(self):
        K, h = disc_kernel(), NegRho(disc().default_rho())
        full = h_regularity_ratio(K, h, _small_probe())
        parts = [h_regularity_ratio(K, h, _small_probe(chunks=c)) for c in ((0, 1), (1, 3), (3, 4))]
        merged = merge_reports(parts)
        assert merged.body_lines() == full.body_lines()

    def test_summarizer_rebuilds_report(self):
        rep = h_regularity_ratio(disc_kernel(), NegRho(disc().default_rho()), _small_probe())
        again = summarize_regularity(rep.settings, rep.chunks)
        assert again.body_lines() == rep.body_lines()
