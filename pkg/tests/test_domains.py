"""Reinhardt domains, successor regions, defining functions and samplers."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergman_lab.defining import check_defining_properties
from bergman_lab.domains import (DefiningFunction, NonSmoothPointError, SuccessorChain, SuccessorRegion, SuccessorSpec,
                                 _bisect_gauge, ball, contains, disc, egg, f_alpha, polydisc, rho, rho_gradient,
                                 successor_contains, tabulated)
from bergman_lab.sampling import SampleScheme, SamplingError, peak_samples, sample_interior, sample_layers

# [DERIVED] volumes
EGG12_VOLUME = math.pi**2 / 3        # {|z1|^2 + |z2| < 1}: int_D pi (1 - |z2|) dA = 2 pi^2 (1/2 - 1/3)
EGG_SUCCESSOR_VOLUME = math.pi**2 / 3  # {|z| < 1 - |w|^2}: pi int_D (1 - |w|^2)^2 dA = pi * pi/3
BALL2_VOLUME = math.pi**2 / 2

CATALOG = [disc(), polydisc(2), ball(2), ball(3), egg((1.0, 2.0)), SuccessorRegion(disc(), SuccessorSpec((2.0,), 1))]


class TestMembership:
    def test_disc(self):
        assert contains(disc(), np.array([0.5j]))
        assert not contains(disc(), np.array([1.0]))

    def test_ball_vs_polydisc(self):
        z = np.array([0.8, 0.8])
        assert contains(polydisc(2), z) and not contains(ball(2), z)

    def test_egg(self):
        e = egg((1.0, 2.0))
        assert contains(e, np.array([0.7, 0.4]))       # 0.49 + 0.4 < 1
        assert not contains(e, np.array([0.7, 0.6]))   # 0.49 + 0.6 > 1

    def test_successor_is_ball_for_alpha_one(self):
        R = SuccessorRegion(disc(), SuccessorSpec((1.0,), 1))
        pts = sample_interior(polydisc(2), SampleScheme(2000, seed=1)).points
        np.testing.assert_array_equal(R.contains(pts), ball(2).contains(pts))

    def test_successor_contains_function(self):
        spec = SuccessorSpec((2.0,), 1)
        assert successor_contains(disc(), spec, np.array([0.5]), np.array([0.5]))      # 0.5 < 0.75
        assert not successor_contains(disc(), spec, np.array([0.8]), np.array([0.5]))

    def test_f_alpha(self):
        out = f_alpha(SuccessorSpec((2.0,), 1), np.array([0.3]), np.array([0.5]))
        assert complex(out[0]) == pytest.approx(0.3 / 0.75)

    def test_fibre_outside_ball_rejected(self):
        with pytest.raises(ValueError):
            f_alpha(SuccessorSpec((1.0,), 1), np.array([0.1]), np.array([1.0]))

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            SuccessorSpec((0.0,), 1)
        with pytest.raises(ValueError):
            SuccessorSpec((1.0,), 0)
        with pytest.raises(ValueError):
            SuccessorChain(())

    def test_tabulated_profile(self):
        T = tabulated((0.0, 0.5, 1.0), (1.0, 0.8, 0.0))
        assert T.inside(np.array([0.2, 0.5]))
        assert not T.inside(np.array([0.9, 0.5]))

    @pytest.mark.parametrize("region", CATALOG, ids=lambda r: r.key)
    @settings(max_examples=40, deadline=None)
    @given(data=st.data())
    def test_complete_reinhardt(self, region, data):
        # shrinking every modulus independently stays inside
        t = np.array(data.draw(st.lists(st.floats(0, 1), min_size=region.n, max_size=region.n)))
        c = np.array(data.draw(st.lists(st.floats(0, 1), min_size=region.n, max_size=region.n)))
        if region.inside(t):
            assert region.inside(c * t)


class TestGauge:
    @pytest.mark.parametrize("region", CATALOG, ids=lambda r: r.key)
    def test_gauge_matches_bisection(self, region):
        t = np.abs(sample_interior(region, SampleScheme(200, seed=2)).points)
        np.testing.assert_allclose(region.gauge(t), _bisect_gauge(region.inside, t), rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("region", CATALOG, ids=lambda r: r.key)
    def test_gauge_homogeneous(self, region):
        t = np.abs(sample_interior(region, SampleScheme(50, seed=3)).points)
        np.testing.assert_allclose(region.gauge(0.5 * t), 0.5 * region.gauge(t), rtol=1e-12)

    def test_coordinate_bound_egg(self):
        e = egg((1.0, 2.0))
        # |z2| < 1 - |z1|^2
        assert float(e.coordinate_bound(np.array([0.6, 0.0]), 1)) == pytest.approx(0.64)

    def test_chain_fibre_bound_at_zero_base(self):
        R = SuccessorRegion(disc(), SuccessorChain((SuccessorSpec((1.0,), 2), SuccessorSpec((2.0,), 1))))
        t = np.array([0.0, 0.6, 0.0, 0.3])
        assert float(R.coordinate_bound(t, 2)) == pytest.approx(0.8, rel=1e-14)


class TestVolumes:
    def test_ball(self):
        assert ball(2).volume() == pytest.approx(BALL2_VOLUME, rel=1e-14)

    def test_egg(self):
        assert egg((1.0, 2.0)).volume() == pytest.approx(EGG12_VOLUME, rel=1e-12)

    def test_egg_successor(self):
        R = SuccessorRegion(disc(), SuccessorSpec((2.0,), 1))
        assert R.volume() == pytest.approx(EGG_SUCCESSOR_VOLUME, rel=1e-12)

    def test_rejection_volume_estimate(self):
        s = sample_interior(egg((1.0, 2.0)), SampleScheme(20_000, seed=4))
        assert s.volume_estimate == pytest.approx(EGG12_VOLUME, rel=0.03)


class TestDefiningFunctions:
    def test_signed_distance_disc(self):
        df = DefiningFunction(disc(), "signed_distance")
        assert rho(df, np.array([0.5])) == pytest.approx(-0.5)
        assert rho(df, np.array([1.5])) == pytest.approx(0.5)

    def test_gradient_ball(self):
        # rho = |z| - 1: d rho / d z_j = conj(z_j) / (2 |z|)
        df = DefiningFunction(ball(2), "signed_distance")
        z = np.array([[0.3 + 0.1j, -0.2j]])
        want = np.conj(z) / (2 * np.linalg.norm(z))
        np.testing.assert_allclose(rho_gradient(df, z), want, atol=1e-9)

    def test_nonsmooth_gradient_rejected(self):
        df = DefiningFunction(polydisc(2), "signed_distance")
        with pytest.raises(NonSmoothPointError):
            df.gradient(np.array([[0.9, 0.9]]))

    def test_signed_distance_requires_catalog(self):
        with pytest.raises(ValueError):
            DefiningFunction(egg((1.0, 2.0)), "signed_distance")

    @pytest.mark.parametrize("region", [disc(), polydisc(2), ball(2), egg((1.0, 2.0))], ids=lambda r: r.key)
    def test_properties_small_sample(self, region):
        rep = check_defining_properties(region.default_rho(), SampleScheme(1000, seed=5))
        assert rep.status == "pass", rep.metrics

    def test_broken_defining_function_fails(self):
        # a non-rotation-invariant function must fail the sampled checks
        class Skewed(DefiningFunction):
            def __call__(self, z):
                z = np.atleast_2d(z)
                return super().__call__(z) + 1e-3 * np.real(z[..., 0])

        rep = check_defining_properties(Skewed(disc(), "signed_distance"), SampleScheme(500, seed=6))
        assert rep.status == "fail"
        assert rep.metrics["rotation_violation"] > 1e-6


class TestSampling:
    def test_invalid_scheme(self):
        with pytest.raises(SamplingError):
            SampleScheme(0, seed=0)

    def test_deterministic(self):
        a = sample_interior(ball(2), SampleScheme(100, seed=9)).points
        b = sample_interior(ball(2), SampleScheme(100, seed=9)).points
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = sample_interior(ball(2), SampleScheme(100, seed=9), stream=1).points
        b = sample_interior(ball(2), SampleScheme(100, seed=9), stream=2).points
        assert not np.allclose(a, b)

    def test_layers_weights_and_placement(self):
        region = ball(2)
        s = sample_layers(region, SampleScheme(1200, seed=1, strata=6))
        assert s.volume_estimate == pytest.approx(region.volume(), rel=1e-12)
        dist = 1.0 - region.gauge(np.abs(s.points))
        edges = 0.5 ** np.arange(6)
        for m in range(1, 7):
            d = dist[s.layer == m]
            lo = 0.0 if m == 6 else edges[m]
            assert np.all(d <= edges[m - 1] + 1e-12) and np.all(d >= lo - 1e-12)

    @pytest.mark.parametrize("region", [disc(), ball(2), SuccessorRegion(disc(), SuccessorSpec((1.0,), 1))],
                             ids=lambda r: r.key)
    def test_peak_samples_unbiased_volume(self, region):
        center = 0.97 * np.full(region.n, 1 / math.sqrt(region.n))
        rng = np.random.default_rng(11)
        zeta, w = peak_samples(region, center[None, :], 100_000, rng)
        assert np.all(region.contains(zeta[0]))
        se = w.std() / math.sqrt(w.size)
        assert abs(w.mean() - region.volume()) < 5 * se + 1e-3 * region.volume()
