"""Truncated Taylor jets and the Euler-operator expansion."""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergman_lab.expansion import apply_factors_sequentially, euler, expand_operator, stirling2
from bergman_lab.jets import Jet, compose, multi_indices
from bergman_lab.suites import expansion_check, hand_expansion_cases


def _random_jet(rng, n, order, batch=()):
    shape = batch + (order + 1,) * n
    return Jet(rng.standard_normal(shape) + 1j * rng.standard_normal(shape), n)


class TestJets:
    def test_polynomial_partials(self):
        # f = x^3 y at (2, -1): f_x = 3x^2 y = -12, f_xy = 3x^2 = 12, f_xxx y = -6
        x, y = Jet.variables(np.array([2.0, -1.0]), 4)
        f = x * x * x * y
        assert complex(f.value) == pytest.approx(-8)
        assert complex(f.partial((1, 0))) == pytest.approx(-12)
        assert complex(f.partial((1, 1))) == pytest.approx(12)
        assert complex(f.partial((3, 0))) == pytest.approx(-6)
        assert complex(f.partial((3, 1))) == pytest.approx(6)

    def test_reciprocal(self):
        # d^m/dx^m 1/(1 - x) = m! / (1 - x)^(m+1)
        (x,) = Jet.variables(np.array([0.25 + 0.1j]), 6)
        r = (1 - x).reciprocal()
        for m in range(7):
            want = math.factorial(m) / (1 - (0.25 + 0.1j)) ** (m + 1)
            assert complex(r.partial((m,))) == pytest.approx(want, rel=1e-12)

    def test_fractional_power(self):
        # d^m/dx^m x^(1/2) at x0 = 2
        (x,) = Jet.variables(np.array([2.0]), 4)
        j = x ** 0.5
        for m in range(5):
            coef = math.prod(0.5 - i for i in range(m))
            assert complex(j.partial((m,))) == pytest.approx(coef * 2.0 ** (0.5 - m), rel=1e-13)

    def test_derivative_lowers_order(self):
        rng = np.random.default_rng(0)
        f = _random_jet(rng, 2, 5)
        d = f.derivative((1, 2))
        assert d.order == 2
        np.testing.assert_allclose(d.partial((0, 0)), f.partial((1, 2)))
        np.testing.assert_allclose(d.partial((1, 0)), f.partial((2, 2)))

    def test_truncate_and_mask(self):
        rng = np.random.default_rng(1)
        f = _random_jet(rng, 2, 4)
        assert f.coefficient((3, 2)) == 0          # total degree above the order is masked
        assert f.truncate(2).order == 2
        with pytest.raises(ValueError):
            f.truncate(5)

    def test_compose_chain_rule(self):
        # G(u) = u^2 with u = sin-like polynomial x + x^2; G(u(x)) = x^2 + 2x^3 + x^4
        (x,) = Jet.variables(np.array([0.3]), 4)
        u = x + x * x
        u0 = complex(u.value)
        (g_var,) = Jet.variables(np.array([u0]), 4)
        G = g_var * g_var
        h = compose(G, [u])
        direct = (x * x) + 2 * x * x * x + x * x * x * x
        np.testing.assert_allclose(h.partials(), direct.partials(), rtol=1e-13, atol=1e-14)

    def test_multi_indices_count(self):
        assert len(multi_indices(3, 4)) == math.comb(3 + 4, 4)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 3), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_product_rule(self, n, order, seed):
        # D^e (f g) = f D^e g + g D^e f for a unit multi-index e
        rng = np.random.default_rng(seed)
        f, g = _random_jet(rng, n, order), _random_jet(rng, n, order)
        e = (1,) + (0,) * (n - 1)
        lhs = (f * g).derivative(e)
        rhs = f.truncate(order - 1) * g.derivative(e) + g.truncate(order - 1) * f.derivative(e)
        np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, rtol=1e-12, atol=1e-12)


class TestExpansion:
    def test_stirling_numbers(self):
        assert [stirling2(4, s) for s in range(5)] == [0, 1, 7, 6, 1]
        assert stirling2(5, 3) == 25
        assert stirling2(0, 0) == 1

    def test_hand_cases_exact(self):
        for row in hand_expansion_cases():
            assert row["k1_exact"] and row["k2_exact"], row

    def test_k1_coefficients(self):
        # (1 + a + a theta) = (1 + a) + a z d/dz
        e = expand_operator((Fraction(3, 2),), 1)
        assert e.coeffs == {(0,): Fraction(5, 2), (1,): Fraction(3, 2)}

    def test_two_variable_k1(self):
        e = expand_operator((Fraction(1), Fraction(2)), 1)
        assert e.coeffs == {(0, 0): 4, (1, 0): 1, (0, 1): 2}

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            expand_operator((1.0,), 0)

    def test_euler_on_monomial(self):
        # z d/dz z^3 = 3 z^3
        z0 = np.array([0.4 - 0.2j])
        (z,) = Jet.variables(z0, 5)
        f = z * z * z
        np.testing.assert_allclose(euler(f, 0, z0).coeffs, (3 * f).truncate(4).coeffs, atol=1e-14)

    def test_constant_function(self):
        # on f = 1 the operator is multiplication by prod_l (l + |alpha|)
        alpha, k = (0.5, 1.5), 3
        f = Jet.constant(np.array([1.0]), 2, k + 1)
        out = expand_operator(alpha, k).apply(f, np.array([[0.1, 0.2]]))
        assert complex(out.value[0]) == pytest.approx(math.prod(l + 2.0 for l in range(1, k + 1)))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_expanded_equals_sequential(self, n, k, seed):
        rng = np.random.default_rng(seed)
        alpha = tuple(rng.uniform(0.25, 2.0, n))
        z0 = rng.uniform(-1, 1, (4, n)) + 1j * rng.uniform(-1, 1, (4, n))
        f = _random_jet(rng, n, k + 2, (4,))
        a = expand_operator(alpha, k).apply(f, z0)
        b = apply_factors_sequentially(alpha, k, f, z0)
        np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=1e-10, atol=1e-10)

    def test_expansion_check_report(self):
        rep = expansion_check(n_jets=20)
        assert rep.status == "pass"
        assert rep.metrics["max_abs_residual"] <= 1e-10
