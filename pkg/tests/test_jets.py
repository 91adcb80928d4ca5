import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oufilter.errors import SingularNoiseError
from oufilter.jets import (
    Jet4,
    Polynomial,
    TaylorScalar,
    constant,
    from_callable,
    ratio_jet,
    validate_jet,
)
from oufilter import jets


def fd_derivative(fn, x, order, h):
    """Independent 4th-order central differences used as the test oracle."""
    stencils = {
        1: ([1, -8, 0, 8, -1], 12.0, 2),
        2: ([-1, 16, -30, 16, -1], 12.0, 2),
        3: ([1, -8, 13, 0, -13, 8, -1], 8.0, 3),
        4: ([-1, 12, -39, 56, -39, 12, -1], 6.0, 3),
    }
    weights, denom, half = stencils[order]
    offsets = range(-half, half + 1)
    return sum(w * fn(x + k * h) for w, k in zip(weights, offsets)) / (denom * h**order)


def poly_strategy():
    return st.lists(
        st.floats(min_value=-3.0, max_value=3.0, allow_nan=False), min_size=1, max_size=6
    )


class TestRatioJet:
    def test_cubic_over_identity_is_square(self):
        # f = x^3, g = x at x = 2; f/g = x^2 has jet (4, 4, 2, 0, 0)
        fj = Jet4(8.0, 12.0, 12.0, 6.0, 0.0)
        gj = Jet4(2.0, 1.0, 0.0, 0.0, 0.0)
        rj = ratio_jet(fj, gj)
        assert rj.as_tuple() == (4.0, 4.0, 2.0, 0.0, 0.0)

    def test_unit_denominator_returns_numerator(self):
        fj = Jet4(0.3, -1.2, 4.0, 0.5, -2.0)
        one = Jet4(1.0, 0.0, 0.0, 0.0, 0.0)
        assert ratio_jet(fj, one).as_tuple() == fj.as_tuple()

    def test_matches_finite_differences_on_random_quintics(self):
        rng = np.random.default_rng(7)
        x = 0.7
        for _ in range(20):
            fc = rng.uniform(-2, 2, size=6)
            # keep the denominator's roots away from x so the FD oracle
            # itself stays accurate at h = 0.01
            gc = np.concatenate([[rng.uniform(2.0, 3.0)], rng.uniform(-0.1, 0.1, size=5)])
            f, g = Polynomial(fc), Polynomial(gc)
            rj = ratio_jet(f.jet(x), g.jet(x))
            ratio = lambda p: f(p) / g(p)
            for order, claimed in enumerate(rj.as_tuple()[1:], start=1):
                oracle = fd_derivative(ratio, x, order, h=0.01)
                err = abs(claimed - oracle) / max(1.0, abs(oracle))
                assert err < 1e-5, (order, claimed, oracle)

    def test_raises_at_noise_zero_crossing(self):
        with pytest.raises(SingularNoiseError):
            ratio_jet(Jet4(1.0), Jet4(1e-13))

    @given(poly_strategy(), poly_strategy(), st.floats(min_value=-1.5, max_value=1.5))
    @settings(max_examples=80, deadline=None)
    def test_product_round_trip_recovers_numerator(self, fc, gc, x):
        # the quotient jet's conditioning scales like 1/g^4, so the strict
        # 1e-10 round-trip tolerance is meaningful only away from g's zeros
        f, g = Polynomial(fc), Polynomial(gc)
        gj = g.jet(x)
        if abs(gj.value) < 0.15:
            return
        back = ratio_jet(f.jet(x), gj) * gj
        for got, want in zip(back.as_tuple(), f.jet(x).as_tuple()):
            assert got == pytest.approx(want, rel=1e-10, abs=1e-10)

    @given(poly_strategy(), poly_strategy(), poly_strategy())
    @settings(max_examples=50, deadline=None)
    def test_linearity_in_the_numerator(self, f1c, f2c, gc):
        x, alpha, beta = 0.4, 2.0, -0.5
        g = Polynomial(gc)
        if abs(g(x)) < 1e-3:
            return
        f1, f2 = Polynomial(f1c), Polynomial(f2c)
        combo = alpha * f1.jet(x) + beta * f2.jet(x)
        lhs = ratio_jet(combo, g.jet(x))
        rhs = alpha * ratio_jet(f1.jet(x), g.jet(x)) + beta * ratio_jet(f2.jet(x), g.jet(x))
        for a, b in zip(lhs.as_tuple(), rhs.as_tuple()):
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


class TestJetArithmetic:
    def test_product_obeys_leibniz_on_monomials(self):
        x = 1.7
        sq = Polynomial([0, 0, 1.0]).jet(x)
        cube = Polynomial([0, 0, 0, 1.0]).jet(x)
        quintic = Polynomial([0, 0, 0, 0, 0, 1.0]).jet(x)
        got = sq * cube
        for a, b in zip(got.as_tuple(), quintic.as_tuple()):
            assert a == pytest.approx(b, rel=1e-13)

    def test_is_finite_flags_bad_components(self):
        assert Jet4(1.0, 2.0).is_finite
        assert not Jet4(1.0, math.nan).is_finite
        assert not Jet4(math.inf).is_finite


class TestValidateJet:
    def test_sine_jets_pass(self):
        sine = from_callable(jets.sin)
        assert validate_jet(sine, 0.3, tol=1e-5)

    def test_constant_passes(self):
        assert validate_jet(constant(5.0), -2.1, tol=1e-5)
        assert validate_jet(constant(5.0), 123.0, tol=1e-5)

    def test_corrupted_second_derivative_fails(self):
        class Lying(Polynomial):
            def jet(self, x):
                j = super().jet(x)
                return Jet4(j.value, j.d1, 1.1 * j.d2, j.d3, j.d4)

        fn = Lying([0.0, 0.0, 0.0, 2.0])  # 2x^3, d2 off by 10 %
        assert not validate_jet(fn, 0.8, tol=1e-5)


class TestTaylorFns:
    def test_polynomial_and_taylor_agree(self):
        poly = Polynomial([1.0, -2.0, 0.0, 0.5])
        taylor = from_callable(lambda x: 1.0 - 2.0 * x + 0.5 * x**3)
        for x in (-1.3, 0.0, 0.2, 2.4):
            for a, b in zip(poly.jet(x).as_tuple(), taylor.jet(x).as_tuple()):
                assert a == pytest.approx(b, rel=1e-12, abs=1e-12)

    def test_transcendental_jets_match_hand_derivatives(self):
        fn = from_callable(lambda x: jets.exp(x) * jets.sin(x))
        x = 0.6
        e, s, c = math.exp(x), math.sin(x), math.cos(x)
        want = (e * s, e * (s + c), 2 * e * c, 2 * e * (c - s), -4 * e * s)
        for a, b in zip(fn.jet(x).as_tuple(), want):
            assert a == pytest.approx(b, rel=1e-12)

    def test_quotient_sqrt_log_chain(self):
        fn = from_callable(lambda x: jets.sqrt(x) / jets.log(x))
        assert validate_jet(fn, 3.7, tol=1e-5)

    def test_vectorised_columns_match_scalar_jets(self):
        fn = from_callable(lambda x: jets.cos(x) + x**2 / (1.0 + x**2))
        xs = np.linspace(-2, 2, 9)
        cols = fn.jet_columns(xs)
        for i, x in enumerate(xs):
            np.testing.assert_allclose(cols[:, i], fn.jet(float(x)).as_tuple(), rtol=1e-12)

    def test_integer_power_matches_repeated_multiplication(self):
        t = TaylorScalar.seed(1.3)
        np.testing.assert_allclose((t**4).jet().as_tuple(), (t * t * t * t).jet().as_tuple())


class TestPolynomial:
    def test_values_vectorised(self):
        p = Polynomial([2.0, 0.0, -1.0])
        xs = np.array([-1.0, 0.0, 2.0])
        np.testing.assert_allclose(p.values(xs), 2.0 - xs**2)

    def test_rejects_empty_coefficients(self):
        with pytest.raises(ValueError):
            Polynomial([])
