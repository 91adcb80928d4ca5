import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oufilter.noise import (
    ColouredStats,
    OUParams,
    ou_autocorrelation,
    ou_stats,
    ou_step,
    stats_from_autocorrelation,
)


class TestOUStats:
    def test_first_parameter_set(self):
        s = ou_stats(OUParams(D=5.0, tau_cor=0.005))
        assert (s.mu1, s.mu2) == (10.0, 0.025)

    def test_zero_intensity(self):
        s = ou_stats(OUParams(D=0.0, tau_cor=1.0))
        assert (s.mu1, s.mu2) == (0.0, 0.0)

    def test_second_parameter_set(self):
        s = ou_stats(OUParams(D=5.0, tau_cor=0.001))
        assert (s.mu1, s.mu2) == (10.0, 0.005)

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            OUParams(D=-1.0, tau_cor=0.1)
        with pytest.raises(ValueError):
            OUParams(D=1.0, tau_cor=0.0)

    def test_correlation_time_recovered(self):
        s = ou_stats(OUParams(D=3.0, tau_cor=0.02))
        assert s.correlation_time == pytest.approx(0.02)


class TestStatsFromAutocorrelation:
    def test_ou_kernel_matches_closed_form(self):
        p = OUParams(D=5.0, tau_cor=0.005)
        s = stats_from_autocorrelation(ou_autocorrelation(p))
        assert s.mu1 == pytest.approx(10.0, rel=1e-6)
        assert s.mu2 == pytest.approx(0.025, rel=1e-6)

    def test_zero_kernel(self):
        s = stats_from_autocorrelation(lambda tau: 0.0, tail_cutoff=1.0, quad_step=0.01)
        assert (s.mu1, s.mu2) == (0.0, 0.0)

    def test_unit_exponential_kernel(self):
        # integral of e^tau over (-inf, 0] is 1; |integral of tau e^tau| is 1
        s = stats_from_autocorrelation(lambda tau: math.exp(tau))
        assert s.mu1 == pytest.approx(2.0, rel=1e-6)
        assert s.mu2 == pytest.approx(1.0, rel=1e-6)

    @pytest.mark.parametrize("tau_cor", [0.001, 0.005, 0.05])
    def test_quadrature_agrees_with_closed_form(self, tau_cor):
        p = OUParams(D=2.5, tau_cor=tau_cor)
        want = ou_stats(p)
        got = stats_from_autocorrelation(ou_autocorrelation(p))
        assert got.mu1 == pytest.approx(want.mu1, rel=1e-6)
        assert got.mu2 == pytest.approx(want.mu2, rel=1e-6)

    @given(st.floats(min_value=0.1, max_value=50.0))
    @settings(max_examples=25, deadline=None)
    def test_positively_homogeneous(self, c):
        base = stats_from_autocorrelation(lambda tau: math.exp(tau), tail_cutoff=40.0, quad_step=0.002)
        scaled = stats_from_autocorrelation(
            lambda tau: c * math.exp(tau), tail_cutoff=40.0, quad_step=0.002
        )
        assert scaled.mu1 == pytest.approx(c * base.mu1, rel=1e-12)
        assert scaled.mu2 == pytest.approx(c * base.mu2, rel=1e-12)

    def test_non_finite_kernel_rejected(self):
        from oufilter.errors import ToolkitError

        with pytest.raises(ToolkitError):
            stats_from_autocorrelation(
                lambda tau: math.inf if tau < -0.5 else 1.0, tail_cutoff=1.0, quad_step=0.1
            )


class TestOUStep:
    def test_rest_state_stays_at_rest(self):
        assert ou_step(0.0, OUParams(D=2.0, tau_cor=0.5), dt=0.01, dB=0.0) == 0.0

    def test_deterministic_decay(self):
        assert ou_step(1.0, OUParams(D=0.0, tau_cor=1.0), dt=0.1, dB=0.0) == pytest.approx(0.9)

    def test_stationary_variance(self):
        # ensemble of OU paths equilibrated far beyond tau_cor
        p = OUParams(D=0.8, tau_cor=0.1)
        dt = p.tau_cor / 100.0
        n_paths, n_steps = 10_000, 2_000  # t_end = 20 tau_cor
        rng = np.random.default_rng(11)
        xi = np.zeros(n_paths)
        coeff = math.sqrt(2.0 * p.D) / p.tau_cor
        for _ in range(n_steps):
            xi = xi + (-xi / p.tau_cor) * dt + coeff * rng.normal(0.0, math.sqrt(dt), n_paths)
        target = p.D / p.tau_cor
        se = target * math.sqrt(2.0 / n_paths)
        assert abs(xi.var() - target) < 3.0 * se + 0.01 * target  # 3 SE + Euler bias allowance

    def test_ensemble_mean_decays_exponentially(self):
        p = OUParams(D=0.01, tau_cor=0.1)
        dt = p.tau_cor / 100.0
        n_paths = 10_000
        rng = np.random.default_rng(3)
        xi = np.ones(n_paths)
        coeff = math.sqrt(2.0 * p.D) / p.tau_cor
        checkpoints = {100: None, 200: None, 400: None}  # t = tau, 2 tau, 4 tau
        for k in range(1, 401):
            xi = xi + (-xi / p.tau_cor) * dt + coeff * rng.normal(0.0, math.sqrt(dt), n_paths)
            if k in checkpoints:
                checkpoints[k] = float(xi.mean())
        for k, got in checkpoints.items():
            t = k * dt
            want = math.exp(-t / p.tau_cor)
            se = math.sqrt(p.D / p.tau_cor / n_paths)
            assert abs(got - want) < 3.0 * se + 0.01 * want


class TestColouredStats:
    def test_rejects_negative_moments(self):
        with pytest.raises(ValueError):
            ColouredStats(-0.1, 0.0)
        with pytest.raises(ValueError):
            ColouredStats(1.0, -0.1)

    def test_white_limit_zeroes_mu2(self):
        s = ColouredStats(3.0, 0.4).white()
        assert (s.mu1, s.mu2) == (3.0, 0.0)
