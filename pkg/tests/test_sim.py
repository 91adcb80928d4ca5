import math

import numpy as np
import pytest

from oufilter.equivalence import SystemModel, equivalent_ito
from oufilter.errors import NonFiniteStateError, StabilityError
from oufilter.filtering import ObservationModel
from oufilter.jets import Polynomial, constant
from oufilter.noise import ColouredStats, OUParams
from oufilter.sim import (
    ObservationSeries,
    Path,
    SimConfig,
    ensemble_coloured,
    ensemble_ito,
    simulate_coloured,
    simulate_ito,
    simulate_observations,
)


def linear_model(lam=1.0, noise=1.0):
    return SystemModel(f=Polynomial([0.0, -lam]), g=constant(noise))


class TestSimConfig:
    def test_rejects_bad_steps(self):
        with pytest.raises(ValueError):
            SimConfig(dt=0.0, t_end=1.0)
        with pytest.raises(ValueError):
            SimConfig(dt=2.0, t_end=1.0)
        with pytest.raises(ValueError):
            SimConfig(dt=0.1, t_end=1.0, n_paths=0)


class TestSimulateColoured:
    def test_deterministic_limit_matches_ode(self):
        # D = 0 and xi0 = 0 collapses to dx/dt = -x; x(1) = 1/e
        p = OUParams(D=0.0, tau_cor=0.05)
        cfg = SimConfig(dt=0.005, t_end=1.0, seed=1)
        path = simulate_coloured(linear_model(), p, xi0=0.0, x0=1.0, cfg=cfg)
        assert abs(path.states[-1] - math.exp(-1.0)) < 2.0 * cfg.dt

    def test_stationary_variance_of_linear_filter(self):
        # x' = -lam x + xi has stationary variance D / (lam (1 + lam tau))
        lam, p = 1.0, OUParams(D=0.5, tau_cor=0.05)
        cfg = SimConfig(dt=p.tau_cor / 10.0, t_end=8.0, seed=7, n_paths=10_000)
        xi0 = 0.0
        terminal = ensemble_coloured(linear_model(lam), p, xi0, 0.0, cfg)
        target = p.D / (lam * (1.0 + lam * p.tau_cor))
        se = target * math.sqrt(2.0 / cfg.n_paths)
        # 3 SE plus a small allowance for O(dt) Euler bias
        assert abs(terminal.var() - target) < 3.0 * se + 0.02 * target

    def test_same_seed_is_bitwise_identical(self):
        p = OUParams(D=1.0, tau_cor=0.1)
        cfg = SimConfig(dt=0.01, t_end=0.5, seed=123)
        a = simulate_coloured(linear_model(), p, 0.1, 1.0, cfg)
        b = simulate_coloured(linear_model(), p, 0.1, 1.0, cfg)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.noise_states, b.noise_states)

    def test_stability_rule_enforced(self):
        p = OUParams(D=1.0, tau_cor=0.1)
        with pytest.raises(StabilityError):
            simulate_coloured(linear_model(), p, 0.0, 1.0, SimConfig(dt=0.02, t_end=1.0))

    def test_non_finite_state_reports_step(self):
        m = SystemModel(f=Polynomial([0.0, 0.0, 0.0, 1.0]), g=constant(0.0))  # dx/dt = x^3
        p = OUParams(D=0.0, tau_cor=10.0)
        with pytest.raises(NonFiniteStateError, match="step"):
            simulate_coloured(m, p, 0.0, 5.0, SimConfig(dt=1.0, t_end=50.0))

    def test_ensemble_member_matches_single_path(self):
        p = OUParams(D=0.8, tau_cor=0.1)
        cfg = SimConfig(dt=0.01, t_end=0.4, seed=9, n_paths=5)
        terminal = ensemble_coloured(linear_model(), p, 0.0, 1.0, cfg)
        single = simulate_coloured(linear_model(), p, 0.0, 1.0, SimConfig(dt=0.01, t_end=0.4, seed=9))
        assert terminal[0] == single.states[-1]

    def test_chunking_does_not_change_results(self):
        p = OUParams(D=0.8, tau_cor=0.1)
        cfg = SimConfig(dt=0.01, t_end=0.3, seed=5, n_paths=7)
        a = ensemble_coloured(linear_model(), p, 0.0, 1.0, cfg, chunk_size=2)
        b = ensemble_coloured(linear_model(), p, 0.0, 1.0, cfg, chunk_size=1000)
        assert np.array_equal(a, b)


class TestSimulateIto:
    def test_brownian_scaling(self):
        # a = 0, b = sqrt(2D): variance grows like 2 D t
        D = 0.7
        m = SystemModel(f=Polynomial([0.0]), g=constant(math.sqrt(2.0 * D)))
        eq = equivalent_ito(m, ColouredStats(1.0, 0.0))
        cfg = SimConfig(dt=0.01, t_end=2.0, seed=3, n_paths=10_000)
        terminal = ensemble_ito(eq, 0.0, cfg)
        target = 2.0 * D * cfg.t_end
        se = target * math.sqrt(2.0 / cfg.n_paths)
        assert abs(terminal.var() - target) < 3.0 * se

    def test_ou_stationary_variance(self):
        lam, sigma = 1.5, 0.8
        m = SystemModel(f=Polynomial([0.0, -lam]), g=constant(sigma))
        eq = equivalent_ito(m, ColouredStats(1.0, 0.0))
        cfg = SimConfig(dt=0.005, t_end=6.0, seed=11, n_paths=10_000)
        terminal = ensemble_ito(eq, 0.0, cfg)
        target = sigma**2 / (2.0 * lam)
        se = target * math.sqrt(2.0 / cfg.n_paths)
        assert abs(terminal.var() - target) < 3.0 * se + 0.02 * target

    def test_weak_order_one_mean_bias_halves_with_dt(self):
        # additive noise keeps the Euler mean equal to the deterministic
        # recursion, so the D = 0 path measures the weak mean bias exactly
        m = linear_model()
        eq = equivalent_ito(m, ColouredStats(0.0, 0.0))
        biases = []
        for dt in (0.02, 0.01, 0.005):
            path = simulate_ito(eq, 1.0, SimConfig(dt=dt, t_end=1.0, seed=2))
            biases.append(abs(path.states[-1] - math.exp(-1.0)))
        assert biases[0] > biases[1] > biases[2]
        assert 0.3 < biases[1] / biases[0] < 0.7
        assert 0.3 < biases[2] / biases[1] < 0.7

    def test_matches_coloured_distribution(self):
        # light version of the equivalence check (full size is in acceptance)
        from oufilter.fpe import grid_from_samples, l1_distance, mc_histogram
        from oufilter.noise import ou_stats

        m = SystemModel(f=Polynomial([0.0, -1.0, 0.0, -1.0]), g=Polynomial([2.0, 1.0]))
        p = OUParams(D=0.03, tau_cor=0.005)
        cfg = SimConfig(dt=p.tau_cor / 10.0, t_end=1.0, seed=21, n_paths=20_000)
        col = ensemble_coloured(m, p, 0.0, 0.5, cfg)
        ito = ensemble_ito(equivalent_ito(m, ou_stats(p)), 0.5, cfg)
        spec = grid_from_samples(col, 100)
        d = l1_distance(mc_histogram(col, spec), mc_histogram(ito, spec))
        assert d < 0.1


class TestSimulateObservations:
    def make_path(self, states, dt=0.01):
        states = np.asarray(states, dtype=float)
        return Path(times=np.arange(len(states)) * dt, states=states)

    def test_noiseless_observations_are_exact(self):
        obs = ObservationModel(h=Polynomial([0.0, 1.0]), phi_eta=0.0)
        path = self.make_path([1.0, 2.0, 3.0])
        series = simulate_observations(path, obs, seed=0)
        np.testing.assert_allclose(series.increments, [0.01, 0.02])

    def test_constant_path_linear_h(self):
        obs = ObservationModel(h=Polynomial([0.0, 1.0]), phi_eta=0.0)
        path = self.make_path(np.full(11, 2.0))
        series = simulate_observations(path, obs, seed=4)
        assert np.allclose(series.increments, 0.02, rtol=1e-12)

    def test_pure_noise_variance(self):
        obs = ObservationModel(h=Polynomial([0.0]), phi_eta=2.5)
        path = self.make_path(np.zeros(100_001), dt=0.01)
        series = simulate_observations(path, obs, seed=8)
        scaled = series.increments / math.sqrt(path.dt)
        se = obs.phi_eta * math.sqrt(2.0 / scaled.size)
        assert abs(scaled.var() - obs.phi_eta) < 3.0 * se

    def test_observation_seed_does_not_touch_state_stream(self):
        p = OUParams(D=1.0, tau_cor=0.1)
        cfg = SimConfig(dt=0.01, t_end=0.5, seed=42)
        path = simulate_coloured(linear_model(), p, 0.0, 1.0, cfg)
        obs = ObservationModel(h=Polynomial([0.0, 1.0]), phi_eta=1.0)
        s1 = simulate_observations(path, obs, seed=42)
        s2 = simulate_observations(path, obs, seed=43)
        again = simulate_coloured(linear_model(), p, 0.0, 1.0, cfg)
        assert np.array_equal(path.states, again.states)
        assert not np.array_equal(s1.increments, s2.increments)

    def test_irregular_path_rejected(self):
        path = Path(times=np.array([0.0, 0.1, 0.3]), states=np.zeros(3))
        obs = ObservationModel(h=Polynomial([0.0, 1.0]), phi_eta=1.0)
        with pytest.raises(ValueError):
            simulate_observations(path, obs, seed=0)


class TestCsvRoundTrip:
    def test_path_round_trip_is_bitwise(self, tmp_path):
        from oufilter import csvio

        p = OUParams(D=1.0, tau_cor=0.1)
        path = simulate_coloured(
            linear_model(), p, 0.0, 1.0, SimConfig(dt=0.01, t_end=0.2, seed=31)
        )
        dest = tmp_path / "path.csv"
        csvio.write_csv(dest, ["t", "x"], [path.times, path.states])
        header, cols = csvio.read_csv_columns(dest)
        assert header == ["t", "x"]
        assert np.array_equal(cols[0], path.times)
        assert np.array_equal(cols[1], path.states)

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ValueError):
            ObservationSeries(times=np.zeros(3), increments=np.zeros(2))
