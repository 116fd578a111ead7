import math

import numpy as np
import pytest
from scipy.integrate import quad

from photon_router import (ModeDiscretization, NormDrift, NotConverged, PulseSpec, RouterConfig,
                           StabilityViolation, TimeGrid, eval_amplitudes, routing_probabilities)
from photon_router import timedomain as td
from photon_router.model import DecoupledDeviceWarning


def lorentzian_average(config, pulse):
    """Finite-width oracle: |alpha(k)|^2 averaged over the pulse spectrum."""
    eps, w = pulse.epsilon, pulse.varpi

    def weight(k):
        return eps / np.pi / ((k - w) ** 2 + eps ** 2)

    out = []
    for j in range(-1, config.n):
        def f(k, j=j):
            amps = eval_amplitudes(config, k).as_array()
            return weight(k) * abs(amps[j + 1]) ** 2
        val, _ = quad(f, -np.inf, np.inf, points=None, limit=400, epsabs=1e-12)
        out.append(val)
    return np.array(out)


def markov_distribution(config, pulse):
    grid = td.default_grid(config, pulse)
    grid = TimeGrid(grid.t_end, grid.dt, max(1, grid.n_steps // 20))
    return td.longtime_distribution(td.simulate_markov(config, pulse, grid), config)


class TestTimeGrid:
    @pytest.mark.parametrize("kw", [dict(t_end=-1, dt=0.1), dict(t_end=1, dt=0), dict(t_end=1, dt=0.1, stride=0),
                                    dict(t_end=1, dt=0.1, stride=1.5), dict(t_end=1e9, dt=1e-3),
                                    dict(t_end=math.inf, dt=0.1)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            TimeGrid(**kw)

    def test_steps(self):
        assert TimeGrid(10, 0.01).n_steps == 1000

    def test_stability_guard(self):
        cfg = RouterConfig.identical(1, 0, 1, 10)
        with pytest.raises(StabilityViolation):
            td.simulate_markov(cfg, PulseSpec(0, 0.1), TimeGrid(10, 0.05))

    def test_collective_rate_counts(self):
        # 40 emitters sharing the input guide decay collectively at 20
        cfg = RouterConfig.identical(40, 0, 1, 1)
        assert td.markov_rate_bound(cfg, PulseSpec(0, 0.1)) == pytest.approx(20)


class TestMarkov:
    def test_undriven_without_input_coupling(self):
        cfg = RouterConfig.identical(2, 0.3, 0.0, 1.0)
        traj = td.simulate_markov(cfg, PulseSpec(0, 0.1), TimeGrid(20, 0.01, 100))
        assert np.all(traj.beta == 0)
        assert np.all(traj.flux_out == 0)

    def test_trajectory_shape(self):
        cfg = RouterConfig.identical(2, 0, 1, 1)
        traj = td.simulate_markov(cfg, PulseSpec(0, 0.1), TimeGrid(10, 0.01, 100))
        assert traj.times.shape == (11,)
        assert traj.beta.shape == (11, 2)
        assert traj.times[-1] == pytest.approx(10)
        assert np.all(np.diff(traj.flux_out, axis=0) >= -1e-15)

    def test_single_channel_resonant(self):
        cfg = RouterConfig.identical(1, 0, 1, 1)
        pulse = PulseSpec(0, 0.01)
        dist = markov_distribution(cfg, pulse)
        # symmetric resonant emitter: exact finite-width value 1/(1+eps)
        assert dist.p_out[0] == pytest.approx(1 / (1 + pulse.epsilon), abs=1e-6)
        assert abs(dist.p_out[0] - 1) <= 0.05

    @pytest.mark.parametrize("cfg", [
        RouterConfig.identical(2, 0.2, 1.0, 0.5),
        RouterConfig.from_arrays([0.3, -0.5, 1.0], [0.5, 1.0, 0.8], [1.2, 0.4, 0.9]),
    ])
    def test_matches_lorentzian_oracle(self, cfg):
        pulse = PulseSpec(0.1, 0.2)
        dist = markov_distribution(cfg, pulse)
        np.testing.assert_allclose(dist.as_array(), lorentzian_average(cfg, pulse), rtol=0, atol=1e-5)

    def test_linear_in_epsilon(self):
        cfg = RouterConfig.identical(3, 0, 1, 1)
        target = np.abs(eval_amplitudes(cfg, 0.0).as_array()) ** 2
        devs = [np.max(np.abs(markov_distribution(cfg, PulseSpec(0, e)).as_array() - target)) for e in (0.02, 0.01)]
        assert 0.3 <= devs[1] / devs[0] <= 0.7

    def test_asymmetric_two_channel(self):
        cfg = RouterConfig.identical(2, 0, 1, 2)
        dist = markov_distribution(cfg, PulseSpec(0, 0.005))
        np.testing.assert_allclose(dist.as_array(), [0, 0.5, 0.5], atol=0.03)

    def test_not_converged(self):
        cfg = RouterConfig.identical(1, 0, 1, 1)
        traj = td.simulate_markov(cfg, PulseSpec(0, 0.1), TimeGrid(5, 0.01, 50))
        with pytest.raises(NotConverged) as info:
            td.longtime_distribution(traj, cfg)
        assert info.value.occupation > 1e-6
        assert info.value.result is not None

    def test_permutation(self, rng):
        cfg = RouterConfig.from_arrays([0.3, -0.2, 0.6], [0.5, 1.0, 0.8], [1.2, 0.4, 0.9])
        pulse = PulseSpec(0.1, 0.1)
        order = [2, 0, 1]
        a = markov_distribution(cfg, pulse)
        b = markov_distribution(cfg.permuted(order), pulse)
        np.testing.assert_allclose(np.array(a.p_out)[order], b.p_out, atol=1e-10)


@pytest.fixture(scope="module")
def disc():
    return ModeDiscretization(801, 40.0)


class TestFullHamiltonian:
    def test_discretization(self, disc):
        q = disc.offsets()
        assert q.shape == (801,)
        assert q[0] == pytest.approx(-20) and q[-1] == pytest.approx(20)
        assert disc.spacing == pytest.approx(0.05)
        with pytest.raises(ValueError):
            ModeDiscretization(800, 40)
        with pytest.raises(ValueError):
            ModeDiscretization(1, 40)

    def test_initial_state_normalized(self, disc):
        y = td.initial_state(RouterConfig.identical(2, 0, 1, 1), PulseSpec(0, 0.1), disc)
        assert np.linalg.norm(y) == pytest.approx(1, abs=1e-14)
        assert np.all(y[801:] == 0)

    def test_free_evolution(self):
        disc = ModeDiscretization(201, 20.0)
        with pytest.warns(DecoupledDeviceWarning):
            cfg = RouterConfig.identical(1, 0, 0, 0)
        pulse = PulseSpec(0.0, 0.2)
        traj = td.evolve_full_hamiltonian(cfg, pulse, disc, TimeGrid(20, 0.005, 1000))
        np.testing.assert_allclose(traj.p_back, 1.0, atol=1e-12)
        assert np.all(traj.p_out == 0) and np.all(traj.emitter == 0)

    def test_single_channel(self, disc):
        cfg = RouterConfig.identical(1, 0, 1, 1)
        pulse = PulseSpec(0, 0.04)
        traj = td.evolve_full_hamiltonian(cfg, pulse, disc, TimeGrid(120, 0.005, 2400))
        assert traj.max_norm_drift <= 1e-6
        assert abs(traj.p_out[-1, 0] - 1) <= 0.05
        dist = td.simulate_full_hamiltonian(cfg, pulse, disc, TimeGrid(120, 0.005, 2400))
        assert dist.total == pytest.approx(1, abs=1e-12)

    def test_three_channels_equal(self, disc):
        cfg = RouterConfig.identical(3, 0, 1, 1)
        dist = td.simulate_full_hamiltonian(cfg, PulseSpec(0, 0.04), disc, TimeGrid(120, 0.005, 2400))
        assert max(dist.p_out) - min(dist.p_out) <= 1e-6
        np.testing.assert_allclose(dist.as_array(), 0.25, atol=0.05)

    def test_agrees_with_markov(self, disc):
        cfg = RouterConfig.from_arrays([0.2, -0.3], [1.0, 0.6], [0.8, 1.2])
        pulse = PulseSpec(0.1, 0.1)
        full = td.simulate_full_hamiltonian(cfg, pulse, disc, TimeGrid(115, 0.005, 2300))
        markov = markov_distribution(cfg, pulse)
        np.testing.assert_allclose(full.as_array(), markov.as_array(), atol=0.02)

    def test_recurrence_guard(self, disc):
        cfg = RouterConfig.identical(1, 0, 1, 1)
        with pytest.raises(ValueError, match="recurrence"):
            td.evolve_full_hamiltonian(cfg, PulseSpec(0, 0.04), disc, TimeGrid(400, 0.01))

    def test_bandwidth_guard(self):
        with pytest.raises(ValueError, match="bandwidth"):
            td.evolve_full_hamiltonian(RouterConfig.identical(1, 0, 1, 1), PulseSpec(0, 0.04),
                                       ModeDiscretization(101, 5.0), TimeGrid(10, 0.01))

    def test_stability_guard(self, disc):
        with pytest.raises(StabilityViolation):
            td.evolve_full_hamiltonian(RouterConfig.identical(1, 0, 1, 1), PulseSpec(0, 0.04), disc,
                                       TimeGrid(10, 0.01))

    def test_norm_drift_detected(self, monkeypatch):
        disc = ModeDiscretization(101, 20.0)
        args = (RouterConfig.identical(1, 0, 1, 1), PulseSpec(0, 0.5), disc, TimeGrid(20, 0.0099))
        drift = td.evolve_full_hamiltonian(*args).max_norm_drift
        assert 0 < drift <= 1e-6
        monkeypatch.setattr(td, "NORM_TOL", drift / 2)
        with pytest.raises(NormDrift):
            td.evolve_full_hamiltonian(*args)
        assert td.evolve_full_hamiltonian(*args, check_norm=False).max_norm_drift == drift
