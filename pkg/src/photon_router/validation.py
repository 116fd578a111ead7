"""Cross-checks between the closed form, the linear-system oracles, and time stepping."""

from __future__ import annotations

import numpy as np

from . import core, spectral, timedomain
from .model import PulseSpec, RouterConfig

ALGEBRA_TOL = 1e-10
N1_TOL = 1e-12
TIME_DOMAIN_TOL = 0.05


def random_config(rng: np.random.Generator, n: int, omega=(-3.0, 3.0), gamma=(0.1, 4.0)) -> RouterConfig:
    return RouterConfig.from_arrays(rng.uniform(*omega, n), rng.uniform(*gamma, n), rng.uniform(*gamma, n))


def _max_dev(a, b) -> float:
    return float(np.max(np.abs(a.as_array() - b.as_array())))


def oracle_suite(trials: int = 100, seed: int = 0, n_max: int = 8, evaluator=core.eval_amplitudes) -> dict:
    """Compare ``evaluator`` with dense and rank-one solves on random devices."""
    rng = np.random.default_rng(seed)
    worst = {"deviation": -1.0}
    dev_dense = dev_rank = 0.0
    for trial in range(trials):
        n = int(rng.integers(1, n_max + 1))
        config = random_config(rng, n)
        k = float(rng.uniform(-3.0, 3.0))
        closed = evaluator(config, k)
        d1 = _max_dev(closed, spectral.transfer_amplitudes(config, k, "dense"))
        d2 = _max_dev(closed, spectral.transfer_amplitudes(config, k, "rank_one"))
        dev_dense = max(dev_dense, d1)
        dev_rank = max(dev_rank, d2)
        if max(d1, d2) > worst["deviation"]:
            worst = {
                "trial": trial, "n": n, "k": k, "deviation": max(d1, d2),
                "path": "dense" if d1 >= d2 else "rank_one",
                "channels": [[ch.omega, ch.gamma_minus, ch.gamma_plus] for ch in config.channels],
            }
    return {"trials": trials, "max_dev_dense": dev_dense, "max_dev_rank_one": dev_rank, "worst_case": worst}


def n1_check(evaluator=core.eval_amplitudes) -> float:
    """Largest deviation of ``evaluator`` from the single-channel formula."""
    dev = 0.0
    for delta, gm, gp in ((0.0, 1.0, 1.0), (1.0, 1.0, 1.0), (0.0, 1.0, 0.0), (-0.7, 0.3, 2.5)):
        amps = evaluator(RouterConfig.identical(1, delta, gm, gp), 0.0)
        back, out = core.eval_n1(delta, gm, gp)
        dev = max(dev, abs(amps.alpha_back - back), abs(amps.alpha_out[0] - out))
    return float(dev)


def time_domain_check(config: RouterConfig, pulse: PulseSpec, evaluator=core.eval_amplitudes) -> float:
    """max |p_markov - p_closed| at the pulse carrier."""
    grid = timedomain.default_grid(config, pulse)
    grid = timedomain.TimeGrid(grid.t_end, grid.dt, max(1, grid.n_steps // 10))
    traj = timedomain.simulate_markov(config, pulse, grid)
    dist = timedomain.longtime_distribution(traj, config)
    closed = evaluator(config, pulse.varpi)
    p_closed = np.abs(closed.as_array()) ** 2
    return float(np.max(np.abs(dist.as_array() - p_closed)))


def validate(config: RouterConfig | None = None, pulse: PulseSpec | None = None, trials: int = 100,
             seed: int = 0, n_max: int = 8, evaluator=core.eval_amplitudes, k: float | None = None) -> dict:
    """Full report; ``config`` is also checked at ``k`` (default: its carrier)."""
    if config is None:
        config = RouterConfig.identical(1, 0.0, 1.0, 1.0)
    if pulse is None:
        pulse = PulseSpec(0.0, 0.01)
    k = pulse.varpi if k is None else float(k)
    report = oracle_suite(trials, seed, n_max, evaluator)
    closed = evaluator(config, k)
    d1 = _max_dev(closed, spectral.transfer_amplitudes(config, k, "dense"))
    d2 = _max_dev(closed, spectral.transfer_amplitudes(config, k, "rank_one"))
    report["config_deviation"] = max(d1, d2)
    report["k"] = k
    report["max_dev_dense"] = max(report["max_dev_dense"], d1)
    report["max_dev_rank_one"] = max(report["max_dev_rank_one"], d2)
    if max(d1, d2) > report["worst_case"]["deviation"]:
        report["worst_case"] = {"trial": "config", "n": config.n, "k": k, "deviation": max(d1, d2),
                                "path": "dense" if d1 >= d2 else "rank_one",
                                "channels": [[c.omega, c.gamma_minus, c.gamma_plus] for c in config.channels]}
    report["n1_deviation"] = n1_check(evaluator)
    report["time_domain_deviation"] = time_domain_check(config, pulse, evaluator)
    report["epsilon"] = pulse.epsilon
    report["thresholds"] = {"algebra": ALGEBRA_TOL, "n1": N1_TOL, "time_domain": TIME_DOMAIN_TOL}
    failures = []
    if max(report["max_dev_dense"], report["max_dev_rank_one"]) > ALGEBRA_TOL:
        failures.append("oracle_equivalence")
    if report["n1_deviation"] > N1_TOL:
        failures.append("n1_formula")
    if report["time_domain_deviation"] > TIME_DOMAIN_TOL:
        failures.append("time_domain")
    report["failures"] = failures
    report["pass"] = not failures
    return report
