"""Time-domain propagation of the single-excitation dynamics.

Two independent routes:

* :func:`simulate_markov` integrates the emitter amplitudes after the
  waveguide continua have been eliminated (memoryless decay plus the
  Lorentzian drive ``sqrt(2 eps gamma_i^-) exp(-(eps + i varpi) t)``).
* :func:`simulate_full_hamiltonian` keeps every waveguide on a uniform mode
  grid and evolves the full single-excitation Hamiltonian.

Both use fixed-step classical RK4 so runs are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NormDrift, NotConverged, StabilityViolation
from .model import PulseSpec, RouterConfig, RoutingDistribution

MAX_STEPS = 10**8
STABILITY_LIMIT = 0.1
AMPLITUDE_BOUND = 1.0 + 1e-6
EMITTER_TOL = 1e-6
NORM_TOL = 1e-6
MAX_STATE_DIM = 10**6


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    dt: float
    stride: int = 1

    def __post_init__(self):
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be finite and >= 0, got {self.t_end}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ValueError(f"stride must be a positive integer, got {self.stride}")
        if self.t_end / self.dt > MAX_STEPS:
            raise ValueError(f"t_end/dt = {self.t_end / self.dt:.3g} exceeds the {MAX_STEPS:.0e} step budget")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def check_stability(self, config: RouterConfig, pulse: PulseSpec) -> None:
        rate = markov_rate_bound(config, pulse)
        if self.dt * rate > STABILITY_LIMIT:
            raise StabilityViolation(
                f"dt={self.dt} too large: dt * {rate:.4g} = {self.dt * rate:.3g} > {STABILITY_LIMIT}"
            )


def markov_rate_bound(config: RouterConfig, pulse: PulseSpec) -> float:
    """Fastest rate in the emitter equations.

    Includes the collective input-channel decay ``sum gamma^-/2`` on top of
    the per-emitter rates, since that sets the stiffest eigenvalue when many
    emitters share the input channel.
    """
    omega, gm, gp = config.arrays()
    return float(max(np.max(np.abs(omega)), np.max(gm), np.max(gp), 0.5 * np.sum(gm),
                     pulse.epsilon, abs(pulse.varpi)))


def settling_time(config: RouterConfig, pulse: PulseSpec) -> float:
    """Drive ramp-down ``10/eps`` plus twenty emitter lifetimes.

    After ``10/eps`` the undelivered part of the pulse is ``exp(-20)``.
    """
    _, gm, gp = config.arrays()
    total = gm + gp
    slowest = np.min(total[total > 0]) if np.any(total > 0) else 1.0
    return 10.0 / pulse.epsilon + 20.0 / slowest


def default_grid(config: RouterConfig, pulse: PulseSpec, stride: int = 1) -> TimeGrid:
    rate = markov_rate_bound(config, pulse)
    dt = min(0.05, 0.5 * STABILITY_LIMIT / rate) if rate > 0 else 0.05
    return TimeGrid(settling_time(config, pulse), dt, stride)


@dataclass(frozen=True)
class EmitterTrajectory:
    times: np.ndarray
    beta: np.ndarray  # (n_times, N) complex emitter amplitudes
    flux_out: np.ndarray  # (n_times, N) cumulative gamma_i^+ int |beta_i|^2

    @property
    def emitter_norm(self) -> np.ndarray:
        return np.sum(np.abs(self.beta) ** 2, axis=1)

    @property
    def final_occupation(self) -> float:
        return float(self.emitter_norm[-1])


def simulate_markov(config: RouterConfig, pulse: PulseSpec, grid: TimeGrid) -> EmitterTrajectory:
    grid.check_stability(config, pulse)
    omega, gm, gp = config.arrays()
    times, beta, flux, failed = kernels.markov_rk4(
        omega, gm, gp, pulse.varpi, pulse.epsilon, grid.dt, grid.n_steps, grid.stride,
        bound=AMPLITUDE_BOUND,
    )
    if failed >= 0:
        raise StabilityViolation(f"|beta| exceeded {AMPLITUDE_BOUND} at step {failed} (t={failed * grid.dt:g})")
    return EmitterTrajectory(times, beta, flux)


def longtime_distribution(traj: EmitterTrajectory, config: RouterConfig,
                          tol: float = EMITTER_TOL) -> RoutingDistribution:
    """Output populations from integrated flux; back-reflection by conservation."""
    if traj.beta.shape[1] != config.n:
        raise ValueError("trajectory and config have different channel counts")
    occupation = traj.final_occupation
    p_out = tuple(float(p) for p in traj.flux_out[-1])
    dist = RoutingDistribution(1.0 - math.fsum(p_out), p_out)
    if occupation > tol:
        raise NotConverged(
            f"emitters still hold {occupation:.3e} > {tol:.1e} at t={traj.times[-1]:g}",
            occupation=occupation, result=dist,
        )
    return dist


@dataclass(frozen=True)
class ModeDiscretization:
    modes_per_guide: int
    bandwidth: float

    def __post_init__(self):
        m = self.modes_per_guide
        if int(m) != m or m < 3 or m % 2 == 0:
            raise ValueError(f"modes_per_guide must be an odd integer >= 3, got {m}")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")

    @property
    def spacing(self) -> float:
        return self.bandwidth / (self.modes_per_guide - 1)

    @property
    def recurrence_time(self) -> float:
        """Period after which the uniform mode grid rephases (2 pi / dk)."""
        return 2.0 * math.pi / self.spacing

    def offsets(self) -> np.ndarray:
        """Mode frequencies relative to the carrier."""
        half = (self.modes_per_guide - 1) // 2
        return np.arange(-half, half + 1) * self.spacing

    def check_markovian(self, config: RouterConfig, pulse: PulseSpec) -> None:
        _, gm, gp = config.arrays()
        widest = max(float(np.max(gm)), float(np.max(gp)), pulse.epsilon)
        if not self.bandwidth > 10.0 * widest:
            raise ValueError(f"bandwidth {self.bandwidth} must exceed 10 x {widest} for Markovian comparability")


@dataclass(frozen=True)
class FullTrajectory:
    times: np.ndarray
    p_back: np.ndarray
    p_out: np.ndarray  # (n_times, N)
    emitter: np.ndarray
    norm: np.ndarray

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0)))


def initial_state(config: RouterConfig, pulse: PulseSpec, disc: ModeDiscretization) -> np.ndarray:
    """Lorentzian on the input-guide grid, renormalized to unit norm."""
    m = disc.modes_per_guide
    dim = (config.n + 1) * m + config.n
    y = np.zeros(dim, np.complex128)
    amp = pulse.spectral_amplitude(pulse.varpi + disc.offsets()) * math.sqrt(disc.spacing)
    y[:m] = amp / np.linalg.norm(amp)
    return y


def evolve_full_hamiltonian(config: RouterConfig, pulse: PulseSpec, disc: ModeDiscretization,
                            grid: TimeGrid, check_norm: bool = True) -> FullTrajectory:
    """Evolve the discretized Hamiltonian in the frame rotating at the carrier.

    Populations are frame independent.  ``t_end`` must stay below the grid
    recurrence time, after which emitted light re-enters the emitters.
    """
    m = disc.modes_per_guide
    n = config.n
    dim = (n + 1) * m + n
    if dim > MAX_STATE_DIM:
        raise ValueError(f"state dimension {dim} exceeds {MAX_STATE_DIM}")
    disc.check_markovian(config, pulse)
    if grid.t_end >= disc.recurrence_time:
        raise ValueError(
            f"t_end={grid.t_end} reaches the mode-grid recurrence time {disc.recurrence_time:.4g}; "
            "refine the grid or shorten the run"
        )
    omega, gm, gp = config.arrays()
    q = disc.offsets()
    wb = omega - pulse.varpi
    rate = max(float(np.max(np.abs(q))), float(np.max(np.abs(wb))), float(np.max(gm)), float(np.max(gp)),
               pulse.epsilon)
    if grid.dt * rate > STABILITY_LIMIT:
        raise StabilityViolation(f"dt={grid.dt} too large: dt * {rate:.4g} > {STABILITY_LIMIT}")
    sq = math.sqrt(disc.spacing)
    cm = np.sqrt(gm / (2 * np.pi)) * sq
    cp = np.sqrt(gp / (2 * np.pi)) * sq

    y0 = initial_state(config, pulse, disc)
    times, obs, _ = kernels.full_rk4(y0, q, wb, cm, cp, grid.dt, grid.n_steps, grid.stride)
    traj = FullTrajectory(times, obs[:, 0], obs[:, 1:n + 1], obs[:, n + 1], obs[:, n + 2])
    if check_norm and traj.max_norm_drift > NORM_TOL:
        raise NormDrift(f"total norm drifted by {traj.max_norm_drift:.3e} > {NORM_TOL:.0e}")
    return traj


def simulate_full_hamiltonian(config: RouterConfig, pulse: PulseSpec, disc: ModeDiscretization,
                              grid: TimeGrid, emitter_tol: float = 1e-4) -> RoutingDistribution:
    """Channel populations at ``t_end`` from the brute-force Hamiltonian.

    ``p_out`` are the output-guide populations; ``p_back`` is the input-guide
    population with the (checked, small) residual emitter occupation and
    norm error folded in so the distribution sums to one.
    """
    traj = evolve_full_hamiltonian(config, pulse, disc, grid)
    p_out = tuple(float(p) for p in traj.p_out[-1])
    dist = RoutingDistribution(1.0 - math.fsum(p_out), p_out)
    if traj.emitter[-1] > emitter_tol:
        raise NotConverged(
            f"emitters still hold {traj.emitter[-1]:.3e} > {emitter_tol:.1e} at t={traj.times[-1]:g}",
            occupation=float(traj.emitter[-1]), result=dist,
        )
    return dist
