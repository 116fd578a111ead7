"""Inverse design of emitter parameters for a target routing distribution.

Search runs in transformed coordinates: detunings are clamped to their
bounds and each decay rate is the square of a free coordinate (capped at
``gamma_max``), so every evaluated device is physical.  Starts come from
analytic solutions where the target matches a known family, then from
pseudo-random points; each start is refined with Nelder-Mead.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .errors import BudgetExhausted, DegenerateDenominator
from .model import ChannelParams, RouterConfig

FIELDS = ("delta", "gamma_minus", "gamma_plus")
_FROZEN_KEY = re.compile(r"^ch(\d+)\.(delta|gamma_minus|gamma_plus)$")
# objective is a squared distance between probability vectors, so <= 2
_PENALTY = 4.0
CONVERGED_TOL = 1e-12


@dataclass(frozen=True)
class TargetDistribution:
    p_back: float
    p_out: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p_back", float(self.p_back))
        object.__setattr__(self, "p_out", tuple(float(p) for p in self.p_out))
        values = (self.p_back,) + self.p_out
        if not self.p_out:
            raise ValueError("target needs at least one output channel")
        if any(not (0.0 <= p <= 1.0) for p in values):
            raise ValueError("target probabilities must lie in [0, 1]")
        if abs(math.fsum(values) - 1.0) > 1e-9:
            raise ValueError(f"target probabilities sum to {math.fsum(values)!r}, not 1")

    @property
    def n(self) -> int:
        return len(self.p_out)

    def as_array(self) -> np.ndarray:
        return np.array((self.p_back,) + self.p_out)


@dataclass(frozen=True)
class DesignSpace:
    """Bounds and frozen parameters for the search.

    ``frozen`` maps ``"ch<i>.delta|gamma_minus|gamma_plus"`` (1-based) to a
    fixed value.  Detunings are relative to the carrier ``k``.
    """

    n_channels: int
    delta_max: float = 10.0
    gamma_max: float = 10.0
    k: float = 0.0
    frozen: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")
        for name in ("delta_max", "gamma_max", "k"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not (self.delta_max > 0 and self.gamma_max > 0):
            raise ValueError("delta_max and gamma_max must be > 0")
        for key, value in self.frozen.items():
            match = _FROZEN_KEY.match(key)
            if not match or not 1 <= int(match.group(1)) <= self.n_channels:
                raise ValueError(f"cannot freeze {key!r}")
            lo, hi = self.bounds(match.group(2))
            if not lo <= value <= hi:
                raise ValueError(f"frozen value {key}={value} outside bounds [{lo}, {hi}]")

    def bounds(self, name: str) -> tuple[float, float]:
        if name == "delta":
            return -self.delta_max, self.delta_max
        return 0.0, self.gamma_max

    def free_mask(self) -> np.ndarray:
        """Boolean (N, 3) mask over (delta, gamma_minus, gamma_plus)."""
        mask = np.ones((self.n_channels, 3), dtype=bool)
        for key in self.frozen:
            match = _FROZEN_KEY.match(key)
            mask[int(match.group(1)) - 1, FIELDS.index(match.group(2))] = False
        return mask

    @property
    def n_free(self) -> int:
        return int(self.free_mask().sum())

    def clip(self, params: np.ndarray) -> np.ndarray:
        """Clamp an (N, 3) parameter table into bounds and apply frozen values."""
        p = np.array(params, dtype=np.float64, copy=True)
        p[:, 0] = np.clip(p[:, 0], -self.delta_max, self.delta_max)
        p[:, 1:] = np.clip(p[:, 1:], 0.0, self.gamma_max)
        for key, value in self.frozen.items():
            match = _FROZEN_KEY.match(key)
            p[int(match.group(1)) - 1, FIELDS.index(match.group(2))] = value
        return p

    def to_config(self, params: np.ndarray) -> RouterConfig:
        p = self.clip(params)
        return RouterConfig(tuple(ChannelParams(self.k + d, gm, gp) for d, gm, gp in p))

    def table(self, config: RouterConfig) -> np.ndarray:
        omega, gm, gp = config.arrays()
        return np.column_stack((omega - self.k, gm, gp))


@dataclass(frozen=True)
class DesignResult:
    config: RouterConfig
    residual: float
    evaluations: int
    seed_used: str
    converged: bool = True


def _distance(omega, gm, gp, k, target) -> float:
    back, out, ok = kernels.amplitudes(omega, gm, gp, k)
    if not ok:
        raise DegenerateDenominator("objective evaluated at a degenerate device")
    probs = np.empty(out.shape[0] + 1)
    probs[0] = back.real ** 2 + back.imag ** 2
    probs[1:] = out.real ** 2 + out.imag ** 2
    return float(np.sum((probs - target) ** 2))


def objective(config: RouterConfig, k: float, target: TargetDistribution) -> float:
    if config.n != target.n:
        raise ValueError(f"config has {config.n} channels, target {target.n}")
    omega, gm, gp = config.arrays()
    return _distance(omega, gm, gp, float(k), target.as_array())


def analytic_seed(target: TargetDistribution, space: DesignSpace) -> list[tuple[str, RouterConfig]]:
    """Up to three labelled starting devices drawn from known exact solutions."""
    n = target.n
    if n != space.n_channels:
        raise ValueError("target and design space disagree on the channel count")
    out = np.asarray(target.p_out)
    seeds = []
    tol = 1e-9

    def add(label, table):
        if len(seeds) < 3:
            seeds.append((label, space.to_config(table)))

    if target.p_back <= tol and np.all(np.abs(out - 1.0 / n) <= tol):
        # resonant, gamma^+ = N gamma^-: no reflection, equal split
        gm = min(1.0, space.gamma_max / n)
        add("uniform", np.tile([0.0, gm, n * gm], (n, 1)))
    hot = np.flatnonzero(out >= 1.0 - tol)
    if hot.size == 1:
        m = int(hot[0])
        table = np.tile([space.delta_max, min(1.0, space.gamma_max), min(1.0, space.gamma_max)], (n, 1))
        table[m] = [0.0, min(1.0, space.gamma_max), min(1.0, space.gamma_max)]
        add("single_port", table)
    if n == 2 and target.p_back <= tol:
        gm = min(1.0, space.gamma_max / 2)
        add("zero_reflection_n2", np.tile([0.0, gm, 2 * gm], (2, 1)))
    if target.p_back >= 1.0 - tol:
        g = min(1.0, space.gamma_max)
        add("far_detuned", np.tile([space.delta_max, g, g], (n, 1)))
    if not seeds:
        add("midpoint", np.tile([0.0, 0.5 * space.gamma_max, 0.5 * space.gamma_max], (n, 1)))
    return seeds


class _Counted:
    """Objective in search coordinates with an evaluation counter."""

    def __init__(self, space: DesignSpace, target: TargetDistribution, base: np.ndarray):
        self.space = space
        self.target = target.as_array()
        self.mask = space.free_mask()
        self.base = base
        self.calls = 0
        self.best_f = math.inf
        self.best_x = None

    def table(self, x):
        p = self.base.copy()
        fields = np.nonzero(self.mask)[1]
        p[self.mask] = np.where(fields == 0, x, np.square(x))
        return self.space.clip(p)

    def encode(self, table):
        vals = table[self.mask]
        fields = np.nonzero(self.mask)[1]
        return np.where(fields == 0, vals, np.sqrt(np.maximum(vals, 0.0)))

    def __call__(self, x):
        self.calls += 1
        p = self.table(x)
        try:
            f = _distance(self.space.k + p[:, 0], p[:, 1], p[:, 2], self.space.k, self.target)
        except DegenerateDenominator:
            f = _PENALTY
        if f < self.best_f:
            self.best_f = f
            self.best_x = np.array(x, copy=True)
        return f


def _initial_simplex(x0, fields, space):
    dim = x0.shape[0]
    simplex = np.tile(x0, (dim + 1, 1))
    for i in range(dim):
        if fields[i] == 0:
            step = 0.1 * max(1.0, abs(x0[i]))
        else:
            step = 0.1 * max(0.5, abs(x0[i]))
        simplex[i + 1, i] += step
    return simplex


def _refine(counted: _Counted, x0: np.ndarray, budget: int, ftol: float) -> None:
    fields = np.nonzero(counted.mask)[1]
    x = x0
    # restart the simplex around the incumbent when it stalls early
    while counted.calls < budget and counted.best_f > ftol:
        # one simplex iteration may overshoot maxfev by up to dim + 1 calls
        left = budget - counted.calls - (len(x) + 2)
        if left < 2 * len(x) + 2:
            break
        before = counted.best_f
        minimize(counted, x, method="Nelder-Mead",
                 options={"maxfev": left, "xatol": 1e-12, "fatol": 1e-18, "adaptive": len(x) > 4,
                          "initial_simplex": _initial_simplex(x, fields, counted.space)})
        x = counted.best_x
        if counted.best_f >= before * (1 - 1e-3) and before < math.inf:
            break


def optimize(target: TargetDistribution, space: DesignSpace, budget: int = 10_000, restarts: int = 8,
             rng_seed: int = 0, ftol: float = 1e-16, raise_on_exhaust: bool = False) -> DesignResult:
    """Multi-start derivative-free search for a device realizing ``target``.

    The budget is split evenly across starts (analytic seeds first, then
    pseudo-random ones up to ``restarts`` in total).  The best start wins:
    lowest residual, then fewest evaluations, then earliest start.  With
    ``raise_on_exhaust`` an unconverged search raises ``BudgetExhausted``
    carrying the best result instead of returning it.
    """
    if target.n != space.n_channels:
        raise ValueError("target and design space disagree on the channel count")
    n_free = space.n_free
    if budget < 50 * max(n_free, 1):
        raise ValueError(f"budget {budget} below 50 x {n_free} free parameters")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")

    starts = analytic_seed(target, space)
    rng = np.random.default_rng(rng_seed)
    for i in range(max(0, restarts - len(starts))):
        table = np.column_stack((
            rng.uniform(-space.delta_max, space.delta_max, space.n_channels),
            rng.uniform(0.0, space.gamma_max, space.n_channels),
            rng.uniform(0.0, space.gamma_max, space.n_channels),
        ))
        starts.append((f"random-{i}", space.to_config(table)))

    per_start = budget // len(starts)
    candidates = []
    total_calls = 0
    for index, (label, cfg) in enumerate(starts):
        base = space.table(cfg)
        counted = _Counted(space, target, base)
        x0 = counted.encode(base)
        counted(x0)
        if n_free:
            _refine(counted, x0, per_start, ftol)
        total_calls += counted.calls
        config = space.to_config(counted.table(counted.best_x))
        residual = objective(config, space.k, target)
        candidates.append((residual, counted.calls, index, label, config))

    residual, _, _, label, config = min(candidates, key=lambda c: (c[0], c[1], c[2]))
    result = DesignResult(config, residual, total_calls, label, converged=residual <= max(ftol, CONVERGED_TOL))
    if raise_on_exhaust and not result.converged:
        raise BudgetExhausted(f"best residual {residual:.3e} after {total_calls} evaluations", result)
    return result
