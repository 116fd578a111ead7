"""Device, pulse, and result types.

All frequencies and rates are dimensionless, measured in units of a
reference rate chosen by the user; the group velocity and hbar are 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np


class DecoupledDeviceWarning(UserWarning):
    """No emitter couples to the input channel."""


@dataclass(frozen=True)
class ChannelParams:
    """One output channel and the emitter joining it to the input channel."""

    omega: float
    gamma_minus: float
    gamma_plus: float

    def __post_init__(self):
        for name in ("omega", "gamma_minus", "gamma_plus"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.gamma_minus < 0:
            raise ValueError(f"gamma_minus must be >= 0, got {self.gamma_minus}")
        if self.gamma_plus < 0:
            raise ValueError(f"gamma_plus must be >= 0, got {self.gamma_plus}")

    def detuned(self, k: float, delta: float) -> "ChannelParams":
        """Copy with transition frequency set so that omega - k == delta."""
        return replace(self, omega=k + delta)


@dataclass(frozen=True)
class RouterConfig:
    channels: tuple[ChannelParams, ...]

    def __post_init__(self):
        channels = tuple(self.channels)
        if not channels:
            raise ValueError("a router needs at least one output channel")
        for ch in channels:
            if not isinstance(ch, ChannelParams):
                raise TypeError(f"expected ChannelParams, got {type(ch).__name__}")
        object.__setattr__(self, "channels", channels)
        if self.is_decoupled:
            warnings.warn(
                "no emitter couples to the input channel (all gamma_minus == 0)",
                DecoupledDeviceWarning,
                stacklevel=3,
            )

    @classmethod
    def from_arrays(cls, omega, gamma_minus, gamma_plus) -> "RouterConfig":
        omega, gamma_minus, gamma_plus = np.broadcast_arrays(
            np.asarray(omega, float), np.asarray(gamma_minus, float), np.asarray(gamma_plus, float)
        )
        return cls(
            tuple(ChannelParams(float(w), float(m), float(p))
                  for w, m, p in zip(omega.ravel(), gamma_minus.ravel(), gamma_plus.ravel()))
        )

    @classmethod
    def identical(cls, n: int, omega: float, gamma_minus: float, gamma_plus: float) -> "RouterConfig":
        return cls((ChannelParams(omega, gamma_minus, gamma_plus),) * int(n))

    @property
    def n(self) -> int:
        return len(self.channels)

    @property
    def is_decoupled(self) -> bool:
        return all(ch.gamma_minus == 0 for ch in self.channels)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(omega, gamma_minus, gamma_plus) as float64 arrays."""
        omega = np.array([ch.omega for ch in self.channels], dtype=np.float64)
        gm = np.array([ch.gamma_minus for ch in self.channels], dtype=np.float64)
        gp = np.array([ch.gamma_plus for ch in self.channels], dtype=np.float64)
        return omega, gm, gp

    def permuted(self, order: Sequence[int]) -> "RouterConfig":
        return RouterConfig(tuple(self.channels[i] for i in order))

    def without(self, index: int) -> "RouterConfig":
        return RouterConfig(self.channels[:index] + self.channels[index + 1:])


@dataclass(frozen=True)
class PulseSpec:
    """Lorentzian single-photon wavepacket in the input channel.

    The spectral amplitude is ``sqrt(eps/pi) / (k - varpi + i eps)``, which
    has unit norm over the real line.  ``epsilon -> 0`` is the
    monochromatic limit.
    """

    varpi: float
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "varpi", float(self.varpi))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if not math.isfinite(self.varpi):
            raise ValueError("varpi must be finite")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")

    def spectral_amplitude(self, k):
        k = np.asarray(k, dtype=np.float64)
        return np.sqrt(self.epsilon / np.pi) / (k - self.varpi + 1j * self.epsilon)


@dataclass(frozen=True)
class ScatteringAmplitudes:
    k: float
    alpha_back: complex
    alpha_out: tuple[complex, ...]

    @property
    def n(self) -> int:
        return len(self.alpha_out)

    def as_array(self) -> np.ndarray:
        """[alpha_back, alpha_out...] as one complex vector."""
        return np.array((self.alpha_back,) + tuple(self.alpha_out), dtype=np.complex128)

    def flux(self) -> float:
        return float(abs(self.alpha_back) ** 2 + sum(abs(a) ** 2 for a in self.alpha_out))


@dataclass(frozen=True)
class RoutingDistribution:
    p_back: float
    p_out: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "p_back", float(self.p_back))
        object.__setattr__(self, "p_out", tuple(float(p) for p in self.p_out))

    @property
    def total(self) -> float:
        return self.p_back + math.fsum(self.p_out)

    def as_array(self) -> np.ndarray:
        return np.array((self.p_back,) + self.p_out)
