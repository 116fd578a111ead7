"""Closed-form long-time scattering amplitudes of the star router.

With ``a_j = i*delta_j + gamma_j^+/2`` and ``delta_j = omega_j - k``::

    D          = prod_j a_j + sum_j (gamma_j^-/2) prod_{j' != j} a_j'
    alpha_i    = -sqrt(gamma_i^- gamma_i^+) prod_{j != i} a_j / D
    alpha_back = [prod_j a_j - sum_j (gamma_j^-/2) prod_{j' != j} a_j'] / D

The special-case evaluators (``eval_n1``, ``eval_n2``, ``eval_identical``,
``eval_one_special``) implement the reduced formulas for those geometries
literally, so they double as independent checks of the generic evaluator.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import ConservationViolation, DegenerateDenominator, UndefinedAsymmetry
from .model import ChannelParams, RouterConfig, RoutingDistribution, ScatteringAmplitudes

CONSERVATION_TOL = 1e-6


def detuning(channel: ChannelParams, k: float) -> float:
    return channel.omega - k


def eval_amplitudes(config: RouterConfig, k: float) -> ScatteringAmplitudes:
    omega, gm, gp = config.arrays()
    back, out, ok = kernels.amplitudes(omega, gm, gp, k)
    if not ok:
        raise DegenerateDenominator(f"denominator vanishes at k={k} for a fully decoupled resonant channel")
    return ScatteringAmplitudes(float(k), back, tuple(complex(a) for a in out))


def routing_probabilities(config: RouterConfig, k: float) -> RoutingDistribution:
    """Shorthand for ``routing_distribution(eval_amplitudes(config, k))``."""
    return routing_distribution(eval_amplitudes(config, k))


def _check(den: complex, what: str) -> None:
    if den == 0:
        raise DegenerateDenominator(f"{what}: denominator is zero")


def eval_n1(delta: float, gamma_minus: float, gamma_plus: float) -> tuple[complex, complex]:
    """Single output channel: returns (alpha_back, alpha_1)."""
    den = complex(0.5 * gamma_plus + 0.5 * gamma_minus, delta)
    _check(den, "eval_n1")
    back = complex(0.5 * gamma_plus - 0.5 * gamma_minus, delta) / den
    out = -math.sqrt(gamma_minus * gamma_plus) / den
    return back, out


def eval_n2(delta1, delta2, g1m, g1p, g2m, g2p) -> tuple[complex, complex, complex]:
    """Two output channels: returns (alpha_back, alpha_1, alpha_2)."""
    a1 = complex(0.5 * g1p, delta1)
    a2 = complex(0.5 * g2p, delta2)
    cross = 0.25 * g1m * g2m
    den = (a1 + 0.5 * g1m) * (a2 + 0.5 * g2m) - cross
    _check(den, "eval_n2")
    back = ((a1 - 0.5 * g1m) * (a2 - 0.5 * g2m) - cross) / den
    out1 = -math.sqrt(g1m * g1p) * a2 / den
    out2 = -math.sqrt(g2m * g2p) * a1 / den
    return back, out1, out2


def eval_identical(n: int, delta: float, gamma_minus: float, gamma_plus: float) -> tuple[complex, complex]:
    """N identical channels: returns (alpha_back, per-channel amplitude)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    den = complex(gamma_plus + n * gamma_minus, 2.0 * delta)
    _check(den, "eval_identical")
    back = complex(gamma_plus - n * gamma_minus, 2.0 * delta) / den
    each = -2.0 * math.sqrt(gamma_minus * gamma_plus) / den
    return back, each


def eval_one_special(n: int, m_params: ChannelParams, common_params: ChannelParams,
                     k: float) -> tuple[complex, complex]:
    """Channel m differs, the other n-1 are identical: returns (alpha_back, alpha_m)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    am = complex(0.5 * m_params.gamma_plus, m_params.omega - k)
    ac = complex(0.5 * common_params.gamma_plus, common_params.omega - k)
    rest = 0.5 * (n - 1) * common_params.gamma_minus
    half_m = 0.5 * m_params.gamma_minus
    den = am * (ac + rest) + half_m * ac
    _check(den, "eval_one_special")
    back = (am * (ac - rest) - half_m * ac) / den
    out = -math.sqrt(m_params.gamma_minus * m_params.gamma_plus) * ac / den
    return back, out


def routing_distribution(amps: ScatteringAmplitudes) -> RoutingDistribution:
    p_back = abs(amps.alpha_back) ** 2
    p_out = tuple(abs(a) ** 2 for a in amps.alpha_out)
    total = p_back + math.fsum(p_out)
    if not abs(total - 1.0) <= CONSERVATION_TOL:
        raise ConservationViolation(f"probabilities sum to {total!r}, not 1")
    return RoutingDistribution(p_back, p_out)


def coupling_asymmetry(gamma_plus: float, gamma_minus: float) -> float:
    """max/min of the two decay rates; ``math.inf`` when exactly one is zero."""
    if gamma_plus < 0 or gamma_minus < 0:
        raise ValueError("decay rates must be >= 0")
    lo, hi = sorted((gamma_plus, gamma_minus))
    if hi == 0:
        raise UndefinedAsymmetry("coupling asymmetry undefined when both rates vanish")
    if lo == 0:
        return math.inf
    return hi / lo


def reflection_residual(config: RouterConfig, k: float) -> float:
    """Unnormalized |numerator of alpha_back|; zero iff nothing returns to the input at ``k``."""
    omega, gm, gp = config.arrays()
    a = 0.5 * gp + 1j * (omega - k)
    pre = np.concatenate(([1.0 + 0j], np.cumprod(a)))
    suf = np.concatenate((np.cumprod(a[::-1])[::-1], [1.0 + 0j]))
    excl = pre[:-1] * suf[1:]
    return float(abs(pre[-1] - np.sum(0.5 * gm * excl)))
