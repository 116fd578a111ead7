"""Laplace-domain emitter equations, solved as an explicit linear system.

After the Laplace transform the emitter amplitudes satisfy

    a_i beta_i(s) + b_i sum_j b_j beta_j(s) + c_i = 0,

with ``a_i = s + i omega_i + gamma_i^+/2``, ``b_i = sqrt(gamma_i^-/2)`` and a
drive ``c_i`` set by the Lorentzian input.  The matrix ``diag(a) + b b^T`` is
diagonal plus rank one.  This module solves it densely (LAPACK LU) and by
the O(N) rank-one reduction, and extracts the on-shell transfer
coefficients, giving an evaluation path independent of the closed-form
products in :mod:`photon_router.core`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DegenerateDenominator, SingularSystem
from .model import PulseSpec, RouterConfig, ScatteringAmplitudes

SINGULAR_RTOL = 1e-14


@dataclass(frozen=True)
class LaplaceSystem:
    s: complex
    diag: np.ndarray
    rank_one: np.ndarray
    drive: np.ndarray

    def __post_init__(self):
        if not (len(self.diag) == len(self.rank_one) == len(self.drive)):
            raise ValueError("diag, rank_one and drive must have equal length")

    @property
    def n(self) -> int:
        return len(self.diag)

    def matrix(self) -> np.ndarray:
        return np.diag(self.diag) + np.outer(self.rank_one, self.rank_one)


def coupling(gamma):
    """Mode coupling g = sqrt(gamma / 2 pi) for a decay rate gamma."""
    return np.sqrt(np.asarray(gamma, dtype=np.float64) / (2.0 * np.pi))


def assemble_system(config: RouterConfig, pulse: PulseSpec, s: complex) -> LaplaceSystem:
    omega, gm, gp = config.arrays()
    s = complex(s)
    diag = s + 1j * omega + 0.5 * gp
    b = np.sqrt(0.5 * gm)
    prefactor = 2.0 * np.pi * math.sqrt(pulse.epsilon / np.pi) / (s + pulse.epsilon + 1j * pulse.varpi)
    drive = prefactor * coupling(gm)
    return LaplaceSystem(s, diag.astype(np.complex128), b, drive.astype(np.complex128))


def _solve_matrix(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(mat, np.inf)
    with warnings.catch_warnings():
        # singularity is reported below via the pivot check
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(mat, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if norm == 0 or pivots.min() < SINGULAR_RTOL * norm:
        raise SingularSystem(f"pivot {pivots.min():.3e} below {SINGULAR_RTOL} x ||M|| = {norm:.3e}")
    return linalg.lu_solve((lu, piv), rhs)


def solve_dense(system: LaplaceSystem) -> np.ndarray:
    """beta with M beta = -c by partially pivoted LU."""
    return _solve_matrix(system.matrix(), -np.asarray(system.drive, np.complex128))


def _rank_one(diag, b, rhs):
    # (diag(a) + b b^T) x = rhs
    diag = np.asarray(diag, np.complex128)
    if np.any(np.abs(diag) < SINGULAR_RTOL):
        raise SingularSystem("a diagonal entry vanishes; rank-one reduction unavailable")
    scalar = 1.0 + np.sum(b * b / diag)
    if abs(scalar) < SINGULAR_RTOL:
        raise SingularSystem("scalar denominator 1 + sum b^2/a vanishes")
    s = np.sum(b * rhs / diag) / scalar
    return (rhs - b * s) / diag


def solve_rank_one(system: LaplaceSystem) -> np.ndarray:
    """Same beta as :func:`solve_dense` in O(N).

    Eliminating ``S = sum_j b_j beta_j`` gives the scalar equation
    ``S (1 + sum_i b_i^2/a_i) = -sum_i b_i c_i/a_i``; back-substitution
    yields ``beta_i = -(c_i + b_i S)/a_i``.
    """
    return _rank_one(system.diag, system.rank_one, -np.asarray(system.drive, np.complex128))


def beta_closed_form(config: RouterConfig, pulse: PulseSpec, s: complex) -> np.ndarray:
    """Product/sum expression for beta_i(s), with the normalized drive prefactor."""
    omega, gm, gp = config.arrays()
    s = complex(s)
    a = s + 1j * omega + 0.5 * gp
    n = a.shape[0]
    pre = np.concatenate(([1.0 + 0j], np.cumprod(a)))
    suf = np.concatenate((np.cumprod(a[::-1])[::-1], [1.0 + 0j]))
    excl = pre[:n] * suf[1:]
    den = pre[n] + np.sum(0.5 * gm * excl)
    if den == 0:
        raise DegenerateDenominator("beta(s) denominator vanishes")
    prefactor = 2.0 * np.pi * math.sqrt(pulse.epsilon / np.pi) / (s + pulse.epsilon + 1j * pulse.varpi)
    return -prefactor * coupling(gm) * excl / den


def transfer_amplitudes(config: RouterConfig, k: float, method: str = "dense") -> ScatteringAmplitudes:
    """Long-time transfer coefficients from the linear system at s = -ik.

    Solves ``M(-ik) x = g^-`` and returns ``alpha_out = -2 pi g^+ x`` and
    ``alpha_back = 1 - 2 pi g^- . x``.
    """
    omega, gm, gp = config.arrays()
    diag = (0.5 * gp + 1j * (omega - k)).astype(np.complex128)
    b = np.sqrt(0.5 * gm)
    g_minus = coupling(gm).astype(np.complex128)
    if method == "dense":
        x = _solve_matrix(np.diag(diag) + np.outer(b, b), g_minus)
    elif method == "rank_one":
        x = _rank_one(diag, b, g_minus)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = -2.0 * np.pi * coupling(gp) * x
    back = 1.0 - 2.0 * np.pi * np.dot(g_minus, x)
    return ScatteringAmplitudes(float(k), complex(back), tuple(complex(v) for v in out))
