"""Hot numerical kernels, each in a numba and a numpy flavour.

The public dispatchers (``amplitudes``, ``markov_rk4``, ``full_rk4``) pick
the flavour from ``_accel.USE_NUMBA`` at call time.  Kernels take and return
plain arrays; validation and error raising live in the callers.
"""

import cmath
import math

import numpy as np

from . import _accel
from ._accel import njit

# Above this many channels the closed-form products are accumulated as
# complex logarithms to avoid overflow.
DIRECT_MAX = 64


# ---------------------------------------------------------------------------
# closed-form scattering amplitudes
# ---------------------------------------------------------------------------

@njit
def _cexp_shifted(z, m):
    # exp(z - m) with exp(-inf + i*phi) == 0
    if z.real == -np.inf:
        return 0j
    return cmath.exp(z - m)


@njit
def _clog(z):
    r = abs(z)
    if r == 0.0:
        return complex(-np.inf, 0.0)
    return complex(math.log(r), math.atan2(z.imag, z.real))


@njit
def _amplitudes_nb(omega, gm, gp, k, out):
    """Fill ``out`` with the output amplitudes; return (alpha_back, ok)."""
    n = omega.shape[0]
    a = np.empty(n, np.complex128)
    for j in range(n):
        a[j] = complex(0.5 * gp[j], omega[j] - k)

    if n <= DIRECT_MAX:
        pre = np.empty(n + 1, np.complex128)
        suf = np.empty(n + 1, np.complex128)
        pre[0] = 1.0
        suf[n] = 1.0
        for j in range(n):
            pre[j + 1] = pre[j] * a[j]
        for j in range(n - 1, -1, -1):
            suf[j] = suf[j + 1] * a[j]
        t = 0j
        for j in range(n):
            ex = pre[j] * suf[j + 1]
            out[j] = ex
            t += 0.5 * gm[j] * ex
        full = pre[n]
        d = full + t
        if d == 0:
            return 0j, False
        for j in range(n):
            out[j] = -math.sqrt(gm[j] * gp[j]) * out[j] / d
        return (full - t) / d, True

    la = np.empty(n, np.complex128)
    for j in range(n):
        la[j] = _clog(a[j])
    pre = np.empty(n + 1, np.complex128)
    suf = np.empty(n + 1, np.complex128)
    pre[0] = 0j
    suf[n] = 0j
    for j in range(n):
        pre[j + 1] = pre[j] + la[j]
    for j in range(n - 1, -1, -1):
        suf[j] = suf[j + 1] + la[j]
    full = pre[n]
    excl = np.empty(n, np.complex128)
    tlog = np.empty(n, np.complex128)
    m = full.real
    for j in range(n):
        excl[j] = pre[j] + suf[j + 1]
        if gm[j] > 0:
            tlog[j] = math.log(0.5 * gm[j]) + excl[j]
        else:
            tlog[j] = complex(-np.inf, 0.0)
        if tlog[j].real > m:
            m = tlog[j].real
    if m == -np.inf:
        return 0j, False
    head = _cexp_shifted(full, m)
    t = 0j
    for j in range(n):
        t += _cexp_shifted(tlog[j], m)
    d = head + t
    if d == 0:
        return 0j, False
    for j in range(n):
        g2 = gm[j] * gp[j]
        if g2 > 0:
            out[j] = -_cexp_shifted(0.5 * math.log(g2) + excl[j], m) / d
        else:
            out[j] = 0j
    return (head - t) / d, True


def _amplitudes_np(omega, gm, gp, k, out):
    n = omega.shape[0]
    a = 0.5 * gp + 1j * (omega - k)
    if n <= DIRECT_MAX:
        pre = np.concatenate(([1.0 + 0j], np.cumprod(a)))
        suf = np.concatenate((np.cumprod(a[::-1])[::-1], [1.0 + 0j]))
        excl = pre[:-1] * suf[1:]
        full = pre[-1]
        t = np.sum(0.5 * gm * excl)
        d = full + t
        if d == 0:
            return 0j, False
        out[:] = -np.sqrt(gm * gp) * excl / d
        return complex((full - t) / d), True

    with np.errstate(divide="ignore", invalid="ignore"):
        la = np.where(a == 0, complex(-np.inf, 0.0), np.log(np.where(a == 0, 1.0, a)))
        pre = np.concatenate(([0j], np.cumsum(la)))
        suf = np.concatenate((np.cumsum(la[::-1])[::-1], [0j]))
        excl = pre[:-1] + suf[1:]
        full = pre[-1]
        lgm = np.where(gm > 0, np.log(np.where(gm > 0, 0.5 * gm, 1.0)), -np.inf)
        tlog = lgm + excl
        m = max(full.real, np.max(tlog.real))
        if m == -np.inf:
            return 0j, False

        def shifted(z):
            z = np.asarray(z)
            return np.where(np.isneginf(z.real), 0j, np.exp(np.where(np.isneginf(z.real), 0j, z - m)))

        head = complex(shifted(full))
        t = complex(np.sum(shifted(tlog)))
        d = head + t
        if d == 0:
            return 0j, False
        g2 = gm * gp
        lg2 = np.where(g2 > 0, 0.5 * np.log(np.where(g2 > 0, g2, 1.0)), -np.inf)
        out[:] = -shifted(lg2 + excl) / d
    return complex((head - t) / d), True


def amplitudes(omega, gm, gp, k, use_numba=None):
    """Closed-form amplitudes; returns (alpha_back, alpha_out, ok)."""
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    out = np.empty(omega.shape[0], np.complex128)
    kernel = _amplitudes_nb if use_numba else _amplitudes_np
    back, ok = kernel(omega, gm, gp, float(k), out)
    return complex(back), out, bool(ok)


# ---------------------------------------------------------------------------
# Markovian emitter ODE, classical RK4
# ---------------------------------------------------------------------------

@njit
def _markov_rhs(t, beta, lam, b, amp, rate, dst):
    s = 0j
    for j in range(beta.shape[0]):
        s += b[j] * beta[j]
    d = cmath.exp(rate * t)
    for j in range(beta.shape[0]):
        dst[j] = lam[j] * beta[j] - b[j] * s - amp[j] * d


@njit
def _markov_nb(omega, gm, gp, varpi, eps, dt, n_steps, stride, bound,
               out_t, out_beta, out_flux):
    n = omega.shape[0]
    lam = np.empty(n, np.complex128)
    b = np.empty(n)
    amp = np.empty(n)
    for j in range(n):
        lam[j] = complex(-0.5 * gp[j], -omega[j])
        b[j] = math.sqrt(0.5 * gm[j])
        amp[j] = math.sqrt(2.0 * eps * gm[j])
    rate = complex(-eps, -varpi)

    beta = np.zeros(n, np.complex128)
    flux = np.zeros(n)
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    tmp = np.empty(n, np.complex128)

    row = 0
    out_t[0] = 0.0
    for j in range(n):
        out_beta[0, j] = 0j
        out_flux[0, j] = 0.0
    row = 1
    for step in range(1, n_steps + 1):
        t = (step - 1) * dt
        _markov_rhs(t, beta, lam, b, amp, rate, k1)
        for j in range(n):
            tmp[j] = beta[j] + 0.5 * dt * k1[j]
        _markov_rhs(t + 0.5 * dt, tmp, lam, b, amp, rate, k2)
        for j in range(n):
            tmp[j] = beta[j] + 0.5 * dt * k2[j]
        _markov_rhs(t + 0.5 * dt, tmp, lam, b, amp, rate, k3)
        for j in range(n):
            tmp[j] = beta[j] + dt * k3[j]
        _markov_rhs(t + dt, tmp, lam, b, amp, rate, k4)
        blown = False
        for j in range(n):
            old = beta[j].real ** 2 + beta[j].imag ** 2
            beta[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            new = beta[j].real ** 2 + beta[j].imag ** 2
            flux[j] += 0.5 * dt * gp[j] * (old + new)
            if new > bound * bound or new != new:
                blown = True
        if blown:
            return step
        if step % stride == 0 or step == n_steps:
            out_t[row] = step * dt
            for j in range(n):
                out_beta[row, j] = beta[j]
                out_flux[row, j] = flux[j]
            row += 1
    return -1


def _markov_np(omega, gm, gp, varpi, eps, dt, n_steps, stride, bound,
               out_t, out_beta, out_flux):
    lam = -(0.5 * gp + 1j * omega)
    b = np.sqrt(0.5 * gm)
    amp = np.sqrt(2.0 * eps * gm)
    rate = complex(-eps, -varpi)

    def rhs(t, beta):
        return lam * beta - b * (b @ beta) - amp * cmath.exp(rate * t)

    beta = np.zeros(omega.shape[0], np.complex128)
    flux = np.zeros(omega.shape[0])
    out_t[0] = 0.0
    out_beta[0] = 0.0
    out_flux[0] = 0.0
    row = 1
    half = 0.5 * dt
    for step in range(1, n_steps + 1):
        t = (step - 1) * dt
        k1 = rhs(t, beta)
        k2 = rhs(t + half, beta + half * k1)
        k3 = rhs(t + half, beta + half * k2)
        k4 = rhs(t + dt, beta + dt * k3)
        old = beta.real ** 2 + beta.imag ** 2
        beta = beta + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        new = beta.real ** 2 + beta.imag ** 2
        flux += half * gp * (old + new)
        if np.any(~(new <= bound * bound)):
            return step
        if step % stride == 0 or step == n_steps:
            out_t[row] = step * dt
            out_beta[row] = beta
            out_flux[row] = flux
            row += 1
    return -1


def n_stored(n_steps, stride):
    return n_steps // stride + 1 + (1 if n_steps % stride else 0)


def markov_rk4(omega, gm, gp, varpi, eps, dt, n_steps, stride, bound=1.0 + 1e-6,
               use_numba=None):
    """Integrate the driven emitter amplitudes from zero.

    Returns (times, beta, flux, failed_step); ``failed_step`` is -1 unless an
    amplitude exceeded ``bound``.
    """
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    n = omega.shape[0]
    rows = n_stored(n_steps, stride)
    out_t = np.zeros(rows)
    out_beta = np.zeros((rows, n), np.complex128)
    out_flux = np.zeros((rows, n))
    kernel = _markov_nb if use_numba else _markov_np
    failed = kernel(omega, gm, gp, float(varpi), float(eps), float(dt), int(n_steps),
                    int(stride), float(bound), out_t, out_beta, out_flux)
    return out_t, out_beta, out_flux, int(failed)


# ---------------------------------------------------------------------------
# discretized-mode Hamiltonian, classical RK4 in the frame rotating at varpi
# ---------------------------------------------------------------------------
# State layout: [input modes (M) | output guide 1 (M) | ... | guide N (M) | emitters (N)]

@njit
def _full_rhs(y, q, wb, cm, cp, n, m, dst):
    base = (n + 1) * m
    drive_in = 0j
    for i in range(n):
        drive_in += cm[i] * y[base + i]
    s_in = 0j
    for mm in range(m):
        s_in += y[mm]
        dst[mm] = complex(q[mm] * y[mm].imag, -q[mm] * y[mm].real) + complex(drive_in.imag, -drive_in.real)
    for i in range(n):
        off = (i + 1) * m
        bi = y[base + i]
        src = cp[i] * bi
        s_out = 0j
        for mm in range(m):
            v = y[off + mm]
            s_out += v
            dst[off + mm] = complex(q[mm] * v.imag, -q[mm] * v.real) + complex(src.imag, -src.real)
        acc = wb[i] * bi + cm[i] * s_in + cp[i] * s_out
        dst[base + i] = complex(acc.imag, -acc.real)


@njit
def _full_observe(y, n, m, dst):
    base = (n + 1) * m
    total = 0.0
    for c in range(n + 1):
        p = 0.0
        for mm in range(m):
            v = y[c * m + mm]
            p += v.real * v.real + v.imag * v.imag
        dst[c] = p
        total += p
    e = 0.0
    for i in range(n):
        v = y[base + i]
        e += v.real * v.real + v.imag * v.imag
    dst[n + 1] = e
    dst[n + 2] = total + e


@njit
def _full_nb(y0, q, wb, cm, cp, dt, n_steps, stride, out_t, out_obs):
    n = wb.shape[0]
    m = q.shape[0]
    dim = y0.shape[0]
    y = y0.copy()
    k1 = np.empty(dim, np.complex128)
    k2 = np.empty(dim, np.complex128)
    k3 = np.empty(dim, np.complex128)
    k4 = np.empty(dim, np.complex128)
    tmp = np.empty(dim, np.complex128)
    out_t[0] = 0.0
    _full_observe(y, n, m, out_obs[0])
    row = 1
    for step in range(1, n_steps + 1):
        _full_rhs(y, q, wb, cm, cp, n, m, k1)
        for j in range(dim):
            tmp[j] = y[j] + 0.5 * dt * k1[j]
        _full_rhs(tmp, q, wb, cm, cp, n, m, k2)
        for j in range(dim):
            tmp[j] = y[j] + 0.5 * dt * k2[j]
        _full_rhs(tmp, q, wb, cm, cp, n, m, k3)
        for j in range(dim):
            tmp[j] = y[j] + dt * k3[j]
        _full_rhs(tmp, q, wb, cm, cp, n, m, k4)
        for j in range(dim):
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        if step % stride == 0 or step == n_steps:
            out_t[row] = step * dt
            _full_observe(y, n, m, out_obs[row])
            row += 1
    return y


def _full_np(y0, q, wb, cm, cp, dt, n_steps, stride, out_t, out_obs):
    n = wb.shape[0]
    m = q.shape[0]
    base = (n + 1) * m

    def rhs(y):
        guides = y[:base].reshape(n + 1, m)
        beta = y[base:]
        sums = guides.sum(axis=1)
        src = np.concatenate(([cm @ beta], cp * beta))
        d_guides = -1j * (guides * q + src[:, None])
        d_beta = -1j * (wb * beta + cm * sums[0] + cp * sums[1:])
        return np.concatenate((d_guides.ravel(), d_beta))

    def observe(y):
        p = np.abs(y[:base].reshape(n + 1, m)) ** 2
        pops = p.sum(axis=1)
        e = float(np.sum(np.abs(y[base:]) ** 2))
        return np.concatenate((pops, [e, pops.sum() + e]))

    y = y0.copy()
    out_t[0] = 0.0
    out_obs[0] = observe(y)
    row = 1
    half = 0.5 * dt
    for step in range(1, n_steps + 1):
        k1 = rhs(y)
        k2 = rhs(y + half * k1)
        k3 = rhs(y + half * k2)
        k4 = rhs(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0 or step == n_steps:
            out_t[row] = step * dt
            out_obs[row] = observe(y)
            row += 1
    return y


def full_rk4(y0, q, wb, cm, cp, dt, n_steps, stride, use_numba=None):
    """Propagate the discretized single-excitation state.

    Returns (times, observables, final_state); observables columns are
    [P_back, P_1..P_N, emitter occupation, total norm].
    """
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    rows = n_stored(n_steps, stride)
    out_t = np.zeros(rows)
    out_obs = np.zeros((rows, wb.shape[0] + 3))
    kernel = _full_nb if use_numba else _full_np
    y = kernel(np.asarray(y0, np.complex128), q, wb, cm, cp, float(dt), int(n_steps), int(stride),
               out_t, out_obs)
    return out_t, out_obs, y
