"""Time the numba and pure-numpy flavours of each hot kernel.

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from photon_router import kernels
from photon_router._accel import HAVE_NUMBA


def _cases(rng):
    def amplitudes(n):
        omega, gm, gp = rng.uniform(-3, 3, n), rng.uniform(0.1, 3, n), rng.uniform(0.1, 3, n)
        return lambda use: [kernels.amplitudes(omega, gm, gp, 0.3, use_numba=use) for _ in range(1000)]

    def markov(n):
        omega, gm, gp = np.zeros(n), np.ones(n), np.ones(n)
        return lambda use: kernels.markov_rk4(omega, gm, gp, 0.0, 0.01, 0.01, 50_000, 1000, use_numba=use)

    def full(m, n):
        q = np.linspace(-20, 20, m)
        y0 = np.zeros((n + 1) * m + n, complex)
        y0[:m] = 1 / np.sqrt(m)
        coup = np.full(n, np.sqrt(0.05 / (2 * np.pi)))
        return lambda use: kernels.full_rk4(y0, q, np.zeros(n), coup, coup, 0.005, 2000, 500, use_numba=use)

    return [
        ("amplitudes N=4 (x1000)", amplitudes(4)),
        ("amplitudes N=200 log path (x1000)", amplitudes(200)),
        ("markov RK4 N=3, 5e4 steps", markov(3)),
        ("full Hamiltonian M=801 N=1, 2e3 steps", full(801, 1)),
    ]


def _best(fn, use, repeats):
    fn(use)  # warm-up / JIT compile
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(use)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy flavour can run")
    rng = np.random.default_rng(0)
    print(f"{'kernel':42s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for name, fn in _cases(rng):
        t_np = _best(fn, False, args.repeats)
        if HAVE_NUMBA:
            t_nb = _best(fn, True, args.repeats)
            print(f"{name:42s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x")
        else:
            print(f"{name:42s} {t_np:10.4f} {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
