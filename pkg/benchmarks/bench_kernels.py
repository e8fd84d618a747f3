"""Time the numba and numpy variants of each hot kernel.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The numba timings exclude the first (compiling) call.  Each row also reports
the largest absolute difference between the two outputs.
"""
import argparse
import timeit

import numpy as np

from repmut import kernels
from repmut._accel import HAVE_NUMBA
from repmut.initdata import uniform


def _cases():
    y = np.sin(np.linspace(0.0, 20.0, 200_001))
    yield "cumtrapz", (lambda f: f(y, 1e-4)), kernels.cumtrapz_nb, kernels.cumtrapz_np

    spec = uniform(0.5, 1.5)
    x = np.linspace(-8.0, 12.0, 1001)
    u0 = spec.cell_average(x, x[1] - x[0])
    u0[0] = u0[-1] = 0.0

    def fd(f):
        u = u0.copy()
        f(u, x, 0.02, 1e-4, 2000, 1.0, False, np.inf, 1e-8)
        return u

    yield "fd_advance", fd, kernels.fd_advance_nb, kernels.fd_advance_np

    xd = np.linspace(-4.0, 12.0, 4001)
    fdat = np.exp(-0.5 * (xd - 4.0) ** 2) / np.sqrt(2 * np.pi)
    ys = np.linspace(-2.0, 10.0, 401)
    yield "heat_convolve_log", (lambda f: f(xd, fdat, ys, 0.5, 1.0)), kernels.heat_convolve_log_nb, \
        kernels.heat_convolve_log_np

    tt = np.linspace(0.0, 40.0, 40_001)
    vals = np.sqrt(16.0 + 2.0 * tt * tt + 2.0 * tt)
    ders = (2.0 * tt + 1.0) / vals
    yield "rk4_warp", (lambda f: f(1e-3, vals, ders, 0.0, 1e-3, 2000)[0]), kernels.rk4_warp_nb, \
        kernels.rk4_warp_np


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; both columns time the numpy path")
    print(f"{'kernel':<20}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}{'max diff':>12}")
    for name, call, f_nb, f_np in _cases():
        out_nb = np.asarray(call(f_nb))  # compile
        out_np = np.asarray(call(f_np))
        t_nb = min(timeit.repeat(lambda: call(f_nb), number=1, repeat=args.repeat)) * 1e3
        t_np = min(timeit.repeat(lambda: call(f_np), number=1, repeat=args.repeat)) * 1e3
        diff = float(np.max(np.abs(out_nb - out_np)))
        print(f"{name:<20}{t_nb:>12.2f}{t_np:>12.2f}{t_np / t_nb:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
