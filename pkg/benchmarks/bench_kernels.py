"""Compare the compiled and numpy kernel backends.

Times the dense Hilbert-matrix assembly and the square-kernel apply on a
Stokes-like curve, checks that both backends agree, and prints one row per
(kernel, n).  Run with ``python3 benchmarks/bench_kernels.py [n ...]``.
"""

import argparse
import time

import numpy as np

from wuwave import _pykernels
from wuwave.spectral import Grid, deriv

try:
    from wuwave import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def curve_inputs(n: int, q: float = 10.0, eps: float = 0.1):
    grid = Grid(q, n)
    offset = 1j * eps * np.exp(1j * grid.nodes) + 1j * eps**2
    zeta = grid.nodes + offset
    e = np.exp(1j * zeta / q)
    zp = 1.0 + deriv(grid, offset)
    zpp = deriv(grid, offset, 2)
    p0_im, inv_d0 = grid._flat_tables
    u = 1j * eps * np.exp(1j * grid.nodes) * (1.0 + 0.5 * eps**2)
    diag = (2.0 * q * deriv(grid, u) / zp) ** 2
    fb = np.ascontiguousarray(deriv(grid, np.exp(1j * grid.nodes) * eps))
    return grid, (e, zp, zpp, p0_im, inv_d0, grid.h, float(q)), (e, u, diag, fb, grid.h, float(q))


def best_time(fn, args, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("sizes", nargs="*", type=int, default=[256, 512, 1024])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
    print(f"{'kernel':<20}{'n':>6}{'python [ms]':>14}{'compiled [ms]':>16}{'speedup':>10}{'max diff':>12}")
    for n in args.sizes:
        _, hargs, sargs = curve_inputs(n)
        for name, a in (("hilbert_matrices", hargs), ("square_kernel_apply", sargs)):
            t_py = best_time(getattr(_pykernels, name), a, args.repeat)
            if _ckernels is None:
                print(f"{name:<20}{n:>6}{1e3 * t_py:>14.2f}{'-':>16}{'-':>10}{'-':>12}")
                continue
            t_c = best_time(getattr(_ckernels, name), a, args.repeat)
            r_py = getattr(_pykernels, name)(*a)
            r_c = getattr(_ckernels, name)(*a)
            if isinstance(r_py, tuple):
                diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(r_py, r_c))
            else:
                diff = float(np.max(np.abs(r_py - r_c)))
            print(f"{name:<20}{n:>6}{1e3 * t_py:>14.2f}{1e3 * t_c:>16.2f}{t_py / t_c:>10.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
