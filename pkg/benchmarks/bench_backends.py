#!/usr/bin/env python3
"""Compare the compiled event-loop kernels against the pure-Python ones.

Both backends consume the identical uniform stream, so the check column
doubles as a correctness probe: the final configurations must match bit
for bit.  Run with ``python benchmarks/bench_backends.py``.
"""

import argparse
import time

import numpy as np

from zrp.backend import get_kernels
from zrp.core import dirac_config, make_generator
from zrp.coupling import delta_table
from zrp.rates import preset, rate_table


def time_kernel(kern, name, args_fn, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        args = args_fn()
        t0 = time.perf_counter()
        result = getattr(kern, name)(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200, help="sites (and particles)")
    parser.add_argument("--horizon", type=float, default=None,
                        help="simulation horizon (default 0.5*n)")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    compiled = get_kernels(pure=False)
    pure = get_kernels(pure=True)
    if not compiled.COMPILED:
        print("compiled extension not available; nothing to compare")
        return

    n = args.n
    horizon = args.horizon if args.horizon is not None else 0.5 * n
    rate = preset("rate-one")
    occ = dirac_config(n, n).occupancies
    # sized for the pair case, whose upper chain holds 2n particles
    rtab = rate_table(rate, 2 * n + 2)
    dtab = delta_table(rate, 2 * n + 2)
    grid = np.linspace(0.0, horizon, 9)

    print(f"n={n} m={n} horizon={horizon:g} (best of {args.repeat})")
    print(f"{'kernel':<14}{'compiled':>12}{'pure':>12}{'speedup':>9}  events/s(compiled)")

    cases = {
        "graphical": lambda: (occ, rtab, horizon, grid, make_generator(1)),
        "fast": lambda: (occ, rtab, horizon, grid, make_generator(2)),
        "pair": lambda: (occ, occ + 1, rtab, horizon, grid, make_generator(3)),
        "tagged": lambda: (occ, 0, 1, rtab, dtab, horizon, grid,
                           make_generator(4), make_generator(5), False),
    }
    for name, args_fn in cases.items():
        tc, rc = time_kernel(compiled, name, args_fn, args.repeat)
        tp, rp = time_kernel(pure, name, args_fn, 1)
        events = {"graphical": lambda r: r[1], "fast": lambda r: r[1],
                  "pair": lambda r: r[3], "tagged": lambda r: None}[name](rc)
        first_c = rc[0] if not isinstance(rc[0], tuple) else rc[0]
        first_p = rp[0]
        same = (np.array_equal(first_c, first_p)
                if first_c is not None else rc[2] == rp[2])
        rate_str = f"{events / tc / 1e6:8.1f} M" if events else "       -"
        print(f"{name:<14}{tc * 1e3:>10.1f}ms{tp * 1e3:>10.1f}ms{tp / tc:>8.0f}x "
              f"{rate_str}  identical={same}")

    w = np.asarray(rate.factorial_weights())
    knots = np.linspace(0.0, 3.0, 4)
    tc, rc = time_kernel(compiled, "dissolve_rk4",
                         lambda: (w, np.array([1.0]), 1.0, knots, 1e-4), args.repeat)
    tp, rp = time_kernel(pure, "dissolve_rk4",
                         lambda: (w, np.array([1.0]), 1.0, knots, 1e-4), 1)
    print(f"{'dissolve_rk4':<14}{tc * 1e3:>10.1f}ms{tp * 1e3:>10.1f}ms{tp / tc:>8.0f}x "
          f"         -  identical={np.array_equal(rc, rp)}")


if __name__ == "__main__":
    main()
