"""Compare the numba and pure-numpy min-plus kernels.

Run ``python benchmarks/bench_kernels.py [--sizes 64 128 256] [--repeat 5]``.
Both paths are called directly (``*_numba`` / ``*_numpy``), so the
``WKAM_DISABLE_NUMBA`` flag does not matter here.  The first numba call of each
kernel is excluded from the timings (it compiles or loads the cache), and every
pair of results is checked for bitwise equality before timing.
"""

import argparse
import timeit

import numpy as np

from wkam import _accel, kernels
from wkam import hamiltonian as hm
from wkam.grid import TorusGrid
from wkam.lax_oleinik import OperatorConfig, step_cost_table


def cases(n, rng):
    g = TorusGrid(n, max(4, n // 8))
    cfg = OperatorConfig(vmax=3.0)
    M = cfg.half_width(g)
    cost = step_cost_table(hm.forced_pendulum(), g, cfg)[0]
    U = rng.uniform(-1, 1, (n, n))
    A, B = rng.uniform(-1, 1, (n, n)), rng.uniform(-1, 1, (n, n))
    x = max(1, n // 16)
    Hin, Hout, Hm = rng.uniform(-1, 1, (x * 4, n)), rng.uniform(-1, 1, (n, x * 4)), rng.uniform(-1, 1, (x * 4, x * 4))
    return {
        "push_rows": (kernels.push_rows_numba, kernels.push_rows_numpy, (U, cost, M)),
        "pull_rows": (kernels.pull_rows_numba, kernels.pull_rows_numpy, (U, cost, M)),
        "minplus_matmul": (kernels.minplus_matmul_numba, kernels.minplus_matmul_numpy, (A, B)),
        "karp_table": (kernels.karp_table_numba, kernels.karp_table_numpy, (A,)),
        "via_mask": (kernels.via_mask_numba, kernels.via_mask_numpy, (Hin, Hout, Hm)),
    }


def best_of(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05 and number < 10_000:
        number *= 4
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def same(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.array_equal(x, y) or np.allclose(x, y, rtol=0, atol=1e-15) for x, y in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    _accel.set_threads(args.threads)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'n':>6}{'numba [ms]':>14}{'numpy [ms]':>14}{'speedup':>10}  identical")
    for n in args.sizes:
        for name, (fast, slow, a) in cases(n, rng).items():
            fast(*a)  # compile / load from cache
            ok = same(fast(*a), slow(*a))
            t_fast = best_of(fast, a, args.repeat)
            t_slow = best_of(slow, a, args.repeat)
            print(f"{name:<16}{n:>6}{t_fast * 1e3:>14.3f}{t_slow * 1e3:>14.3f}{t_slow / t_fast:>10.1f}  {ok}")


if __name__ == "__main__":
    main()
