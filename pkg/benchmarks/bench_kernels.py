"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--events 16000] [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from quadnc import _kernels_py
from quadnc.sampler import build_table, make_rng
from quadnc.states import Family, StateSpec

try:
    from quadnc import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--events", type=int, nargs="+", default=[16000, 1000000])
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args()
    if compiled is None:
        print("compiled extension not built; only the numpy fallback is available")
    table = build_table(StateSpec(Family.FOCK, n=3, eta=0.6))
    print("%-12s %10s %12s %12s %8s" % ("kernel", "events", "numpy [ms]", "cython [ms]", "speedup"))
    for n in args.events:
        u = make_rng(0).random(n)
        x = _kernels_py.inverse_cdf(u, table.grid, table.cdf)
        cases = [
            ("inverse_cdf", lambda m: m.inverse_cdf(u, table.grid, table.cdf)),
            ("bin_counts", lambda m: m.bin_counts(x)),
        ]
        for name, call in cases:
            t_py = best_of(lambda: call(_kernels_py), args.repeat) * 1e3
            if compiled is None:
                print("%-12s %10d %12.3f %12s %8s" % (name, n, t_py, "-", "-"))
                continue
            t_c = best_of(lambda: call(compiled), args.repeat) * 1e3
            print("%-12s %10d %12.3f %12.3f %7.1fx" % (name, n, t_py, t_c, t_py / t_c))


if __name__ == "__main__":
    main()
