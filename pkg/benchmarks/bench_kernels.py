"""Compare the compiled denoiser kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 10000 100000] [--repeat 20]

Prints the best-of-``repeat`` time per call for each kernel and backend and
the speed-up of the compiled one.  Also checks the two agree.
"""
import argparse
import sys
import timeit

import numpy as np

from ampsi import kernels


def cases(n, rng):
    a, b = rng.normal(0, 1, (2, n))
    out, dout = np.empty(n), np.empty(n)
    return {
        "bg_eval": lambda mod: mod.bg_eval(a, b, 0.4, 0.2, 0.3, out, dout),
        "bern_eval": lambda mod: mod.bern_eval(a, b, 0.4, 0.3, 5, out, dout),
        "block_eval K=5": lambda mod: mod.block_eval(a, b, 5, 0.4, 0.3, out),
        "block_eval K=20": lambda mod: mod.block_eval(a, b, 20, 0.4, 0.3, out),
    }


def bench(sizes, repeat, seed=0):
    found = kernels.backends()
    rows = []
    for n in sizes:
        for name, call in cases(n, np.random.default_rng(seed)).items():
            times = {}
            results = {}
            for backend, mod in found.items():
                results[backend] = call(mod)
                times[backend] = min(timeit.repeat(lambda: call(mod), number=1, repeat=repeat))
            if len(results) == 2:
                ref = results["python"]
                if not np.isclose(results["compiled"], ref, rtol=1e-10, atol=1e-12):
                    raise AssertionError(f"{name}: backends disagree ({results['compiled']} vs {ref})")
            rows.append((n, name, times))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[10_000, 100_000, 1_000_000])
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args(argv)
    rows = bench(args.sizes, args.repeat)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'n':>9s}  {'kernel':<16s} {'python ms':>10s} {'compiled ms':>12s} {'speed-up':>9s}")
    for n, name, t in rows:
        py = t["python"] * 1e3
        if "compiled" in t:
            cy = t["compiled"] * 1e3
            print(f"{n:>9d}  {name:<16s} {py:>10.3f} {cy:>12.3f} {py / cy:>8.1f}x")
        else:
            print(f"{n:>9d}  {name:<16s} {py:>10.3f} {'n/a':>12s} {'':>9s}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
