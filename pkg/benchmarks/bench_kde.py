"""Time the Gaussian product-kernel sums and a full fit on both backends.

Usage: python benchmarks/bench_kde.py [--sizes 200,1000,4000] [--repeat 5]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from rsklpr import _accel

FIT_SNIPPET = """
import time, numpy as np
from rsklpr import DataSet, EstimatorConfig, predict, USE_NUMBA
r = np.random.default_rng(0)
X = r.uniform(size=2000); Y = np.sin(6 * X) + r.exponential(0.3, 2000)
cfg = EstimatorConfig('rsklpr', 200)
predict(cfg, DataSet(X, Y), [0.5])
t = time.perf_counter(); predict(cfg, DataSet(X, Y), np.linspace(0, 1, 100))
print(USE_NUMBA, time.perf_counter() - t)
"""


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="200,1000,4000")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'n':>6} {'numpy s':>10} {'numba s':>10} {'speedup':>8} {'max rel diff':>13}")
    for n in (int(v) for v in args.sizes.split(",")):
        V = rng.normal(size=(n, 2))
        h = np.array([0.3, 0.4])
        t_np = best_of(lambda: _accel.gauss_product_sums_numpy(V, V, h), args.repeat)
        if not _accel.HAVE_NUMBA:
            print(f"{n:>6} {t_np:>10.4f} {'n/a':>10}")
            continue
        _accel.gauss_product_sums_numba(V[:2], V[:2], h)  # compile
        t_nb = best_of(lambda: _accel.gauss_product_sums_numba(V, V, h), args.repeat)
        a = _accel.gauss_product_sums_numpy(V, V, h)
        b = _accel.gauss_product_sums_numba(V, V, h)
        diff = float(np.max(np.abs(a - b) / a))
        print(f"{n:>6} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>8.1f} {diff:>13.1e}")
    print("\nfull fit, T=2000, N=200, 100 queries:")
    for flag in ("1", "0"):
        env = dict(os.environ, RSKLPR_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", FIT_SNIPPET], env=env, capture_output=True, text=True, check=True)
        use, secs = out.stdout.split()
        print(f"  numba={use:<5} {float(secs):.3f}s")


if __name__ == "__main__":
    main()
