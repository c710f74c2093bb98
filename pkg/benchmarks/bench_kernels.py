"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--end-to-end]

Kernel timings call both backend modules directly, so one process covers
both. ``--end-to-end`` also times a batch of regularized minimizations in
two subprocesses, one per value of PROXBR_USE_NUMBA.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from proxbr.kernels import _numba as nb
from proxbr.kernels import _numpy as npk


def _best(fn, repeat):
    fn()  # compile / warm up
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def kernel_cases(rng):
    m = 200_000
    Y = rng.normal(size=(m, 1))
    YS = rng.normal(size=(m, 1))
    Y3 = rng.normal(size=(m // 4, 3))
    fv = np.abs(Y[:, 0])
    x, xs = np.array([0.1]), np.array([0.3])
    vv = rng.normal(size=(m, 2))
    w = np.full((m, 1), 1e-3)
    # ekeland: many small descent steps on a fine 1-D grid
    P = np.linspace(-2, 2, 20001)[:, None]
    fe = P[:, 0] ** 2
    return {
        "pnorm_rows p=3 (50k x 3)": lambda k: k.pnorm_rows(Y3, 3.0),
        "duality_map_rows p=3 (50k x 3)": lambda k: k.duality_map_rows(Y3, 3.0),
        "regularized_values (200k)": lambda k: k.regularized_values(fv, Y, xs, 1.0, 2.0),
        "cell_lower_bounds (200k)": lambda k: k.cell_lower_bounds(vv, w, 1.0),
        "violation_min (200k)": lambda k: k.violation_min(Y, YS, x, xs),
        "entourage_search (200k)": lambda k: k.entourage_search(Y, YS, x, xs, 2.0, 2.0, 0.3, 0.3),
        "subgrad_residual (200k)": lambda k: k.subgrad_residual(Y, fv, x, 0.1, xs),
        "ekeland_descend (20k grid)": lambda k: k.ekeland_descend(fe, P, 1.9 ** 2, np.array([1.9]), 0.05, 2.0, 1e-12),
    }


E2E = """
import time, numpy as np
from proxbr import catalog_get, NormedSpace, regularized_argmin
sp = NormedSpace(1)
fs = [catalog_get(n) for n in ("abs", "quad", "w_shape", "l0")]
regularized_argmin(fs[0], sp, [0.0], [0.0], 1.0)
t = time.perf_counter()
for i, x in enumerate(np.linspace(-3, 3, 50)):
    regularized_argmin(fs[i % 4], sp, [x], [0.5], 1.0)
print(time.perf_counter() - t)
"""


def end_to_end():
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, PROXBR_USE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        out["numba" if flag == "1" else "numpy"] = float(res.stdout.strip().splitlines()[-1])
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, call in kernel_cases(rng).items():
        t_np = _best(lambda: call(npk), args.repeat)
        t_nb = _best(lambda: call(nb), args.repeat)
        print(f"{name:34s} {1e3 * t_np:10.3f} {1e3 * t_nb:10.3f} {t_np / t_nb:8.2f}")
    if args.end_to_end:
        t = end_to_end()
        print(f"\n50 regularized minimizations: numpy {t['numpy']:.3f} s, numba {t['numba']:.3f} s")


if __name__ == "__main__":
    main()
