#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Each path runs in its own subprocess (the path is chosen at import time via
BELLKIT_NO_NUMBA), on the same fixed workload:

* scalar CH evaluations
* one full coarse-grid reduction (the 90^4 settings scan)
* a complete angle optimisation
* one efficiency-threshold bisection
* a small CH/N grid map

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, os, time
import numpy as np
import bellkit._kernels as K
from bellkit import EntangledState, ideal_arm, optimize_angles, efficiency_threshold
from bellkit.loophole_map import GridSpec, grid_map
from bellkit.optimizer import pack_params

state = EntangledState(0.7)
arm = ideal_arm()
P = pack_params(state, arm, arm, "heralded")
thetas = np.deg2rad(np.arange(0.0, 180.0, 2.0))

# warm-up (JIT compilation on the numba path)
K.ch_eval(0.3, 0.7, 1.1, 0.2, P)
K.topk_cells(thetas, P, 5)
optimize_angles(state, arm, arm, "heralded")

res = {"path": "numba" if K.NUMBA_ENABLED else "numpy"}

n = 200_000
t0 = time.perf_counter()
acc = 0.0
for i in range(n):
    acc += K.ch_eval(0.3 + 1e-6 * i, 0.7, 1.1, 0.2, P)
res["ch_eval_200k_s"] = time.perf_counter() - t0

t0 = time.perf_counter()
for _ in range(20):
    K.topk_cells(thetas, P, 5)
res["grid_scan_x20_s"] = time.perf_counter() - t0

t0 = time.perf_counter()
for _ in range(10):
    optimize_angles(state, arm, arm, "heralded")
res["optimize_x10_s"] = time.perf_counter() - t0

t0 = time.perf_counter()
efficiency_threshold(0.5)
res["threshold_s"] = time.perf_counter() - t0

t0 = time.perf_counter()
grid_map(GridSpec(eta_steps=12, f_steps=12))
res["map_12x12_s"] = time.perf_counter() - t0

print(json.dumps(res))
"""


def run_path(disable_numba: bool) -> dict:
    env = dict(os.environ)
    env["BELLKIT_NO_NUMBA"] = "1" if disable_numba else "0"
    out = subprocess.run([sys.executable, "-c", WORKLOAD], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=1,
                        help="repeat each path and keep the best run")
    args = parser.parse_args()

    results = {}
    for disable in (False, True):
        best = None
        for _ in range(args.repeat):
            r = run_path(disable)
            if best is None or sum(v for k, v in r.items() if k != "path") < \
                    sum(v for k, v in best.items() if k != "path"):
                best = r
        results[best["path"]] = best

    keys = [k for k in results.get("numba", results["numpy"]) if k != "path"]
    width = max(len(k) for k in keys)
    header = f"{'benchmark':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for k in keys:
        tn = results.get("numba", {}).get(k)
        tp = results["numpy"][k]
        if tn:
            print(f"{k:<{width}}  {tn:>9.4f}s  {tp:>9.4f}s  {tp / tn:>7.1f}x")
        else:
            print(f"{k:<{width}}  {'n/a':>10}  {tp:>9.4f}s")


if __name__ == "__main__":
    main()
