"""Benchmark: compiled kernels vs the pure-Python fallback.

Times the two hot primitives (grid BFS floods, chain decoding/forward) in
isolation, then a full explicability-aware planning call under each backend.

    python benchmarks/bench_kernels.py [--repeats 5]
"""
import argparse
import os
import sys
import time

import numpy as np


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_primitives(repeats):
    from gridteam import _kernels_py

    try:
        from gridteam import _speedups
    except ImportError:
        _speedups = None

    rng = np.random.default_rng(0)
    grids = [(rng.random((20, 20)) < 0.25).astype(np.uint8) for _ in range(50)]
    for g in grids:
        g[0, 0] = 0
    chains = [(rng.normal(size=(40, 2)), rng.normal(size=(2, 2))) for _ in range(50)]

    rows = []
    for name, mod in [("python", _kernels_py), ("compiled", _speedups)]:
        if mod is None:
            continue

        def run_bfs():
            for g in grids:
                mod.grid_bfs(g, 0, 0)

        def run_chain():
            for e, t in chains:
                mod.viterbi(e, t)
                mod.crf_marginals(e, t)

        rows.append((name, timeit(run_bfs, repeats), timeit(run_chain, repeats)))
    return rows


def bench_planning(repeats):
    """Full plan_explicable call per backend (fresh interpreter state)."""
    import subprocess

    code = """
import time
import numpy as np
from gridteam.datakit import GenConfig, generate_problem
from gridteam.planner import plan_explicable
from gridteam.labeler import LabelerModel

# hand-built model: deviation feature votes INEXPLICABLE, bias mildly EXPLICABLE
index = {"bias": 0, "off_expected_path": 1, "hv_delta=+1": 2}
weights = np.zeros(2 * len(index) + 4)
weights[0] = 1.0    # bias -> EXPLICABLE
weights[3] = 4.0    # off_expected_path -> INEXPLICABLE
weights[5] = 2.0    # hv_delta=+1 -> INEXPLICABLE
model = LabelerModel(feature_index=index, weights=weights, l2_sigma=10.0)

p = generate_problem(123, GenConfig(require_divergence=True))
t0 = time.perf_counter()
plan_explicable(p, model)
print(time.perf_counter() - t0)
"""
    rows = []
    for backend in ("1", "0"):
        env = dict(os.environ, GRIDTEAM_PURE=backend)
        best = float("inf")
        for _ in range(repeats):
            out = subprocess.run(
                [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
            )
            best = min(best, float(out.stdout.strip()))
        rows.append(("python" if backend == "1" else "compiled", best))
    return rows


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"{'backend':<10}{'50 BFS floods (20x20)':>24}{'50 chains (T=40)':>20}")
    prim = bench_primitives(args.repeats)
    for name, bfs_t, chain_t in prim:
        print(f"{name:<10}{bfs_t * 1e3:>21.2f} ms{chain_t * 1e3:>17.2f} ms")
    if len(prim) == 2:
        (_, b0, c0), (_, b1, c1) = prim
        print(f"{'speedup':<10}{b0 / b1:>22.1f}x{c0 / c1:>18.1f}x")

    print()
    print(f"{'backend':<10}{'plan_explicable (10x10, CRF in loop)':>40}")
    for name, t in bench_planning(args.repeats):
        print(f"{name:<10}{t * 1e3:>37.1f} ms")


if __name__ == "__main__":
    main()
