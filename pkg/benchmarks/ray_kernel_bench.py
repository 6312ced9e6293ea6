#!/usr/bin/env python3
"""Benchmark the compiled ray-occlusion kernel against the pure-Python
fallback on the synthetic city, and verify both give identical answers.

Usage: python benchmarks/ray_kernel_bench.py [--segments N] [--blocks B]
"""

import argparse
import time

import numpy as np

from haps_deploy import citymodel, fixtures
from haps_deploy.citymodel import SEGMENT_ENDPOINT_OFFSET
from haps_deploy.kernels import ray_py
from haps_deploy.scenario import generate_synthetic_city

try:
    from haps_deploy.kernels import _ray_cy
except ImportError:
    _ray_cy = None


def make_segments(n, extent, rng):
    """Half street-to-sky links, half random low segments."""
    n_sky = n // 2
    origins = np.empty((n, 3))
    targets = np.empty((n, 3))
    origins[:n_sky] = np.column_stack([
        rng.uniform(-extent, extent, n_sky),
        rng.uniform(-extent, extent, n_sky),
        np.full(n_sky, 1.5),
    ])
    elev = np.deg2rad(rng.uniform(10.0, 85.0, n_sky))
    az = rng.uniform(0.0, 2 * np.pi, n_sky)
    length = rng.uniform(500.0, 45_000.0, n_sky)
    targets[:n_sky] = origins[:n_sky] + np.column_stack([
        length * np.cos(elev) * np.sin(az),
        length * np.cos(elev) * np.cos(az),
        length * np.sin(elev),
    ])
    origins[n_sky:] = np.column_stack([
        rng.uniform(-extent, extent, n - n_sky),
        rng.uniform(-extent, extent, n - n_sky),
        rng.uniform(0.0, 80.0, n - n_sky),
    ])
    targets[n_sky:] = np.column_stack([
        rng.uniform(-extent, extent, n - n_sky),
        rng.uniform(-extent, extent, n - n_sky),
        rng.uniform(0.0, 160.0, n - n_sky),
    ])
    return np.ascontiguousarray(origins), np.ascontiguousarray(targets)


def run_kernel(kernel, index, origins, targets, repeats):
    out = np.zeros(len(origins), dtype=np.uint8)
    args = (index.bmin, index.bmax, index.left, index.right, index.start,
            index.count, index.tri_v0, index.tri_v1, index.tri_v2,
            origins, targets, SEGMENT_ENDPOINT_OFFSET, out)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        kernel(*args)
        best = min(best, time.perf_counter() - start)
    return out.copy(), best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--segments", type=int, default=20_000)
    parser.add_argument("--blocks", type=int, default=5)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    mesh = generate_synthetic_city(args.blocks, (40.0, 40.0, 60.0), 30.0,
                                   fixtures.DEMO_CENTER)
    index = citymodel.build_index(mesh)
    extent = args.blocks * 35.0 + 60.0
    rng = np.random.default_rng(1)
    origins, targets = make_segments(args.segments, extent, rng)

    print(f"city: {mesh.n_triangles} triangles, {index.n_nodes} BVH nodes; "
          f"{args.segments} segments, best of {args.repeats}")

    out_py, t_py = run_kernel(ray_py.occluded_batch, index, origins, targets,
                              args.repeats)
    rate_py = args.segments / t_py
    print(f"python  : {t_py:8.3f} s  ({t_py / args.segments * 1e6:7.2f} us/query, "
          f"{rate_py:10.0f} q/s)  occluded={int(out_py.sum())}")

    if _ray_cy is None:
        print("compiled: not built (pip install -e . with Cython available)")
        return

    out_cy, t_cy = run_kernel(_ray_cy.occluded_batch, index, origins, targets,
                              args.repeats)
    rate_cy = args.segments / t_cy
    print(f"compiled: {t_cy:8.3f} s  ({t_cy / args.segments * 1e6:7.2f} us/query, "
          f"{rate_cy:10.0f} q/s)  occluded={int(out_cy.sum())}")
    agree = bool(np.array_equal(out_py, out_cy))
    print(f"speedup : {t_py / t_cy:6.1f}x   answers identical: {agree}")
    if not agree:
        raise SystemExit("kernel mismatch")


if __name__ == "__main__":
    main()
