"""Cost model and wall-clock comparison of the two adjustment kernels.

The iterated curve spends 4 elementwise ops per step (subtract, two
multiplies, add) on each of H*W*3 elements, n times; the linear mapping
spends 2 (multiply, add).  At the default n=8 the op-count ratio is exactly
16.  Wall-clock medians are reported rather than predicted, since memory
bandwidth compresses the gap.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .curves import DEFAULT_ITERATIONS, TangentMaps, apply_high_order, apply_tangent
from .errors import NumericError, ShapeMismatchError

OPS_PER_CURVE_STEP = 4
OPS_PER_LINEAR = 2
KINDS = ("iterative", "linear")


def count_flops(kind: str, height: int, width: int,
                iterations: int = DEFAULT_ITERATIONS) -> int:
    """Elementwise op count for one image adjustment."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    elements = height * width * 3
    if kind == "iterative":
        return OPS_PER_CURVE_STEP * iterations * elements
    if kind == "linear":
        return OPS_PER_LINEAR * elements
    raise ValueError(f"unknown kind {kind!r}")


def _run_kernel(kind: str, image, params, tangent, row_slice=slice(None)):
    if kind == "iterative":
        return apply_high_order(image[:, row_slice], params[:, :, row_slice])
    return apply_tangent(image[:, row_slice],
                         TangentMaps(tangent.slope[:, row_slice],
                                     tangent.intercept[:, row_slice]))


def time_op(kind: str, height: int, width: int, repetitions: int = 5,
            threads: int = 1, iterations: int = DEFAULT_ITERATIONS,
            seed: int = 0) -> dict:
    """Median wall time of one kernel invocation over pre-filled buffers.

    One warm-up pass is excluded.  threads > 1 tiles the image over rows.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    rng = np.random.default_rng(seed)
    image = rng.uniform(0, 1, (3, height, width)).astype(np.float32)
    params = rng.uniform(-1, 1, (iterations, 3, height, width)).astype(np.float32)
    tangent = TangentMaps(
        rng.uniform(0, 2, (3, height, width)).astype(np.float32),
        rng.uniform(-1, 1, (3, height, width)).astype(np.float32))

    if threads > 1:
        bounds = np.linspace(0, height, threads + 1).astype(int)
        slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        pool = ThreadPoolExecutor(max_workers=threads)

        def run():
            list(pool.map(lambda s: _run_kernel(kind, image, params, tangent, s), slices))
    else:
        pool = None

        def run():
            _run_kernel(kind, image, params, tangent)

    try:
        run()  # warm-up
        samples = []
        for _ in range(repetitions):
            t0 = time.perf_counter_ns()
            run()
            samples.append(time.perf_counter_ns() - t0)
    finally:
        if pool is not None:
            pool.shutdown()
    return {
        "kind": kind,
        "height": height,
        "width": width,
        "threads": threads,
        "median_ns": int(np.median(samples)),
        "flops": count_flops(kind, height, width, iterations),
    }


def write_bench_csv(path: str | Path, rows: list[dict]):
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(
            f, fieldnames=["kind", "height", "width", "threads", "median_ns", "flops"])
        writer.writeheader()
        writer.writerows(rows)


# -- similarity metrics ------------------------------------------------------

def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference over all elements."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"mse: {a.shape} vs {b.shape}")
    return float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))


def pcc(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation of the flattened elements, in [-1, 1]."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"pcc: {a.shape} vs {b.shape}")
    af = a.ravel().astype(np.float64)
    bf = b.ravel().astype(np.float64)
    ac = af - af.mean()
    bc = bf - bf.mean()
    denom = np.sqrt((ac * ac).sum() * (bc * bc).sum())
    if denom == 0.0:
        raise NumericError("pcc undefined for constant input")
    return float(np.clip((ac * bc).sum() / denom, -1.0, 1.0))


def region_mean_error(result: np.ndarray, emap: np.ndarray, region: int = 16) -> float:
    """Graph-free mirror of the exposure control loss: mean absolute
    difference of non-overlapping region means (partial edge regions dropped)."""
    result, emap = np.asarray(result), np.asarray(emap)
    if result.shape[-2:] != emap.shape[-2:]:
        raise ShapeMismatchError(f"region_mean_error: {result.shape} vs {emap.shape}")
    h, w = result.shape[-2:]
    ho, wo = h // region, w // region
    if ho < 1 or wo < 1:
        raise ValueError(f"image {h}x{w} smaller than one {region}px region")

    def tile_means(x):
        x = x.astype(np.float64).mean(axis=0) if x.ndim == 3 else x.astype(np.float64)
        x = x[:ho * region, :wo * region]
        return x.reshape(ho, region, wo, region).mean(axis=(1, 3))

    return float(np.abs(tile_means(result) - tile_means(emap)).mean())
