"""Procedural corpus generation for desk-scale experiments.

Training only needs a directory of normal-brightness 8-bit PNGs and is
insensitive to their origin, so workstation runs and the test suite build a
small synthetic corpus: smooth low-frequency gradients, a few geometric
shapes of varying intensity, and mild texture noise, with mid-range mean
brightness.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imageio import write_rgb


def _smooth_field(rng: np.random.Generator, size: int, cells: int) -> np.ndarray:
    """Low-frequency random field in [0,1] from a bilinearly-upsampled grid."""
    coarse = rng.uniform(0.0, 1.0, (cells, cells))
    idx = np.linspace(0, cells - 1, size)
    i0 = np.floor(idx).astype(int)
    i1 = np.minimum(i0 + 1, cells - 1)
    f = idx - i0
    rows = coarse[i0][:, i0] * np.outer(1 - f, 1 - f) \
        + coarse[i0][:, i1] * np.outer(1 - f, f) \
        + coarse[i1][:, i0] * np.outer(f, 1 - f) \
        + coarse[i1][:, i1] * np.outer(f, f)
    return rows


def synthetic_image(seed: int, size: int = 128) -> np.ndarray:
    """One (3, size, size) float32 image in [0,1] with mid-range brightness."""
    rng = np.random.default_rng(seed)
    img = np.empty((3, size, size), dtype=np.float64)
    base = _smooth_field(rng, size, int(rng.integers(3, 7)))
    for c in range(3):
        tint = 0.75 + 0.5 * rng.uniform()
        img[c] = np.clip(base * tint + rng.uniform(-0.08, 0.08), 0, 1)

    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(int(rng.integers(2, 6))):
        cy, cx = rng.uniform(0, size, 2)
        ry, rx = rng.uniform(size * 0.05, size * 0.35, 2)
        level = rng.uniform(0.15, 0.85, 3)
        blend = rng.uniform(0.4, 0.9)
        if rng.uniform() < 0.5:
            mask = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        else:
            mask = (np.abs(yy - cy) <= ry) & (np.abs(xx - cx) <= rx)
        for c in range(3):
            img[c][mask] = (1 - blend) * img[c][mask] + blend * level[c]

    img += rng.normal(0, 0.015, img.shape)
    img = np.clip(img, 0.0, 1.0)
    # pull mean brightness into a normal-exposure band
    mean = img.mean()
    target = rng.uniform(0.35, 0.6)
    img = np.clip(img + (target - mean), 0.0, 1.0)
    return img.astype(np.float32)


def synthetic_corpus(directory: str | Path, count: int = 50, size: int = 128,
                     seed: int = 0) -> list[Path]:
    """Write `count` synthetic PNGs into `directory`; deterministic per seed."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        path = directory / f"img_{i:04d}.png"
        write_rgb(path, synthetic_image(seed * 100003 + i, size))
        paths.append(path)
    return paths
