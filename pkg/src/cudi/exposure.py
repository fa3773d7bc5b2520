"""Condition exposure maps: the brightness targets fed alongside the image.

Maps are (1, H, W) float32 in [0, 1].  Training uses random two-valued maps
(one random region, one random complement value); inference uses uniform
maps, hand-painted maps, or the automatic spatially-variant map derived
from the input's luma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError

TRAIN_VALUE_LO = 0.2
TRAIN_VALUE_HI = 0.8

# uniform inference presets
PRESET_UNDEREXPOSED = 0.65
PRESET_OVEREXPOSED = 0.2

REC601_LUMA = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class VariantMapConfig:
    """Base level and amplitude of the automatic spatially-variant map."""
    base: float = 0.55            # 0.55 for underexposed, 0.25 for overexposed input
    amplitude: float = 0.15

    def __post_init__(self):
        if not (0.0 <= self.base - self.amplitude and self.base + self.amplitude <= 1.0):
            raise ValueError(f"variant map range [{self.base - self.amplitude}, "
                             f"{self.base + self.amplitude}] leaves [0, 1]")


VARIANT_UNDER = VariantMapConfig(base=0.55)
VARIANT_OVER = VariantMapConfig(base=0.25)


def uniform_map(value: float, height: int, width: int) -> np.ndarray:
    """Constant exposure map."""
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"exposure value {value} outside [0, 1]")
    return np.full((1, height, width), value, dtype=np.float32)


def sample_training_map(height: int, width: int, seed: int) -> np.ndarray:
    """Random two-valued map: one rectangle or ellipse region over a background.

    Region and background levels are independent uniforms in
    [TRAIN_VALUE_LO, TRAIN_VALUE_HI]; each region axis spans 10-80% of its
    dimension and the center is placed uniformly.  Deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    inside = rng.uniform(TRAIN_VALUE_LO, TRAIN_VALUE_HI)
    outside = rng.uniform(TRAIN_VALUE_LO, TRAIN_VALUE_HI)
    span_h = rng.uniform(0.1, 0.8) * height
    span_w = rng.uniform(0.1, 0.8) * width
    cy = rng.uniform(0, height)
    cx = rng.uniform(0, width)
    use_ellipse = rng.uniform() < 0.5

    yy = np.arange(height, dtype=np.float32)[:, None]
    xx = np.arange(width, dtype=np.float32)[None, :]
    if use_ellipse:
        mask = ((yy - cy) / (span_h / 2)) ** 2 + ((xx - cx) / (span_w / 2)) ** 2 <= 1.0
    else:
        mask = (np.abs(yy - cy) <= span_h / 2) & (np.abs(xx - cx) <= span_w / 2)

    out = np.full((height, width), outside, dtype=np.float32)
    out[mask] = inside
    return out[None]


def normalize_to_pm1(values: np.ndarray) -> np.ndarray:
    """Affine min-max mapping onto [-1, 1]; constant inputs map to zeros."""
    v = np.asarray(values, dtype=np.float32)
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.zeros_like(v)
    return ((v - lo) / (hi - lo) * 2.0 - 1.0).astype(np.float32)


def luma(image: np.ndarray) -> np.ndarray:
    """Rec.601 luminance of a (3, H, W) image."""
    if image.shape[0] != 3:
        raise ShapeMismatchError(f"luma: expected (3, H, W), got {image.shape}")
    wr, wg, wb = REC601_LUMA
    return (wr * image[0] + wg * image[1] + wb * image[2]).astype(np.float32)


def variant_map(image: np.ndarray, cfg: VariantMapConfig = VARIANT_UNDER) -> np.ndarray:
    """Automatic map: darker pixels get larger exposure targets.

    base + amplitude * normalize_to_pm1(mean_luma - luma), clamped to [0, 1].
    """
    lum = luma(image)
    deviation = np.float32(lum.mean(dtype=np.float64)) - lum
    out = cfg.base + cfg.amplitude * normalize_to_pm1(deviation)
    return np.clip(out, 0.0, 1.0).astype(np.float32)[None]
