"""Quadratic adjustment curves, their iterated composition, and tangent lines.

The per-pixel adjustment step is x -> x + a*x*(1-x) with magnitude a in
[-1, 1].  Iterating it n times (default 8) with per-iteration magnitude maps
gives the full adjustment; because each step maps [0,1] into [0,1] and is
monotone in x for |a| <= 1, so is the composition.

The composition can be replaced at inference time by its first-order
approximation slope*x + intercept.  `analytic_tangent` computes that line
exactly by the chain rule and is the ground-truth oracle the distillation
tests compare against: each step's derivative is 1 + a*(1 - 2x), hence the
slope is the product of those factors along the iteration and the intercept
anchors the line at the composed output.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import autodiff as ad
from .errors import InvalidConfigError, ShapeMismatchError

DEFAULT_ITERATIONS = 8


class TangentMaps(NamedTuple):
    """Pixel-wise linear mapping: out = slope * image + intercept."""
    slope: np.ndarray       # (3, H, W)
    intercept: np.ndarray   # (3, H, W)


def le_step(image: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """One quadratic adjustment step, elementwise x + a*x*(1-x)."""
    image = np.asarray(image, dtype=np.float32)
    alpha = np.asarray(alpha, dtype=np.float32)
    if image.shape != alpha.shape:
        raise ShapeMismatchError(f"le_step: {image.shape} vs {alpha.shape}")
    return image + alpha * image * (1.0 - image)


def apply_high_order(image: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Apply the n iterated quadratic steps.  params has shape (n,) + image.shape."""
    params = np.asarray(params, dtype=np.float32)
    if params.ndim != image.ndim + 1 or params.shape[0] < 1:
        raise InvalidConfigError(
            f"apply_high_order: need (n,)+{np.shape(image)} params, got {params.shape}")
    out = np.asarray(image, dtype=np.float32)
    for alpha in params:
        out = le_step(out, alpha)
    return out


def apply_tangent(image: np.ndarray, maps: TangentMaps, clamp: bool = False) -> np.ndarray:
    """Linear mapping slope*image + intercept; clamps to [0,1] for display only."""
    image = np.asarray(image, dtype=np.float32)
    slope, intercept = maps
    if slope.shape != image.shape or intercept.shape != image.shape:
        raise ShapeMismatchError(
            f"apply_tangent: {slope.shape}/{intercept.shape} vs {image.shape}")
    out = slope * image + intercept
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out


def analytic_tangent(image: np.ndarray, params: np.ndarray) -> TangentMaps:
    """Exact tangent line of the iterated curve at each pixel's input value.

    With y_0 = image and y_j = le_step(y_{j-1}, a_j), the slope is
    prod_j (1 + a_j*(1 - 2*y_{j-1})) and the intercept y_n - slope*image,
    so slope*image + intercept reproduces the composed output exactly at the
    point of tangency.  For |a| <= 1 and y in [0,1] every factor is >= 0.
    """
    image = np.asarray(image, dtype=np.float32)
    params = np.asarray(params, dtype=np.float32)
    # accumulate in float64 so the tangency identity holds to fine tolerance
    y = image.astype(np.float64)
    slope = np.ones_like(y)
    for alpha in params.astype(np.float64):
        slope *= 1.0 + alpha * (1.0 - 2.0 * y)
        y = y + alpha * y * (1.0 - y)
    intercept = y - slope * image
    return TangentMaps(slope.astype(np.float32), intercept.astype(np.float32))


# -- graph versions used inside training ------------------------------------

def curve_adjust_graph(image: ad.Tensor, param_maps: ad.Tensor,
                       iterations: int = DEFAULT_ITERATIONS) -> ad.Tensor:
    """Iterated curve on graph tensors; param_maps is (N, 3*iterations, H, W)."""
    if iterations < 1:
        raise InvalidConfigError("curve_adjust_graph: iterations must be >= 1")
    out = image
    for j in range(iterations):
        alpha = ad.slice_axis(param_maps, -3, 3 * j, 3 * j + 3)
        out = out + alpha * out * (1.0 - out)
    return out


def tangent_adjust_graph(image: ad.Tensor, slope: ad.Tensor,
                         intercept: ad.Tensor) -> ad.Tensor:
    """Unclamped linear mapping on graph tensors (clamping would kill grads)."""
    return slope * image + intercept


# -- visualization -----------------------------------------------------------

def heatmap_u8(values: np.ndarray) -> np.ndarray:
    """Min-max normalize any parameter map to [0,1] and quantize to uint8."""
    v = np.asarray(values, dtype=np.float32)
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        v = (v - lo) / (hi - lo)
    else:
        v = np.zeros_like(v)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)
