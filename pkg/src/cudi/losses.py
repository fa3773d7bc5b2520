"""Non-reference training losses, differentiable through the autodiff graph.

All functions accept (C, H, W) tensors or batched (N, C, H, W) tensors and
return a scalar; batched inputs are averaged over the batch.  "Intensity"
of an RGB tensor always means the mean over the three channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import InvalidConfigError, ShapeMismatchError


@dataclass(frozen=True)
class LossConfig:
    """Region sizes and component weights of the teacher objective."""
    sec_region: int = 16
    sc_region: int = 4
    weight_sec: float = 10.0
    weight_sc: float = 1.0
    weight_cc: float = 5.0
    weight_is: float = 200.0


DEFAULT_LOSS_CONFIG = LossConfig()


def _batch_count(t: Tensor) -> int:
    return t.data.shape[0] if t.data.ndim == 4 else 1


def _intensity(t: Tensor) -> Tensor:
    """Channel-averaged brightness, keeping a singleton channel axis."""
    return ad.mean(t, axis=-3, keepdims=True)


def spatial_exposure_control_loss(result: Tensor, emap: Tensor,
                                  cfg: LossConfig = DEFAULT_LOSS_CONFIG) -> Tensor:
    """L1 distance between per-tile mean intensity and per-tile mean target.

    Tiles are non-overlapping cfg.sec_region squares; partial edge tiles are
    dropped.
    """
    if result.data.shape[-2:] != emap.data.shape[-2:]:
        raise ShapeMismatchError(
            f"exposure control: result {result.data.shape} vs map {emap.data.shape}")
    r_tiles = ad.avg_pool(_intensity(result), cfg.sec_region)
    e_tiles = ad.avg_pool(emap, cfg.sec_region)
    return ad.mean(ad.absval(r_tiles - e_tiles))


def spatial_consistency_loss(result: Tensor, source: Tensor,
                             cfg: LossConfig = DEFAULT_LOSS_CONFIG) -> Tensor:
    """Penalty on changed mean differences between adjacent regions.

    Region means come from non-overlapping cfg.sc_region squares of the
    channel-averaged intensity.  Every directed neighbor pair (up, down,
    left, right; grid edges skip missing neighbors) contributes
    (|result diff| - |source diff|)^2, normalized by the region count.
    """
    if result.data.shape != source.data.shape:
        raise ShapeMismatchError(
            f"spatial consistency: {result.data.shape} vs {source.data.shape}")
    r = ad.avg_pool(_intensity(result), cfg.sc_region)
    s = ad.avg_pool(_intensity(source), cfg.sc_region)
    gh, gw = r.data.shape[-2:]
    n_regions = gh * gw * _batch_count(result)

    def _axis_term(a: Tensor, b: Tensor, axis: int) -> Tensor:
        size = a.data.shape[axis]
        da = ad.absval(ad.slice_axis(a, axis, 1, size) - ad.slice_axis(a, axis, 0, size - 1))
        db = ad.absval(ad.slice_axis(b, axis, 1, size) - ad.slice_axis(b, axis, 0, size - 1))
        return ad.tsum(ad.square(da - db))

    total = _axis_term(r, s, -2) + _axis_term(r, s, -1)
    # each undirected neighbor pair is seen from both sides
    return (2.0 / n_regions) * total


def color_constancy_loss(result: Tensor) -> Tensor:
    """Gray-world penalty: squared pairwise differences of channel means."""
    if result.data.shape[-3] != 3:
        raise ShapeMismatchError("color constancy: expected 3 channels")
    means = ad.mean(result, axis=(-2, -1))
    r = ad.slice_axis(means, -1, 0, 1)
    g = ad.slice_axis(means, -1, 1, 2)
    b = ad.slice_axis(means, -1, 2, 3)
    pair_sum = ad.square(r - g) + ad.square(r - b) + ad.square(g - b)
    return ad.mean(pair_sum)


def illumination_smoothness_loss(param_maps: Tensor) -> Tensor:
    """Squared total-variation penalty on every curve magnitude map.

    param_maps holds 3*n channels (n iterations x RGB).  Per map, the
    penalty is (sum |forward dx| + sum |forward dy|)^2; the total is
    normalized by the iteration count n (and the batch, if any).
    """
    c = param_maps.data.shape[-3]
    if c % 3:
        raise InvalidConfigError(f"smoothness: channel count {c} not divisible by 3")
    h, w = param_maps.data.shape[-2:]
    if h < 2 or w < 2:
        raise InvalidConfigError(f"smoothness: spatial dims {h}x{w} too small")
    iterations = c // 3

    dx = ad.slice_axis(param_maps, -1, 1, w) - ad.slice_axis(param_maps, -1, 0, w - 1)
    dy = ad.slice_axis(param_maps, -2, 1, h) - ad.slice_axis(param_maps, -2, 0, h - 1)
    gx = ad.tsum(ad.absval(dx), axis=(-2, -1))   # (..., c)
    gy = ad.tsum(ad.absval(dy), axis=(-2, -1))
    per_map = ad.square(gx + gy)
    per_image = ad.tsum(per_map, axis=-1)
    return ad.mean((1.0 / iterations) * per_image)


def teacher_total_loss(result: Tensor, source: Tensor, emap: Tensor,
                       param_maps: Tensor,
                       cfg: LossConfig = DEFAULT_LOSS_CONFIG) -> tuple[Tensor, dict]:
    """Weighted sum of the four components; also returns their raw values."""
    l_sec = spatial_exposure_control_loss(result, emap, cfg)
    l_sc = spatial_consistency_loss(result, source, cfg)
    l_cc = color_constancy_loss(result)
    l_is = illumination_smoothness_loss(param_maps)
    total = (cfg.weight_sec * l_sec + cfg.weight_sc * l_sc
             + cfg.weight_cc * l_cc + cfg.weight_is * l_is)
    parts = {"sec": float(l_sec.data), "sc": float(l_sc.data),
             "cc": float(l_cc.data), "is": float(l_is.data)}
    return total, parts


def distill_loss(student_out: Tensor, teacher_out: Tensor) -> Tensor:
    """Mean absolute difference between the two adjusted outputs."""
    if student_out.data.shape != teacher_out.data.shape:
        raise ShapeMismatchError(
            f"distill: {student_out.data.shape} vs {teacher_out.data.shape}")
    return ad.mean(ad.absval(student_out - teacher_out))
