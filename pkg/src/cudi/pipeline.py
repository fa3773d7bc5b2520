"""Shared inference pipeline behind the CLI and the HTTP service."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bench import region_mean_error
from .curves import TangentMaps, analytic_tangent, apply_high_order, apply_tangent, heatmap_u8
from .errors import InvalidConfigError, RoleMismatchError, ShapeMismatchError
from .exposure import VARIANT_OVER, VARIANT_UNDER, uniform_map, variant_map
from .imageio import write_gray
from .networks import Student, Teacher

EXPOSURE_MODES = ("uniform", "auto-under", "auto-over", "map")


@dataclass
class AdjustRequest:
    image: np.ndarray                    # (3, H, W) in [0, 1]
    engine: str                          # "teacher" | "student"
    exposure_mode: str                   # one of EXPOSURE_MODES
    exposure_value: float | None = None  # required for "uniform"
    painted_map: np.ndarray | None = None  # (1, H, W), required for "map"
    bypass: bool = False                 # identity adjustment, for testing


def build_exposure_map(request: AdjustRequest) -> np.ndarray:
    h, w = request.image.shape[-2:]
    mode = request.exposure_mode
    if mode == "uniform":
        if request.exposure_value is None:
            raise InvalidConfigError("uniform exposure requires a value")
        return uniform_map(float(request.exposure_value), h, w)
    if mode == "auto-under":
        return variant_map(request.image, VARIANT_UNDER)
    if mode == "auto-over":
        return variant_map(request.image, VARIANT_OVER)
    if mode == "map":
        if request.painted_map is None:
            raise InvalidConfigError("map exposure mode requires a painted map")
        if request.painted_map.shape[-2:] != (h, w):
            raise ShapeMismatchError(
                f"painted map {request.painted_map.shape[-2:]} vs image {(h, w)}")
        return request.painted_map
    raise InvalidConfigError(f"unknown exposure mode {mode!r}; use one of {EXPOSURE_MODES}")


def run_adjust(model: Teacher | Student, request: AdjustRequest) -> tuple[np.ndarray, dict, dict]:
    """Returns (adjusted image, stats, parameter maps for optional dumping)."""
    if request.engine not in ("teacher", "student"):
        raise InvalidConfigError(f"unknown engine {request.engine!r}")
    if model.role != request.engine:
        raise RoleMismatchError(
            f"engine {request.engine!r} requires a {request.engine} checkpoint, "
            f"loaded model is a {model.role}")
    emap = build_exposure_map(request)
    t0 = time.perf_counter()
    maps: dict[str, np.ndarray] = {}
    if isinstance(model, Teacher):
        if request.bypass:
            n = model.config.iterations
            params = np.zeros((n, 3) + request.image.shape[-2:], dtype=np.float32)
        else:
            params = model.estimate_curve_params(request.image, emap)
        output = np.clip(apply_high_order(request.image, params), 0.0, 1.0)
        maps["curve_magnitude"] = params.mean(axis=(0, 1))
        tangent = analytic_tangent(request.image, params)
        maps["slope"] = tangent.slope.mean(axis=0)
        maps["intercept"] = tangent.intercept.mean(axis=0)
    else:
        if request.bypass:
            shape = (3,) + request.image.shape[-2:]
            slope = np.ones(shape, dtype=np.float32)
            intercept = np.zeros(shape, dtype=np.float32)
        else:
            slope, intercept = model.estimate_tangent(request.image, emap)
        output = apply_tangent(request.image, TangentMaps(slope, intercept), clamp=True)
        maps["slope"] = slope.mean(axis=0)
        maps["intercept"] = intercept.mean(axis=0)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    stats = {
        "region_mean_error": region_mean_error(output, emap),
        "mean_brightness": float(output.mean(dtype=np.float64)),
        "elapsed_ms": elapsed_ms,
    }
    return output, stats, maps


def dump_heatmaps(maps: dict[str, np.ndarray], directory: str | Path):
    """Write each parameter map as a min-max normalized grayscale PNG."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, values in maps.items():
        write_gray(directory / f"{name}.png", heatmap_u8(values))
