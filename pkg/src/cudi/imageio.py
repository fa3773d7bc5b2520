"""PNG input/output on (C, H, W) float32 unit-interval arrays."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import IngestionError


def decode_rgb(data: bytes) -> np.ndarray:
    """PNG/JPEG bytes -> (3, H, W) float32 in [0, 1]."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise IngestionError(f"undecodable image: {exc}") from exc
    arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def decode_gray(data: bytes) -> np.ndarray:
    """8-bit grayscale bytes -> (1, H, W) float32 in [0, 1]."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise IngestionError(f"undecodable image: {exc}") from exc
    arr = np.asarray(img.convert("L"), dtype=np.float32) / 255.0
    return arr[None]


def quantize_u8(arr: np.ndarray) -> np.ndarray:
    """[0,1] floats -> uint8 by round-half-up after clamping."""
    clipped = np.clip(np.asarray(arr, dtype=np.float32), 0.0, 1.0)
    return np.floor(clipped * 255.0 + 0.5).astype(np.uint8)


def encode_rgb_png(image: np.ndarray) -> bytes:
    """(3, H, W) floats in [0,1] -> PNG bytes."""
    u8 = quantize_u8(image).transpose(1, 2, 0)
    buf = io.BytesIO()
    Image.fromarray(u8, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def encode_gray_png(u8_map: np.ndarray) -> bytes:
    """(H, W) uint8 -> grayscale PNG bytes."""
    buf = io.BytesIO()
    Image.fromarray(np.asarray(u8_map, dtype=np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def read_rgb(path: str | Path) -> np.ndarray:
    return decode_rgb(Path(path).read_bytes())


def read_gray(path: str | Path) -> np.ndarray:
    return decode_gray(Path(path).read_bytes())


def write_rgb(path: str | Path, image: np.ndarray):
    Path(path).write_bytes(encode_rgb_png(image))


def write_gray(path: str | Path, u8_map: np.ndarray):
    Path(path).write_bytes(encode_gray_png(u8_map))


def list_corpus(directory: str | Path) -> list[Path]:
    """Sorted PNG paths of a training corpus directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestionError(f"corpus directory {directory} does not exist")
    paths = sorted(directory.glob("*.png"))
    if not paths:
        raise IngestionError(f"corpus directory {directory} holds no .png images")
    return paths
