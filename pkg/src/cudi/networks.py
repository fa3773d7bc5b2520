"""Teacher and student estimators plus checkpoint serialization.

The teacher is a Unet-like stack without spatial scaling: four encode
stages, a bottleneck, and three decode stages whose inputs concatenate the
mirrored encode outputs, ending in a tanh layer that emits one magnitude
map per color channel per curve iteration.  A width multiplier scales every
stage for desk-size training runs.

The student runs on 4x-downsampled inputs, uses depthwise-separable blocks
on a 16-channel trunk with mirrored concatenations, emits 3 slope + 3
intercept channels with no output activation, and upsamples back to input
resolution.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import CheckpointError, InvalidConfigError, RoleMismatchError, ShapeMismatchError

CHECKPOINT_MAGIC = b"CUDI1"
FINAL_LAYER_STD = 0.02


@dataclass(frozen=True)
class TeacherConfig:
    width: float = 1.0
    iterations: int = 8

    def __post_init__(self):
        if not 0.0 < self.width <= 1.0:
            raise InvalidConfigError(f"teacher width {self.width} outside (0, 1]")
        if self.iterations < 1:
            raise InvalidConfigError("iterations must be >= 1")

    def channel_plan(self) -> list[int]:
        base = [32, 64, 128, 256]
        return [max(4, int(round(c * self.width / 4)) * 4) for c in base]


@dataclass(frozen=True)
class StudentConfig:
    trunk_channels: int = 16
    downsample: int = 4

    def __post_init__(self):
        if self.trunk_channels < 2 or self.trunk_channels % 2:
            raise InvalidConfigError("trunk channels must be a positive even count")


@dataclass(frozen=True)
class _Layer:
    c_in: int
    c_out: int
    k: int
    groups: int
    act: str | None   # "relu" | "tanh" | None


def _teacher_layers(cfg: TeacherConfig) -> list[list[_Layer]]:
    c1, c2, c3, c4 = cfg.channel_plan()
    out = 3 * cfg.iterations

    def stage(c_in, c, n=3):
        return [_Layer(c_in, c, 3, 1, "relu")] + [_Layer(c, c, 3, 1, "relu")] * (n - 1)

    return [
        stage(4, c1),
        stage(c1, c2),
        stage(c2, c3),
        stage(c3, c4),
        stage(c4, c4),
        stage(c4 + c3, c3),
        stage(c3 + c2, c2),
        stage(c2 + c1, c1),
        [_Layer(c1, out, 3, 1, "tanh")],
    ]


def _student_layers(cfg: StudentConfig) -> list[list[_Layer]]:
    t = cfg.trunk_channels

    def block(c_in, c_out, act="relu"):
        return [_Layer(c_in, c_in, 3, c_in, None),      # depthwise
                _Layer(c_in, c_out, 1, 1, act)]          # pointwise

    return [
        block(4, t),
        block(t, t),
        block(t, t),
        block(t, t),
        block(2 * t, t),
        block(2 * t, t),
        block(2 * t, 6, act=None),
    ]


def _init_params(layers: list[list[_Layer]], seed: int) -> list[Tensor]:
    """Zero-mean Gaussian weights and zero biases, in checkpoint order.

    Hidden layers use fan-in-scaled std sqrt(2/fan_in) so activations keep a
    usable magnitude through the deep stack; the output layer uses std 0.02
    so both networks start near the identity adjustment with smooth maps.
    (A uniform 0.02 everywhere collapses the forward signal at these depths
    and stalls short training runs.)
    """
    rng = np.random.default_rng(seed)
    flat = [layer for stage in layers for layer in stage]
    params: list[Tensor] = []
    for i, layer in enumerate(flat):
        fan_in = (layer.c_in // layer.groups) * layer.k * layer.k
        std = FINAL_LAYER_STD if i == len(flat) - 1 else float(np.sqrt(2.0 / fan_in))
        w = rng.normal(0.0, std,
                       (layer.c_out, layer.c_in // layer.groups, layer.k, layer.k))
        params.append(Tensor.param(w.astype(np.float32)))
        params.append(Tensor.param(np.zeros(layer.c_out, dtype=np.float32)))
    return params


def _run_stage(x: Tensor, stage: list[_Layer], params: list[Tensor], offset: int) -> Tensor:
    for i, layer in enumerate(stage):
        w = params[offset + 2 * i]
        b = params[offset + 2 * i + 1]
        x = ad.conv2d(x, w, b, groups=layer.groups)
        if layer.act == "relu":
            x = ad.relu(x)
        elif layer.act == "tanh":
            x = ad.tanh(x)
    return x


class _Network:
    role = "network"

    def __init__(self, config, seed: int = 0, params: list[Tensor] | None = None):
        self.config = config
        self.layers = self._build_layers(config)
        fresh = params is None
        self.params = params if params is not None else _init_params(self.layers, seed)
        expected = sum(2 * len(st) for st in self.layers)
        if len(self.params) != expected:
            raise CheckpointError(
                f"{self.role}: expected {expected} parameter tensors, got {len(self.params)}")
        if fresh:
            self._post_init()

    def _build_layers(self, config):
        raise NotImplementedError

    def _post_init(self):
        pass

    @property
    def parameter_count(self) -> int:
        return int(sum(p.data.size for p in self.params))

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def freeze(self):
        for p in self.params:
            p.requires_grad = False

    def _stage_offsets(self) -> list[int]:
        offsets, acc = [], 0
        for stage in self.layers:
            offsets.append(acc)
            acc += 2 * len(stage)
        return offsets


class Teacher(_Network):
    """Estimates per-pixel curve magnitudes from an image and its exposure map."""

    role = "teacher"

    def _build_layers(self, config: TeacherConfig):
        return _teacher_layers(config)

    def forward(self, image: Tensor, emap: Tensor) -> Tensor:
        """(N,3,H,W) + (N,1,H,W) -> (N, 3*iterations, H, W) in [-1, 1]."""
        if image.data.shape[-2:] != emap.data.shape[-2:]:
            raise ShapeMismatchError(
                f"teacher: image {image.data.shape} vs map {emap.data.shape}")
        off = self._stage_offsets()
        x = ad.concat([image, emap], -3)
        s1 = _run_stage(x, self.layers[0], self.params, off[0])
        s2 = _run_stage(s1, self.layers[1], self.params, off[1])
        s3 = _run_stage(s2, self.layers[2], self.params, off[2])
        s4 = _run_stage(s3, self.layers[3], self.params, off[3])
        s5 = _run_stage(s4, self.layers[4], self.params, off[4])
        s6 = _run_stage(ad.concat([s5, s3], -3), self.layers[5], self.params, off[5])
        s7 = _run_stage(ad.concat([s6, s2], -3), self.layers[6], self.params, off[6])
        s8 = _run_stage(ad.concat([s7, s1], -3), self.layers[7], self.params, off[7])
        return _run_stage(s8, self.layers[8], self.params, off[8])

    def estimate_curve_params(self, image: np.ndarray, emap: np.ndarray) -> np.ndarray:
        """Inference on one (3,H,W)/(1,H,W) pair -> magnitude stack (n,3,H,W)."""
        out = self.forward(Tensor.const(image[None]), Tensor.const(emap[None]))
        n = self.config.iterations
        h, w = image.shape[-2:]
        return out.data[0].reshape(n, 3, h, w)


class Student(_Network):
    """Estimates slope/intercept maps of the curve's tangent line."""

    role = "student"

    def _build_layers(self, config: StudentConfig):
        return _student_layers(config)

    def _post_init(self):
        # slope-channel biases start at 1 so the fresh student computes the
        # identity line 1*x + 0; distillation then learns the residual
        self.params[-1].data[0:3] = 1.0

    def forward_lowres(self, image: Tensor, emap: Tensor) -> Tensor:
        """Pre-upsample output: (N, 6, H/4, W/4)."""
        if image.data.shape[-2:] != emap.data.shape[-2:]:
            raise ShapeMismatchError(
                f"student: image {image.data.shape} vs map {emap.data.shape}")
        h, w = image.data.shape[-2:]
        d = self.config.downsample
        if h < 2 * d or w < 2 * d:
            raise InvalidConfigError(f"student: input {h}x{w} below minimum {2 * d}x{2 * d}")
        off = self._stage_offsets()
        x = ad.bilinear_resize(ad.concat([image, emap], -3), 1.0 / d)
        b1 = _run_stage(x, self.layers[0], self.params, off[0])
        b2 = _run_stage(b1, self.layers[1], self.params, off[1])
        b3 = _run_stage(b2, self.layers[2], self.params, off[2])
        b4 = _run_stage(b3, self.layers[3], self.params, off[3])
        b5 = _run_stage(ad.concat([b4, b3], -3), self.layers[4], self.params, off[4])
        b6 = _run_stage(ad.concat([b5, b2], -3), self.layers[5], self.params, off[5])
        return _run_stage(ad.concat([b6, b1], -3), self.layers[6], self.params, off[6])

    def forward(self, image: Tensor, emap: Tensor) -> tuple[Tensor, Tensor]:
        """Full-resolution slope and intercept tensors, each (N, 3, H, W)."""
        low = self.forward_lowres(image, emap)
        full = ad.bilinear_resize(low, float(self.config.downsample))
        return ad.slice_axis(full, -3, 0, 3), ad.slice_axis(full, -3, 3, 6)

    def estimate_tangent(self, image: np.ndarray, emap: np.ndarray):
        """Inference on one (3,H,W)/(1,H,W) pair -> (slope, intercept) arrays."""
        slope, intercept = self.forward(Tensor.const(image[None]), Tensor.const(emap[None]))
        return slope.data[0], intercept.data[0]


# -- checkpoints -------------------------------------------------------------

def save_checkpoint(net: _Network, path: str):
    """magic | u32 header length | JSON header | little-endian float32 payload."""
    payload = np.concatenate([p.data.ravel() for p in net.params]).astype("<f4")
    header = {
        "role": net.role,
        "config": asdict(net.config),
        "param_count": int(payload.size),
    }
    raw = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(np.uint32(len(raw)).astype("<u4").tobytes())
        f.write(raw)
        f.write(payload.tobytes())


def _read_checkpoint(path: str) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as f:
        blob = f.read()
    buf = io.BytesIO(blob)
    magic = buf.read(len(CHECKPOINT_MAGIC))
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    len_bytes = buf.read(4)
    if len(len_bytes) < 4:
        raise CheckpointError(f"{path}: truncated header")
    header_len = int(np.frombuffer(len_bytes, dtype="<u4")[0])
    raw = buf.read(header_len)
    if len(raw) < header_len:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable header: {exc}") from exc
    payload = buf.read()
    count = header.get("param_count")
    if count is None or len(payload) != 4 * count:
        raise CheckpointError(
            f"{path}: payload holds {len(payload) // 4} values, header declares {count}")
    return header, np.frombuffer(payload, dtype="<f4")


def _distribute(net: _Network, flat: np.ndarray) -> _Network:
    offset = 0
    for p in net.params:
        n = p.data.size
        p.data = flat[offset:offset + n].reshape(p.data.shape).astype(np.float32)
        offset += n
    if offset != flat.size:
        raise CheckpointError(f"payload size {flat.size} != parameter total {offset}")
    return net


def load_checkpoint(path: str) -> Teacher | Student:
    """Rebuild the saved network; raises RoleMismatchError via typed loaders."""
    header, flat = _read_checkpoint(path)
    role = header.get("role")
    if role == "teacher":
        net = Teacher(TeacherConfig(**header["config"]))
    elif role == "student":
        net = Student(StudentConfig(**header["config"]))
    else:
        raise CheckpointError(f"{path}: unknown role {role!r}")
    if net.parameter_count != flat.size:
        raise CheckpointError(
            f"{path}: payload {flat.size} values, architecture needs {net.parameter_count}")
    return _distribute(net, flat)


def load_teacher(path: str) -> Teacher:
    net = load_checkpoint(path)
    if not isinstance(net, Teacher):
        raise RoleMismatchError(f"{path}: expected a teacher checkpoint, found {net.role}")
    return net


def load_student(path: str) -> Student:
    net = load_checkpoint(path)
    if not isinstance(net, Student):
        raise RoleMismatchError(f"{path}: expected a student checkpoint, found {net.role}")
    return net
