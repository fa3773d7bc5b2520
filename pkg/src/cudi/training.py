"""Two-step optimization: zero-reference teacher training, then distillation.

Both loops are fully deterministic for a fixed (corpus, config, seed) at a
fixed BLAS thread count: batches come from a per-run generator seeded once,
and every update is an ordinary Adam step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .curves import curve_adjust_graph, tangent_adjust_graph
from .errors import IngestionError, NumericError
from .exposure import sample_training_map
from .imageio import list_corpus, read_rgb
from .losses import LossConfig, distill_loss, teacher_total_loss
from .networks import (Student, StudentConfig, Teacher, TeacherConfig,
                       load_teacher, save_checkpoint)
from .optim import AdamState, adam_step


@dataclass(frozen=True)
class TrainConfig:
    corpus_dir: str = "data"
    patch_size: int = 256
    batch_size: int = 8
    teacher_lr: float = 1e-4
    student_lr: float = 5e-4
    steps: int = 2000
    seed: int = 0
    teacher_width: float = 1.0
    iterations: int = 8

    def __post_init__(self):
        if self.patch_size % 16 or self.patch_size % 4:
            raise ValueError(f"patch size {self.patch_size} must divide into "
                             "16px tiles and the 4x downsample")
        if self.batch_size < 1 or self.steps < 0:
            raise ValueError("batch size must be >= 1 and steps >= 0")


def desk_scale_config(corpus_dir: str, **overrides) -> TrainConfig:
    """Workstation-sized defaults: quarter-width teacher on 64px patches."""
    cfg = TrainConfig(corpus_dir=corpus_dir, patch_size=64, teacher_width=0.25)
    return replace(cfg, **overrides) if overrides else cfg


def training_loss_config(patch: int, base: LossConfig = LossConfig()) -> LossConfig:
    """Loss weights used inside the teacher loop.

    The smoothness term sums absolute differences before squaring, so its
    raw value grows with the squared number of difference terms; the
    published weight presumes a per-pixel-normalized norm.  Dividing the
    weight by count^2 makes the weighted term identical to weight 200 on the
    normalized form at any patch size, keeping the exposure/consistency
    gradients in range of the optimizer.
    """
    count = 2 * patch * (patch - 1)
    return replace(base, weight_is=base.weight_is / count ** 2)


class _Corpus:
    """Decoded training images, loaded once and cropped per batch."""

    def __init__(self, directory: str | Path, patch: int):
        self.images = [read_rgb(p) for p in list_corpus(directory)]
        for p, img in zip(list_corpus(directory), self.images):
            if img.shape[1] < patch or img.shape[2] < patch:
                raise IngestionError(
                    f"{p}: image {img.shape[1]}x{img.shape[2]} smaller than patch {patch}")
        self.patch = patch

    def sample(self, rng: np.random.Generator, batch: int) -> tuple[np.ndarray, np.ndarray]:
        """(batch,3,P,P) random crops and (batch,1,P,P) random two-value maps."""
        p = self.patch
        imgs = np.empty((batch, 3, p, p), dtype=np.float32)
        maps = np.empty((batch, 1, p, p), dtype=np.float32)
        for i in range(batch):
            img = self.images[int(rng.integers(len(self.images)))]
            y = int(rng.integers(img.shape[1] - p + 1))
            x = int(rng.integers(img.shape[2] - p + 1))
            imgs[i] = img[:, y:y + p, x:x + p]
            maps[i] = sample_training_map(p, p, int(rng.integers(2 ** 63)))
        return imgs, maps


def sample_batch(corpus_dir: str | Path, cfg: TrainConfig, seed: int):
    """One deterministic batch of (image patches, exposure maps)."""
    corpus = _Corpus(corpus_dir, cfg.patch_size)
    return corpus.sample(np.random.default_rng(seed), cfg.batch_size)


def _write_trace(path: str | Path | None, header: list[str], rows: list[list]):
    if path is None:
        return
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def train_teacher(cfg: TrainConfig, out_path: str | Path | None = None,
                  trace_path: str | Path | None = None,
                  loss_cfg: LossConfig | None = None,
                  log_every: int = 0) -> tuple[Teacher, list[list]]:
    """Step 1: optimize the teacher with the weighted non-reference losses."""
    if loss_cfg is None:
        loss_cfg = training_loss_config(cfg.patch_size)
    corpus = _Corpus(cfg.corpus_dir, cfg.patch_size)
    teacher = Teacher(TeacherConfig(width=cfg.teacher_width, iterations=cfg.iterations),
                      seed=cfg.seed)
    state = AdamState(teacher.params, lr=cfg.teacher_lr)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for step in range(cfg.steps):
        batch_seed = int(rng.integers(2 ** 63))
        imgs, emaps = corpus.sample(np.random.default_rng(batch_seed), cfg.batch_size)
        image_t, emap_t = Tensor.const(imgs), Tensor.const(emaps)
        param_maps = teacher.forward(image_t, emap_t)
        result = curve_adjust_graph(image_t, param_maps, cfg.iterations)
        loss, parts = teacher_total_loss(result, image_t, emap_t, param_maps, loss_cfg)
        if not np.isfinite(loss.data):
            raise NumericError(f"teacher step {step}: non-finite loss "
                               f"(batch seed {batch_seed})")
        teacher.zero_grad()
        ad.backward(loss)
        adam_step(teacher.params, state)
        rows.append([step, float(loss.data), parts["sec"], parts["sc"],
                     parts["cc"], parts["is"]])
        if log_every and step % log_every == 0:
            print(f"step {step}: total={float(loss.data):.4f} sec={parts['sec']:.4f}")
    _write_trace(trace_path, ["step", "total", "sec", "sc", "cc", "is"], rows)
    if out_path is not None:
        save_checkpoint(teacher, str(out_path))
    return teacher, rows


def distill_student(teacher_path: str | Path | Teacher, cfg: TrainConfig,
                    out_path: str | Path | None = None,
                    trace_path: str | Path | None = None,
                    log_every: int = 0) -> tuple[Student, list[list]]:
    """Step 2: fit the student's tangent line to the frozen teacher's output."""
    teacher = teacher_path if isinstance(teacher_path, Teacher) else load_teacher(str(teacher_path))
    teacher.freeze()
    corpus = _Corpus(cfg.corpus_dir, cfg.patch_size)
    student = Student(StudentConfig(), seed=cfg.seed + 1)
    state = AdamState(student.params, lr=cfg.student_lr)
    rng = np.random.default_rng(cfg.seed)
    iters = teacher.config.iterations
    rows = []
    for step in range(cfg.steps):
        batch_seed = int(rng.integers(2 ** 63))
        imgs, emaps = corpus.sample(np.random.default_rng(batch_seed), cfg.batch_size)
        image_t, emap_t = Tensor.const(imgs), Tensor.const(emaps)
        target = curve_adjust_graph(image_t, teacher.forward(image_t, emap_t), iters)
        slope, intercept = student.forward(image_t, emap_t)
        approx = tangent_adjust_graph(image_t, slope, intercept)
        loss = distill_loss(approx, Tensor.const(target.data))
        if not np.isfinite(loss.data):
            raise NumericError(f"distill step {step}: non-finite loss "
                               f"(batch seed {batch_seed})")
        student.zero_grad()
        ad.backward(loss)
        adam_step(student.params, state)
        rows.append([step, float(loss.data)])
        if log_every and step % log_every == 0:
            print(f"step {step}: l1={float(loss.data):.4f}")
    _write_trace(trace_path, ["step", "l1"], rows)
    if out_path is not None:
        save_checkpoint(student, str(out_path))
    return student, rows
