#!/usr/bin/env python3
"""Distilling the tangent-line student from a trained teacher.

Trains a small teacher, distills the student against the teacher's curve
output, then compares the two branches on a held-out image: the pixel
scatter should hug the diagonal, and the slope/intercept maps should look
low-frequency.  Produces demo_distillation.png.
"""

import argparse
import tempfile
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cudi.bench import mse, pcc
from cudi.curves import apply_high_order
from cudi.data import synthetic_corpus, synthetic_image
from cudi.exposure import uniform_map
from cudi.training import desk_scale_config, distill_student, train_teacher

parser = argparse.ArgumentParser()
parser.add_argument("--teacher-steps", type=int, default=400)
parser.add_argument("--student-steps", type=int, default=600)
args = parser.parse_args()

corpus = Path(tempfile.mkdtemp(prefix="cudi_demo_"))
synthetic_corpus(corpus, count=50, size=128, seed=7)

cfg = desk_scale_config(str(corpus), steps=args.teacher_steps, seed=11)
teacher, _ = train_teacher(cfg, log_every=100)
student, trace = distill_student(
    teacher, desk_scale_config(str(corpus), steps=args.student_steps, seed=11),
    log_every=100)

held = np.clip(synthetic_image(31_338, 128) * 0.5, 0, 1).astype(np.float32)
emap = uniform_map(0.65, 128, 128)
teacher_out = apply_high_order(held, teacher.estimate_curve_params(held, emap))
slope, intercept = student.estimate_tangent(held, emap)
student_out = slope * held + intercept

print(f"teacher vs student: mse {mse(student_out, teacher_out):.5f}, "
      f"pcc {pcc(student_out, teacher_out):.4f}")

fig, axes = plt.subplots(1, 5, figsize=(16, 3.4))
axes[0].imshow(np.clip(teacher_out, 0, 1).transpose(1, 2, 0))
axes[0].set_title("teacher branch (8-step curve)")
axes[1].imshow(np.clip(student_out, 0, 1).transpose(1, 2, 0))
axes[1].set_title("student branch (tangent line)")
axes[2].scatter(teacher_out.ravel()[::37], student_out.ravel()[::37], s=1, alpha=0.3)
axes[2].plot([0, 1], [0, 1], "r--", linewidth=1)
axes[2].set_title("pixel intensity scatter")
axes[2].set(xlabel="teacher", ylabel="student")
axes[3].imshow(slope.mean(axis=0), cmap="magma")
axes[3].set_title("slope map (channel mean)")
axes[4].imshow(intercept.mean(axis=0), cmap="magma")
axes[4].set_title("intercept map (channel mean)")
for i in (0, 1, 3, 4):
    axes[i].axis("off")
fig.tight_layout()
fig.savefig("demo_distillation.png", dpi=120)
print("wrote demo_distillation.png")
