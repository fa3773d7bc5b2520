#!/usr/bin/env python3
"""Desk-scale teacher training, end to end.

Builds a tiny synthetic corpus, trains the quarter-width teacher for a few
hundred steps, and adjusts a held-out underexposed image at several uniform
exposure targets.  Expect ~10-20 minutes on a laptop CPU; raise --steps for
better exposure control (the acceptance suite uses 2000).
"""

import argparse
import tempfile
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cudi.bench import region_mean_error
from cudi.curves import apply_high_order
from cudi.data import synthetic_corpus, synthetic_image
from cudi.exposure import uniform_map
from cudi.training import desk_scale_config, train_teacher

parser = argparse.ArgumentParser()
parser.add_argument("--steps", type=int, default=400)
parser.add_argument("--corpus", default=None, help="image directory (default: synthetic)")
args = parser.parse_args()

if args.corpus is None:
    corpus = Path(tempfile.mkdtemp(prefix="cudi_demo_"))
    synthetic_corpus(corpus, count=50, size=128, seed=7)
    print(f"synthetic corpus at {corpus}")
else:
    corpus = Path(args.corpus)

cfg = desk_scale_config(str(corpus), steps=args.steps, seed=11)
teacher, rows = train_teacher(cfg, trace_path="demo_teacher_trace.csv", log_every=50)

held = np.clip(synthetic_image(31_337, 128) * 0.45, 0, 1).astype(np.float32)
fig, axes = plt.subplots(1, 5, figsize=(15, 3.4))
axes[0].imshow(held.transpose(1, 2, 0))
axes[0].set_title(f"held-out input\nmean {held.mean():.2f}")
for ax, target in zip(axes[1:], (0.3, 0.5, 0.65, 0.8)):
    emap = uniform_map(target, 128, 128)
    out = apply_high_order(held, teacher.estimate_curve_params(held, emap))
    err = region_mean_error(out, emap)
    ax.imshow(np.clip(out, 0, 1).transpose(1, 2, 0))
    ax.set_title(f"E={target}\nmean {out.mean():.2f}, err {err:.3f}")
for ax in axes:
    ax.axis("off")
fig.tight_layout()
fig.savefig("demo_teacher_control.png", dpi=120)
print("wrote demo_teacher_control.png and demo_teacher_trace.csv")
