#!/usr/bin/env python3
"""Condition exposure maps: training randomization and the automatic map.

Shows the three map sources the pipeline uses: random two-valued training
maps, uniform inference presets, and the luma-driven spatially-variant map
(dark regions get larger exposure targets).  Produces demo_exposure_maps.png.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cudi.data import synthetic_image
from cudi.exposure import (VARIANT_OVER, VARIANT_UNDER, sample_training_map,
                           uniform_map, variant_map)

fig, axes = plt.subplots(2, 4, figsize=(13, 6))

for i, seed in enumerate((3, 17, 29)):
    m = sample_training_map(96, 96, seed)[0]
    axes[0, i].imshow(m, cmap="gray", vmin=0, vmax=1)
    axes[0, i].set_title(f"training map (seed {seed})\nvalues {sorted(set(np.round(np.unique(m), 3)))}")
axes[0, 3].imshow(uniform_map(0.65, 96, 96)[0], cmap="gray", vmin=0, vmax=1)
axes[0, 3].set_title("uniform preset 0.65\n(brightening)")

image = synthetic_image(2024, 96)
dark = np.clip(image * 0.4, 0, 1).astype(np.float32)
axes[1, 0].imshow(dark.transpose(1, 2, 0))
axes[1, 0].set_title("underexposed input")
axes[1, 1].imshow(variant_map(dark, VARIANT_UNDER)[0], cmap="gray", vmin=0, vmax=1)
axes[1, 1].set_title("auto map (under preset)\nlight = raise brightness")
bright = np.clip(image * 1.6 + 0.2, 0, 1).astype(np.float32)
axes[1, 2].imshow(bright.transpose(1, 2, 0))
axes[1, 2].set_title("overexposed input")
axes[1, 3].imshow(variant_map(bright, VARIANT_OVER)[0], cmap="gray", vmin=0, vmax=1)
axes[1, 3].set_title("auto map (over preset)")

for ax in axes.ravel():
    ax.axis("off")
fig.tight_layout()
fig.savefig("demo_exposure_maps.png", dpi=120)
print("wrote demo_exposure_maps.png")
