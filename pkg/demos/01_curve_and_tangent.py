#!/usr/bin/env python3
"""The adjustment curve and its tangent-line approximation.

Walks through the quadratic step x + a*x*(1-x), the 8-fold iterated curve,
and how well a single line k*x + b reproduces the iterated result near the
point of tangency.  Produces demo_curve_tangent.png.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cudi.curves import analytic_tangent, apply_high_order, le_step

# one pixel, many input values, a fixed magnitude schedule
x = np.linspace(0, 1, 512).astype(np.float32)
alphas = np.array([0.9, 0.7, 0.5, 0.4, 0.3, 0.2, 0.1, 0.1], dtype=np.float32)
params = np.broadcast_to(alphas[:, None], (8, x.size)).astype(np.float32)

one_step = le_step(x, np.full_like(x, alphas[0]))
curve = apply_high_order(x, params)

# tangent line anchored at a single operating point
x0 = np.float32(0.3)
maps = analytic_tangent(np.array([x0]), params[:, :1])
k, b = float(maps.slope[0]), float(maps.intercept[0])
print(f"tangent at x0={x0}: slope {k:.4f}, intercept {b:.4f}")
print(f"curve(x0) = {apply_high_order(np.array([x0]), params[:, :1])[0]:.4f}, "
      f"line(x0) = {k * x0 + b:.4f}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
ax1.plot(x, x, "k:", label="identity")
ax1.plot(x, one_step, label="one quadratic step")
ax1.plot(x, curve, label="8 iterated steps")
ax1.plot(x, k * x + b, "--", label=f"tangent line at x0={x0}")
ax1.scatter([x0], [k * x0 + b], color="red", zorder=5)
ax1.set(xlabel="input value", ylabel="adjusted value", title="iterated curve vs tangent")
ax1.legend()

window = np.abs(x - x0) <= 0.05
gap = np.abs((k * x + b) - curve)
ax2.plot(x[window] - x0, gap[window])
ax2.set(xlabel="offset from tangency point", ylabel="|line - curve|",
        title="approximation error is second order")
fig.tight_layout()
fig.savefig("demo_curve_tangent.png", dpi=120)
print("wrote demo_curve_tangent.png")
print(f"max gap within +-0.05 of x0: {gap[window].max():.2e}")
