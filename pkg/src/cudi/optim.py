"""Adam with bias correction, operating in-place on parameter Tensors."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor
from .errors import ShapeMismatchError


class AdamState:
    """Per-parameter first/second moment accumulators plus the step counter."""

    def __init__(self, params: list[Tensor], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]


def adam_step(params: list[Tensor], state: AdamState):
    """One bias-corrected Adam update from the grads stored on `params`."""
    if len(params) != len(state.m):
        raise ShapeMismatchError("adam_step: parameter count differs from state")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    # scalar bias-corrected step size, computed once per step
    alpha = state.lr * np.sqrt(1.0 - b2 ** t) / (1.0 - b1 ** t)
    for p, m, v in zip(params, state.m, state.v):
        g = p.grad
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ShapeMismatchError(
                f"adam_step: grad shape {g.shape} != param shape {p.data.shape}")
        g = g.astype(np.float32, copy=False)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= np.float32(alpha) * m / (np.sqrt(v) + state.eps)
