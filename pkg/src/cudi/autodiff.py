"""Reverse-mode automatic differentiation on dense float32 numpy buffers.

The graph is an explicit eager tape: every operation returns a new Tensor
holding its forward value and a closure that propagates adjoints to its
parents.  Arrays are float32 throughout; reductions (mean/sum) accumulate
in float64 and keep float64 for scalar outputs so that finite-difference
checks against the analytic gradients stay meaningful.

Supported shapes are what the networks and losses need: elementwise ops on
same-shape operands (plus python scalars), NCHW convolutions with stride 1
and zero padding, non-overlapping average pooling, bilinear resize, axis
slicing and channel concatenation.  There is no general broadcasting.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidConfigError, NumericError, ShapeMismatchError

Array = np.ndarray


def _as_f32(data) -> Array:
    arr = np.asarray(data)
    if arr.dtype != np.float32 and arr.dtype != np.float64:
        arr = arr.astype(np.float32)
    return arr


class Tensor:
    """One node of the compute graph: a value, its adjoint, and its parents."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, parents: tuple = (),
                 backward: Callable | None = None, op: str = "leaf"):
        self.data = _as_f32(data)
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward
        self.op = op

    # -- construction -----------------------------------------------------

    @staticmethod
    def param(data) -> "Tensor":
        return Tensor(np.asarray(data, dtype=np.float32), requires_grad=True)

    @staticmethod
    def const(data) -> "Tensor":
        return Tensor(data, requires_grad=False)

    # -- bookkeeping ------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def accumulate(self, g: Array):
        if self.grad is None:
            self.grad = g.astype(self.data.dtype, copy=True)
        else:
            self.grad += g.astype(self.data.dtype, copy=False)

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.data.shape})"

    # -- operator sugar ---------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __neg__(self):
        return mul(self, -1.0)


def _wrap(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor.const(np.asarray(x, dtype=np.float32))


def _check_same_shape(a: Tensor, b: Tensor, op: str):
    # scalars (0-d) pair with anything; everything else must match exactly
    if a.data.shape == () or b.data.shape == ():
        return
    if a.data.shape != b.data.shape:
        raise ShapeMismatchError(f"{op}: shapes {a.data.shape} vs {b.data.shape}")


def _node(data, parents, backward, op) -> Tensor:
    req = any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=req,
                  parents=tuple(parents) if req else (),
                  backward=backward if req else None, op=op)


def _reduce_to(g: Array, shape) -> Array:
    """Collapse a gradient onto a 0-d operand (the only broadcast we allow)."""
    if shape == () and g.shape != ():
        return np.array(g.sum(dtype=np.float64))
    return g


# -- elementwise ----------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_same_shape(a, b, "add")
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate(_reduce_to(g, a.data.shape))
        if b.requires_grad:
            b.accumulate(_reduce_to(g, b.data.shape))

    return _node(out_data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_same_shape(a, b, "sub")
    out_data = a.data - b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate(_reduce_to(g, a.data.shape))
        if b.requires_grad:
            b.accumulate(_reduce_to(-g, b.data.shape))

    return _node(out_data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_same_shape(a, b, "mul")
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate(_reduce_to(g * b.data, a.data.shape))
        if b.requires_grad:
            b.accumulate(_reduce_to(g * a.data, b.data.shape))

    return _node(out_data, (a, b), backward, "mul")


def square(a: Tensor) -> Tensor:
    return mul(a, a)


def absval(a: Tensor) -> Tensor:
    a = _wrap(a)
    out_data = np.abs(a.data)

    def backward(g):
        a.accumulate(g * np.sign(a.data))

    return _node(out_data, (a,), backward, "abs")


def relu(a: Tensor) -> Tensor:
    a = _wrap(a)
    out_data = np.maximum(a.data, 0)

    def backward(g):
        a.accumulate(g * (a.data > 0))

    return _node(out_data, (a,), backward, "relu")


def tanh(a: Tensor) -> Tensor:
    a = _wrap(a)
    out_data = np.tanh(a.data)

    def backward(g):
        a.accumulate(g * (1.0 - out_data * out_data))

    return _node(out_data, (a,), backward, "tanh")


# -- reductions -----------------------------------------------------------

def _reduction(a: Tensor, axis, keepdims: bool, kind: str) -> Tensor:
    a = _wrap(a)
    acc = a.data.sum(axis=axis, keepdims=keepdims, dtype=np.float64)
    if axis is None:
        count = a.data.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([a.data.shape[ax] for ax in axes]))
    if kind == "mean":
        acc = acc / count
    # reduction outputs stay float64: losses are built from these statistics
    # and finite-difference checks need them at full precision
    out_data = acc

    def backward(g):
        scale = 1.0 / count if kind == "mean" else 1.0
        if axis is None:
            grad = np.full(a.data.shape, float(g) * scale, dtype=np.float32)
        else:
            gq = g if keepdims else np.expand_dims(g, axis)
            grad = np.broadcast_to(gq.astype(np.float32) * np.float32(scale),
                                   a.data.shape)
        a.accumulate(grad)

    return _node(out_data, (a,), backward, kind)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    return _reduction(a, axis, keepdims, "mean")


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    return _reduction(a, axis, keepdims, "sum")


# -- structure ------------------------------------------------------------

def slice_axis(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    a = _wrap(a)
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    out_data = np.ascontiguousarray(a.data[index])

    def backward(g):
        grad = np.zeros_like(a.data)
        grad[index] = g
        a.accumulate(grad)

    return _node(out_data, (a,), backward, "slice")


def concat(parts: Sequence[Tensor], axis: int) -> Tensor:
    parts = [_wrap(p) for p in parts]
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                p.accumulate(g[tuple(index)])

    return _node(out_data, tuple(parts), backward, "concat")


# -- convolution ----------------------------------------------------------

def _im2col(xp: Array, k: int, hh: int, ww: int) -> Array:
    """(N,C,H+2p,W+2p) padded input -> (N, C*k*k, H*W) patch matrix.

    Pure slice copies, no transposes: channel-major layout is kept so the
    convolution becomes one batched GEMM per image.
    """
    n, c = xp.shape[0], xp.shape[1]
    col = np.empty((n, c, k, k, hh, ww), dtype=xp.dtype)
    for di in range(k):
        for dj in range(k):
            col[:, :, di, dj] = xp[:, :, di:di + hh, dj:dj + ww]
    return col.reshape(n, c * k * k, hh * ww)


def _col2im(col: Array, n: int, c: int, hh: int, ww: int, k: int) -> Array:
    """Scatter-add the patch matrix back onto a padded (N,C,H+2p,W+2p) array."""
    pad = k // 2
    xp = np.zeros((n, c, hh + 2 * pad, ww + 2 * pad), dtype=np.float32)
    col6 = col.reshape(n, c, k, k, hh, ww)
    for di in range(k):
        for dj in range(k):
            xp[:, :, di:di + hh, dj:dj + ww] += col6[:, :, di, dj]
    return xp


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, groups: int = 1) -> Tensor:
    """Stride-1, zero-padded 2-D convolution on NCHW data.

    w has shape (c_out, c_in // groups, k, k) with k odd; spatial size is
    preserved.  groups == c_in == c_out gives depthwise behaviour.
    """
    x, w = _wrap(x), _wrap(w)
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ShapeMismatchError("conv2d expects NCHW input and OIKK kernel")
    n, c_in, hh, ww = x.data.shape
    c_out, c_in_g, kh, kw = w.data.shape
    if kh != kw or kh % 2 == 0:
        raise InvalidConfigError(f"conv2d: kernel must be odd square, got {kh}x{kw}")
    if groups < 1 or c_in % groups or c_out % groups or c_in_g != c_in // groups:
        raise InvalidConfigError(
            f"conv2d: groups={groups} incompatible with c_in={c_in}, c_out={c_out}, "
            f"kernel c_in={c_in_g}")
    if b is not None and b.data.shape != (c_out,):
        raise ShapeMismatchError(f"conv2d: bias shape {b.data.shape} != ({c_out},)")
    k = kh
    pad = k // 2

    depthwise = groups == c_in == c_out
    track = x.requires_grad or w.requires_grad or (b is not None and b.requires_grad)
    cols: list = []   # im2col results cached for the backward pass
    if k == 1 and groups == 1:
        # pointwise: one GEMM over channels
        w2 = w.data.reshape(c_out, c_in)
        y = np.matmul(w2, x.data.reshape(n, c_in, hh * ww)).reshape(n, c_out, hh, ww)
    elif depthwise:
        xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        y = np.zeros((n, c_out, hh, ww), dtype=np.result_type(x.data, w.data))
        for di in range(k):
            for dj in range(k):
                y += w.data[:, 0, di, dj][None, :, None, None] * xp[:, :, di:di + hh, dj:dj + ww]
        if track:
            cols.append(xp)
    else:
        xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        if groups == 1:
            col = _im2col(xp, k, hh, ww)
            y = np.matmul(w.data.reshape(c_out, -1), col).reshape(n, c_out, hh, ww)
            if track:
                cols.append(col)
        else:
            cig, cog = c_in // groups, c_out // groups
            y = np.empty((n, c_out, hh, ww), dtype=np.result_type(x.data, w.data))
            for g_ in range(groups):
                colg = _im2col(np.ascontiguousarray(xp[:, g_ * cig:(g_ + 1) * cig]),
                               k, hh, ww)
                wg = w.data[g_ * cog:(g_ + 1) * cog].reshape(cog, -1)
                y[:, g_ * cog:(g_ + 1) * cog] = np.matmul(wg, colg).reshape(n, cog, hh, ww)
                if track:
                    cols.append(colg)
    if b is not None:
        y += b.data[None, :, None, None]

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        g = np.ascontiguousarray(g, dtype=np.float32)
        if b is not None and b.requires_grad:
            b.accumulate(g.sum(axis=(0, 2, 3)))
        if k == 1 and groups == 1:
            gm = g.reshape(n, c_out, hh * ww)
            if w.requires_grad:
                dw = np.matmul(gm, x.data.reshape(n, c_in, hh * ww).transpose(0, 2, 1))
                w.accumulate(dw.sum(axis=0).reshape(c_out, c_in, 1, 1))
            if x.requires_grad:
                dx = np.matmul(w.data.reshape(c_out, c_in).T, gm)
                x.accumulate(dx.reshape(n, c_in, hh, ww))
            return
        if depthwise:
            xp = cols[0]
            if w.requires_grad:
                dw = np.empty_like(w.data)
                for di in range(k):
                    for dj in range(k):
                        dw[:, 0, di, dj] = (g * xp[:, :, di:di + hh, dj:dj + ww]).sum(axis=(0, 2, 3))
                w.accumulate(dw)
            if x.requires_grad:
                dxp = np.zeros_like(xp)
                for di in range(k):
                    for dj in range(k):
                        dxp[:, :, di:di + hh, dj:dj + ww] += \
                            w.data[:, 0, di, dj][None, :, None, None] * g
                x.accumulate(dxp[:, :, pad:pad + hh, pad:pad + ww])
            cols.clear()
            return
        if groups == 1:
            col = cols[0]
            gm = g.reshape(n, c_out, hh * ww)
            if w.requires_grad:
                # (N,co,HW) x (N,HW,ckk) summed over the batch
                dw = np.matmul(gm, col.transpose(0, 2, 1)).sum(axis=0)
                w.accumulate(dw.reshape(w.data.shape))
            if x.requires_grad:
                dcol = np.matmul(w.data.reshape(c_out, -1).T, gm)
                dxp = _col2im(dcol, n, c_in, hh, ww, k)
                x.accumulate(dxp[:, :, pad:pad + hh, pad:pad + ww])
        else:
            cig, cog = c_in // groups, c_out // groups
            dxp = np.zeros((n, c_in, hh + 2 * pad, ww + 2 * pad), dtype=np.float32) \
                if x.requires_grad else None
            dw_full = np.zeros_like(w.data) if w.requires_grad else None
            for g_ in range(groups):
                colg = cols[g_]
                gmg = np.ascontiguousarray(g[:, g_ * cog:(g_ + 1) * cog]).reshape(n, cog, hh * ww)
                if w.requires_grad:
                    dw_full[g_ * cog:(g_ + 1) * cog] = np.matmul(
                        gmg, colg.transpose(0, 2, 1)).sum(axis=0).reshape(cog, cig, k, k)
                if x.requires_grad:
                    wg = w.data[g_ * cog:(g_ + 1) * cog].reshape(cog, -1)
                    dxp[:, g_ * cig:(g_ + 1) * cig] += _col2im(
                        np.matmul(wg.T, gmg), n, cig, hh, ww, k)
            if w.requires_grad:
                w.accumulate(dw_full)
            if x.requires_grad:
                x.accumulate(dxp[:, :, pad:pad + hh, pad:pad + ww])
        cols.clear()

    return _node(y, parents, backward, "conv2d")


# -- resampling -----------------------------------------------------------

def _resize_matrix(n_in: int, n_out: int) -> Array:
    """Row-stochastic (n_out, n_in) bilinear weights with half-pixel centers."""
    if n_out < 1:
        raise InvalidConfigError("resize: output dimension < 1")
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    i0 = np.floor(src).astype(np.int64)
    i0 = np.minimum(i0, n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    mat = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.arange(n_out)
    np.add.at(mat, (rows, i0), 1.0 - frac)
    np.add.at(mat, (rows, i1), frac)
    return mat.astype(np.float32)


def bilinear_resize(x: Tensor, scale) -> Tensor:
    """Bilinear rescale of the two trailing axes (half-pixel, edges clamped)."""
    x = _wrap(x)
    if x.data.ndim < 2:
        raise ShapeMismatchError("bilinear_resize expects at least 2-D input")
    h_in, w_in = x.data.shape[-2:]
    h_out = int(round(h_in * scale))
    w_out = int(round(w_in * scale))
    mh = _resize_matrix(h_in, h_out)          # (h_out, h_in)
    mw = _resize_matrix(w_in, w_out)          # (w_out, w_in)
    y = np.matmul(np.matmul(mh, x.data), mw.T)

    def backward(g):
        x.accumulate(np.matmul(np.matmul(mh.T, g.astype(np.float32)), mw))

    return _node(y, (x,), backward, "resize")


def avg_pool(x: Tensor, k: int) -> Tensor:
    """Non-overlapping k x k mean over the two trailing axes; partial edge
    windows are dropped."""
    x = _wrap(x)
    h, w = x.data.shape[-2:]
    ho, wo = h // k, w // k
    if ho < 1 or wo < 1:
        raise InvalidConfigError(f"avg_pool: input {h}x{w} smaller than window {k}")
    lead = x.data.shape[:-2]
    trimmed = x.data[..., :ho * k, :wo * k]
    blocks = trimmed.reshape(*lead, ho, k, wo, k)
    y = blocks.mean(axis=(-3, -1), dtype=np.float64)

    def backward(g):
        grad = np.zeros_like(x.data)
        expand = np.repeat(np.repeat(g.astype(np.float32), k, axis=-2), k, axis=-1)
        grad[..., :ho * k, :wo * k] = expand / (k * k)
        x.accumulate(grad)

    return _node(y, (x,), backward, "avg_pool")


# -- graph traversal ------------------------------------------------------

def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor):
    """Populate .grad on every reachable node that requires grad.

    The loss must be scalar.  Adjoints accumulate, so callers zero parameter
    grads (or rely on fresh graphs) between steps.
    """
    if loss.data.shape != ():
        raise ShapeMismatchError(f"backward: loss must be scalar, got {loss.data.shape}")
    if not np.isfinite(loss.data):
        raise NumericError("backward: non-finite loss")
    if not loss.requires_grad:
        return
    order = _toposort(loss)
    loss.grad = np.ones((), dtype=loss.data.dtype)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# -- verification ---------------------------------------------------------

def gradient_check(loss_fn: Callable[[], Tensor], params, probe_count: int = 24,
                   step: float = 1e-3, rng: np.random.Generator | None = None) -> float:
    """Max relative error between analytic adjoints and central differences.

    loss_fn rebuilds the scalar loss from the current contents of `params`
    (a Tensor or list of Tensors).  Analytic adjoints come from the normal
    float32 forward/backward; the finite-difference oracle re-evaluates the
    loss with the parameters held in float64 so the probe is not drowned by
    float32 re-rounding noise on deep graphs (64-bit accumulation for the
    finite difference).
    """
    if isinstance(params, Tensor):
        params = [params]
    params = list(params)
    if rng is None:
        rng = np.random.default_rng(0)

    loss = loss_fn()
    if loss.data.shape != ():
        raise ShapeMismatchError("gradient_check: loss_fn must return a scalar")
    if not np.isfinite(loss.data):
        raise NumericError("gradient_check: non-finite loss")
    for p in params:
        p.zero_grad()
    backward(loss)
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    sizes = [p.data.size for p in params]
    total = sum(sizes)
    originals = [p.data for p in params]
    for p in params:
        p.data = p.data.astype(np.float64)
    try:
        for _ in range(probe_count):
            flat = int(rng.integers(total))
            pi = 0
            while flat >= sizes[pi]:
                flat -= sizes[pi]
                pi += 1
            p = params[pi]
            orig = p.data.flat[flat]
            p.data.flat[flat] = orig + step
            lp = float(loss_fn().data)
            p.data.flat[flat] = orig - step
            lm = float(loss_fn().data)
            p.data.flat[flat] = orig
            if not (np.isfinite(lp) and np.isfinite(lm)):
                raise NumericError("gradient_check: non-finite probe loss")
            fd = (lp - lm) / (2.0 * step)
            an = float(analytic[pi].flat[flat])
            err = abs(an - fd) / max(abs(an), abs(fd), 1e-6)
            worst = max(worst, err)
    finally:
        for p, data in zip(params, originals):
            p.data = data
    return worst
