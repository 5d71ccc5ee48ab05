"""Forward operators with their reverse-mode gradient rules.

Images are ``(batch, channels, height, width)``; convolution is valid
cross-correlation.
"""

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..exceptions import ShapeError, UsageError
from .tensor import Tensor, as_tensor


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} differ")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(g)

    return Tensor.from_op(a.data + b.data, (a, b), backward, "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"sub: shapes {a.shape} and {b.shape} differ")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(-g)

    return Tensor.from_op(a.data - b.data, (a, b), backward, "sub")


def mul(a, b):
    """Elementwise product; ``b`` may also be a Python scalar."""
    a = as_tensor(a)
    if np.isscalar(b):
        k = float(b)

        def backward_scalar(g):
            a._accumulate(g * k)

        return Tensor.from_op(a.data * k, (a,), backward_scalar, "scale")
    b = as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"mul: shapes {a.shape} and {b.shape} differ")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * b.data)
        if b.requires_grad:
            b._accumulate(g * a.data)

    return Tensor.from_op(a.data * b.data, (a, b), backward, "mul")


def tensor_sum(a):
    def backward(g):
        a._accumulate(np.broadcast_to(g, a.shape))

    return Tensor.from_op(np.sum(a.data), (a,), backward, "sum")


def reshape(a, shape):
    old = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(str(e)) from None

    def backward(g):
        a._accumulate(g.reshape(old))

    return Tensor.from_op(out, (a,), backward, "reshape")


def flatten(a, start_dim=1):
    return reshape(a, a.shape[:start_dim] + (-1,))


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0

    def backward(g):
        a._accumulate(g * mask)

    return Tensor.from_op(np.where(mask, a.data, 0.0), (a,), backward, "relu")


def affine(x, weight, bias=None):
    """``x @ weight.T + bias`` for ``x`` of shape ``(batch, in)``."""
    x = as_tensor(x)
    if x.data.ndim != 2 or weight.data.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"affine: input {x.shape} incompatible with weight {weight.shape}")
    if bias is not None and bias.shape != (weight.shape[0],):
        raise ShapeError(f"affine: bias {bias.shape} does not match weight {weight.shape}")
    out = x.data @ weight.data.T
    if bias is not None:
        out = out + bias.data
    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g @ weight.data)
        if weight.requires_grad:
            weight._accumulate(g.T @ x.data)
        if bias is not None and bias.requires_grad:
            bias._accumulate(g.sum(axis=0))

    return Tensor.from_op(out, parents, backward, "affine")


def _windows(x, k_h, k_w, stride):
    n, c, h, w = x.shape
    out_h = (h - k_h) // stride + 1
    out_w = (w - k_w) // stride + 1
    s = x.strides
    return as_strided(
        x,
        shape=(n, out_h, out_w, c, k_h, k_w),
        strides=(s[0], s[2] * stride, s[3] * stride, s[1], s[2], s[3]),
        writeable=False,
    )


def conv2d(x, weight, bias=None, stride=1):
    """Valid cross-correlation; ``weight`` is ``(out, in, k_h, k_w)``."""
    x = as_tensor(x)
    if stride < 1:
        raise ShapeError("conv2d: stride must be >= 1")
    if x.data.ndim != 4 or weight.data.ndim != 4:
        raise ShapeError(f"conv2d: expected 4-D input and weight, got {x.shape} and {weight.shape}")
    n, c, h, w = x.shape
    o, c_w, k_h, k_w = weight.shape
    if c != c_w:
        raise ShapeError(f"conv2d: input has {c} channels, weight expects {c_w}")
    if h < k_h or w < k_w:
        raise ShapeError(f"conv2d: input {h}x{w} smaller than kernel {k_h}x{k_w}")
    if bias is not None and bias.shape != (o,):
        raise ShapeError(f"conv2d: bias {bias.shape} does not match {o} output channels")
    xd = np.ascontiguousarray(x.data)
    win = _windows(xd, k_h, k_w, stride)
    out_h, out_w = win.shape[1], win.shape[2]
    cols = win.reshape(n * out_h * out_w, c * k_h * k_w)
    wmat = weight.data.reshape(o, -1)
    out = cols @ wmat.T
    if bias is not None:
        out = out + bias.data
    out = out.reshape(n, out_h, out_w, o).transpose(0, 3, 1, 2)
    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        g2 = g.transpose(0, 2, 3, 1).reshape(-1, o)
        if weight.requires_grad:
            weight._accumulate((g2.T @ cols).reshape(weight.shape))
        if bias is not None and bias.requires_grad:
            bias._accumulate(g2.sum(axis=0))
        if x.requires_grad:
            dcols = (g2 @ wmat).reshape(n, out_h, out_w, c, k_h, k_w)
            dx = np.zeros_like(xd)
            for i in range(k_h):
                for j in range(k_w):
                    dx[:, :, i : i + stride * out_h : stride, j : j + stride * out_w : stride] += dcols[
                        :, :, :, :, i, j
                    ].transpose(0, 3, 1, 2)
            x._accumulate(dx)

    return Tensor.from_op(np.ascontiguousarray(out), parents, backward, "conv2d")


def max_pool(x, window):
    """Non-overlapping max pooling over the last two axes (trailing rows/cols dropped)."""
    x = as_tensor(x)
    if x.data.ndim != 4:
        raise ShapeError(f"max_pool: expected 4-D input, got {x.shape}")
    if window < 1:
        raise ShapeError("max_pool: window must be >= 1")
    n, c, h, w = x.shape
    oh, ow = h // window, w // window
    if oh == 0 or ow == 0:
        raise ShapeError(f"max_pool: window {window} larger than input {h}x{w}")
    blocks = x.data[:, :, : oh * window, : ow * window].reshape(n, c, oh, window, ow, window)
    blocks = blocks.transpose(0, 1, 2, 4, 3, 5).reshape(n, c, oh, ow, window * window)
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        gb = np.zeros((n, c, oh, ow, window * window))
        np.put_along_axis(gb, arg[..., None], g[..., None], axis=-1)
        gb = gb.reshape(n, c, oh, ow, window, window).transpose(0, 1, 2, 4, 3, 5)
        dx = np.zeros(x.shape)
        dx[:, :, : oh * window, : ow * window] = gb.reshape(n, c, oh * window, ow * window)
        x._accumulate(dx)

    return Tensor.from_op(out, (x,), backward, "max_pool")


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat: no tensors")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeError(f"concat: {e}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, bounds, axis=axis)):
            if t.requires_grad:
                t._accumulate(piece)

    return Tensor.from_op(out, tensors, backward, "concat")


def mse_loss(prediction, target):
    """Mean of squared elementwise differences (target is a constant)."""
    prediction = as_tensor(prediction)
    target = np.asarray(target.data if isinstance(target, Tensor) else target, dtype=np.float64)
    if prediction.shape != target.shape:
        raise ShapeError(f"mse_loss: shapes {prediction.shape} and {target.shape} differ")
    if prediction.size == 0:
        raise UsageError("mse_loss of an empty tensor")
    diff = prediction.data - target
    count = diff.size

    def backward(g):
        prediction._accumulate(g * 2.0 * diff / count)

    return Tensor.from_op(np.mean(diff * diff), (prediction,), backward, "mse")
