"""Dense double-precision tensors with a reverse-mode tape."""

from __future__ import annotations

import numpy as np

from ..exceptions import NumericError, UsageError


def _checked(data, op):
    if not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite value produced by {op}")
    return data


class Tensor:
    """An array plus the closure that pushes its gradient to its parents."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op", "name")

    def __init__(self, data, requires_grad=False, parents=(), backward=None, op="leaf", name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None
        self.op = op
        self.name = name

    @classmethod
    def from_op(cls, data, parents, backward, op):
        return cls(_checked(data, op), parents=tuple(parents), backward=backward, op=op)

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op})"

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def backward(self):
        """Populate ``.grad`` on every tensor that this scalar depends on."""
        if self.data.size != 1:
            raise UsageError(f"backward() needs a scalar, got shape {self.shape}")
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        # intermediate gradients are recomputed per call; leaves accumulate
        for node in order:
            if node._backward is not None:
                node.grad = None
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                _checked(node.grad, f"backward of {node.op}")
        for node in order:
            if node._backward is not None and node is not self:
                node.grad = None

    # arithmetic sugar; the autograd functions live in functional.py
    def __add__(self, other):
        from .functional import add

        return add(self, other)

    def __mul__(self, other):
        from .functional import mul

        return mul(self, other)

    def __sub__(self, other):
        from .functional import sub

        return sub(self, other)

    def sum(self):
        from .functional import tensor_sum

        return tensor_sum(self)


class Parameter(Tensor):
    """A trainable leaf tensor. ``grad`` stays ``None`` until a backward pass."""

    __slots__ = ()

    def __init__(self, data, name=None):
        super().__init__(np.array(data, dtype=np.float64, copy=True), requires_grad=True, name=name)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)
