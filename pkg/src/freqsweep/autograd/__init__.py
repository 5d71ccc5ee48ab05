from .functional import (
    add,
    affine,
    concat,
    conv2d,
    flatten,
    max_pool,
    mse_loss,
    mul,
    relu,
    reshape,
    sub,
    tensor_sum,
)
from .optim import SGD, Adam, Optimizer, make_optimizer
from .serialize import load_checkpoint, save_checkpoint
from .tensor import Parameter, Tensor, as_tensor

__all__ = [
    "Tensor",
    "Parameter",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "tensor_sum",
    "reshape",
    "flatten",
    "relu",
    "affine",
    "conv2d",
    "max_pool",
    "concat",
    "mse_loss",
    "Optimizer",
    "SGD",
    "Adam",
    "make_optimizer",
    "save_checkpoint",
    "load_checkpoint",
]
