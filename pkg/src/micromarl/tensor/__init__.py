from .core import (
    ShapeError,
    Tensor,
    abs,
    add,
    apply_mask,
    as_tensor,
    concat,
    elu,
    gather,
    grad_enabled,
    log,
    matmul,
    mean,
    mse,
    mul,
    no_grad,
    one_hot,
    relu,
    reshape,
    sigmoid,
    softmax,
    split,
    sub,
    sum,
    tanh,
    transpose,
)
from .checkpoint import CheckpointError, load_tensors, save_tensors
from .gradcheck import grad_check
from .nn import (
    ParamSet,
    add_gru,
    add_linear,
    gru_cell,
    linear,
    masked_softmax_probs,
    stack_steps,
    uniform_init,
)
from .optim import RMSprop

__all__ = [
    "CheckpointError", "ParamSet", "RMSprop", "ShapeError", "Tensor",
    "abs", "add", "add_gru", "apply_mask", "log", "add_linear", "as_tensor", "concat", "elu",
    "gather", "grad_check", "grad_enabled", "gru_cell", "linear",
    "load_tensors", "masked_softmax_probs", "matmul", "mean", "mse", "mul",
    "no_grad", "one_hot", "relu", "reshape", "save_tensors", "sigmoid",
    "softmax", "split", "stack_steps", "sub", "sum", "tanh", "transpose", "uniform_init",
]
