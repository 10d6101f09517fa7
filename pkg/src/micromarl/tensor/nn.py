"""Parameter containers, layer initialisation, and the GRU cell."""

from __future__ import annotations

import numpy as np

from .core import Tensor, add, concat, matmul, mul, sigmoid, split, sub, tanh


class ParamSet:
    """Ordered, uniquely named collection of trainable tensors."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        t = Tensor(np.asarray(value, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def tensors(self) -> list[Tensor]:
        return list(self._params.values())

    def zero_grads(self) -> None:
        for t in self._params.values():
            t.grad = None

    def copy_from(self, other: "ParamSet") -> None:
        """Value-only copy (target-network update); no tape aliasing."""
        if other.names() != self.names():
            raise ValueError("parameter sets differ in names")
        for name, t in self._params.items():
            np.copyto(t.data, other[name].data)

    def clone(self) -> "ParamSet":
        out = ParamSet()
        for name, t in self._params.items():
            out.add(name, t.data.copy())
        return out

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, t in self._params.items():
            np.copyto(t.data, arrays[name])


def uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    """uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) — used for every layer."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def add_linear(params: ParamSet, rng: np.random.Generator, name: str,
               fan_in: int, fan_out: int) -> None:
    params.add(f"{name}.w", uniform_init(rng, fan_in, (fan_in, fan_out)))
    params.add(f"{name}.b", uniform_init(rng, fan_in, (fan_out,)))


def linear(x: Tensor, params: ParamSet, name: str) -> Tensor:
    return add(matmul(x, params[f"{name}.w"]), params[f"{name}.b"])


def add_gru(params: ParamSet, rng: np.random.Generator, name: str,
            input_size: int, hidden_size: int) -> None:
    """Parameters for one GRU cell: fused input projection, split recurrent."""
    params.add(f"{name}.wi", uniform_init(rng, input_size, (input_size, 3 * hidden_size)))
    params.add(f"{name}.bi", uniform_init(rng, input_size, (3 * hidden_size,)))
    params.add(f"{name}.uzr", uniform_init(rng, hidden_size, (hidden_size, 2 * hidden_size)))
    params.add(f"{name}.uh", uniform_init(rng, hidden_size, (hidden_size, hidden_size)))


def gru_cell(x: Tensor, h: Tensor, params: ParamSet, name: str) -> Tensor:
    """One GRU step.

    z = sigmoid(x Wz + h Uz + bz)
    r = sigmoid(x Wr + h Ur + br)
    c = tanh(x Wc + (r * h) Uc + bc)
    h' = (1 - z) * h + z * c

    The three input projections share one fused matmul; reset and update
    recurrent projections share another.
    """
    if x.shape[-1] != params[f"{name}.wi"].shape[0]:
        raise ValueError(
            f"gru_cell: input width {x.shape[-1]} != expected {params[f'{name}.wi'].shape[0]}")
    if h.shape[-1] != params[f"{name}.uh"].shape[0]:
        raise ValueError(
            f"gru_cell: hidden width {h.shape[-1]} != expected {params[f'{name}.uh'].shape[0]}")
    xz, xr, xc = split(add(matmul(x, params[f"{name}.wi"]), params[f"{name}.bi"]), 3, axis=-1)
    hz, hr = split(matmul(h, params[f"{name}.uzr"]), 2, axis=-1)
    z = sigmoid(add(xz, hz))
    r = sigmoid(add(xr, hr))
    c = tanh(add(xc, matmul(mul(r, h), params[f"{name}.uh"])))
    return add(mul(sub(1.0, z), h), mul(z, c))


def masked_softmax_probs(logits: Tensor, avail: np.ndarray, eps: float) -> Tensor:
    """Softmax over available actions with an epsilon floor.

    pi = (1 - eps) * softmax(masked logits) + eps / n_avail on available
    actions, exactly 0 on unavailable ones.
    """
    from .core import softmax

    neg = np.where(avail, 0.0, -1e10)
    probs = softmax(add(logits, neg), axis=-1)
    n_avail = avail.sum(axis=-1, keepdims=True)
    floor = np.where(avail, eps / n_avail, 0.0)
    return add(mul(probs, (1.0 - eps) * avail.astype(np.float64)), floor)


def stack_steps(steps: list[Tensor], axis: int = 1) -> Tensor:
    """Stack per-step 2-d tensors (rows, feat) into (rows, T, feat)."""
    expanded = [reshape_insert(t, axis) for t in steps]
    return concat(expanded, axis=axis)


def reshape_insert(t: Tensor, axis: int) -> Tensor:
    from .core import reshape

    shape = list(t.shape)
    shape.insert(axis, 1)
    return reshape(t, tuple(shape))
