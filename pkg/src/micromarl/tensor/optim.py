"""RMSprop, the only optimizer used by the learners."""

from __future__ import annotations

import numpy as np

from .nn import ParamSet


class RMSprop:
    """v <- alpha v + (1 - alpha) g^2;  p <- p - lr g / (sqrt(v) + eps).

    No momentum, no weight decay. ``grad_clip`` (global L2 norm) is off by
    default.
    """

    def __init__(self, params: ParamSet, lr: float = 5e-4, alpha: float = 0.99,
                 eps: float = 1e-5, grad_clip: float | None = None):
        self.params = params
        self.lr = lr
        self.alpha = alpha
        self.eps = eps
        self.grad_clip = grad_clip
        self.v = {name: np.zeros_like(t.data) for name, t in params.items()}

    def zero_grad(self) -> None:
        self.params.zero_grads()

    def step(self) -> None:
        grads = {name: t.grad for name, t in self.params.items() if t.grad is not None}
        if self.grad_clip is not None and grads:
            total = np.sqrt(np.sum([np.sum(g * g) for g in grads.values()]))
            if total > self.grad_clip:
                scale = self.grad_clip / (total + 1e-12)
                grads = {name: g * scale for name, g in grads.items()}
        for name, g in grads.items():
            v = self.v[name]
            v *= self.alpha
            v += (1.0 - self.alpha) * g * g
            self.params[name].data -= self.lr * g / (np.sqrt(v) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: v.copy() for name, v in self.v.items()}

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name in self.v:
            np.copyto(self.v[name], arrays[name])
