"""Central finite-difference validation of backward rules."""

from __future__ import annotations

import numpy as np

from .core import Tensor
from .nn import ParamSet


def grad_check(loss_fn, params, step: float = 1e-5, samples_per_param: int | None = None,
               rng: np.random.Generator | None = None) -> tuple[float, str]:
    """Compare analytic gradients of ``loss_fn()`` against central differences.

    ``loss_fn`` is a closure over ``params`` (a ParamSet or list of Tensors)
    returning a scalar Tensor. Large parameters can be spot-checked by
    sampling ``samples_per_param`` coordinates. Returns (max relative error,
    worst parameter name).
    """
    if isinstance(params, ParamSet):
        named = list(params.items())
    else:
        named = [(f"t{i}", t) for i, t in enumerate(params)]
    for _, t in named:
        t.grad = None
    out = loss_fn()
    if out.size != 1:
        raise ValueError(f"grad_check: loss must be scalar, got shape {out.shape}")
    out.backward()
    analytic = {name: (np.zeros_like(t.data) if t.grad is None else t.grad.copy())
                for name, t in named}

    worst = 0.0
    worst_name = ""
    for name, t in named:
        flat = t.data.reshape(-1)
        n = flat.size
        if samples_per_param is not None and n > samples_per_param:
            if rng is None:
                rng = np.random.default_rng(0)
            coords = rng.choice(n, size=samples_per_param, replace=False)
        else:
            coords = range(n)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + step
            f_plus = float(loss_fn().data)
            flat[i] = orig - step
            f_minus = float(loss_fn().data)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            a = analytic[name].reshape(-1)[i]
            err = np.abs(a - numeric) / max(np.abs(a), np.abs(numeric), 1.0)
            if err > worst:
                worst = err
                worst_name = name
    return worst, worst_name
