"""Shared agent network (recurrent utility net), schedules, action selection."""

from __future__ import annotations

import numpy as np

from .. import tensor as T

HIDDEN_DIM = 64


def linear_schedule(start: float, end: float, duration: int, t: int) -> float:
    if duration <= 0 or t >= duration:
        return end
    return start + (end - start) * (t / duration)


def add_agent_net(params: T.ParamSet, rng: np.random.Generator, prefix: str,
                  obs_size: int, n_actions: int, ff: bool = False,
                  hidden: int = HIDDEN_DIM) -> None:
    """Utility network: fc_in -> GRU -> fc_out, shared across agents.

    ``ff`` swaps the GRU for a same-width dense layer (recurrence ablation).
    """
    T.add_linear(params, rng, f"{prefix}fc_in", obs_size, hidden)
    if ff:
        T.add_linear(params, rng, f"{prefix}ff", hidden, hidden)
    else:
        T.add_gru(params, rng, f"{prefix}gru", hidden, hidden)
    T.add_linear(params, rng, f"{prefix}fc_out", hidden, n_actions)


def agent_net_is_ff(params: T.ParamSet, prefix: str) -> bool:
    return f"{prefix}ff.w" in params


def agent_step(params: T.ParamSet, prefix: str, obs_rows: np.ndarray,
               h: T.Tensor) -> tuple[T.Tensor, T.Tensor]:
    """One forward step for a batch of agent rows; returns (q, new hidden)."""
    x = T.relu(T.linear(T.Tensor(obs_rows), params, f"{prefix}fc_in"))
    if agent_net_is_ff(params, prefix):
        h_new = T.relu(T.linear(x, params, f"{prefix}ff"))
    else:
        h_new = T.gru_cell(x, h, params, f"{prefix}gru")
    q = T.linear(h_new, params, f"{prefix}fc_out")
    return q, h_new


def init_hidden(n_rows: int, hidden: int = HIDDEN_DIM) -> T.Tensor:
    return T.Tensor(np.zeros((n_rows, hidden)))


def unroll_agent(params: T.ParamSet, prefix: str, obs: np.ndarray,
                 hidden: int = HIDDEN_DIM) -> tuple[list[T.Tensor], list[T.Tensor]]:
    """Unroll over (B, T, n, feat) observations; agents fold into the batch.

    Returns per-step q ((B*n, A)) and hidden ((B*n, H)) tensors, time-major.
    """
    b, t_len, n, feat = obs.shape
    rows = b * n
    h = init_hidden(rows, hidden)
    qs: list[T.Tensor] = []
    hs: list[T.Tensor] = []
    for t in range(t_len):
        q, h = agent_step(params, prefix, obs[:, t].reshape(rows, feat), h)
        qs.append(q)
        hs.append(h)
    return qs, hs


def masked_q_data(q: np.ndarray, avail: np.ndarray) -> np.ndarray:
    """Unavailable actions driven to -inf for greedy selection."""
    out = np.where(avail, q, -np.inf)
    return out


def greedy_actions(q: np.ndarray, avail: np.ndarray) -> np.ndarray:
    """Masked argmax; ties resolve to the lowest action id."""
    return masked_q_data(q, avail).argmax(axis=-1)


def select_epsilon_greedy(q: np.ndarray, avail: np.ndarray, eps: float,
                          rng: np.random.Generator | None) -> np.ndarray:
    """Independent epsilon-greedy per row. ``eps == 0`` never touches rng."""
    greedy = greedy_actions(q, avail)
    if eps <= 0.0:
        return greedy
    n = q.shape[0]
    explore = rng.random(n) < eps
    if not explore.any():
        return greedy
    actions = greedy.copy()
    for i in np.flatnonzero(explore):
        options = np.flatnonzero(avail[i])
        actions[i] = options[rng.integers(len(options))]
    return actions


def sample_from_probs(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sample one action per row from a probability matrix."""
    cum = probs.cumsum(axis=-1)
    cum /= cum[:, -1:]
    r = rng.random((probs.shape[0], 1))
    return (r < cum).argmax(axis=-1)
