"""Replay-based joint-action learners: IQL, VDN, QMIX.

All three share the recurrent utility network and differ only in how the
per-agent values combine into the trained objective: not at all (IQL), by
exact summation (VDN), or through a state-conditioned monotonic mixing
network (QMIX).
"""

from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..runtime.batch import ReplayBuffer, TrainBatch, make_train_batch, sanitize_batch
from .common import (
    add_agent_net,
    agent_step,
    greedy_actions,
    init_hidden,
    linear_schedule,
    select_epsilon_greedy,
    unroll_agent,
)

MIXING_EMBED = 32
HYPERNET_HIDDEN = 64


class QLearnerBase:
    """Shared machinery: buffer, batched unrolls, TD targets, optimizer."""

    name = "base"

    def __init__(self, meta: dict, cfg, rng: np.random.Generator):
        self.meta = meta
        self.cfg = cfg
        self.n_agents = meta["n_agents"]
        self.n_actions = meta["n_actions"]
        self.params = T.ParamSet()
        add_agent_net(self.params, rng, "agent.", meta["obs_size"],
                      self.n_actions, ff=cfg.ff)
        self._add_mixer(rng)
        self.target_params = self.params.clone()
        self.opt = T.RMSprop(self.params, lr=cfg.lr, alpha=cfg.rmsprop_alpha,
                             eps=cfg.rmsprop_eps, grad_clip=cfg.grad_clip)
        self.buffer = ReplayBuffer(cfg.buffer_size)
        self.env_steps = 0
        self._h = None

    # -- acting (decentralised: per-agent observations only) ---------------
    def exploration_eps(self, env_steps: int) -> float:
        return linear_schedule(self.cfg.eps_start, self.cfg.eps_end,
                               self.cfg.eps_anneal_steps, env_steps)

    def start_episode(self) -> None:
        self._h = init_hidden(self.n_agents)

    def act(self, obs: np.ndarray, avail: np.ndarray, eps: float,
            rng: np.random.Generator | None) -> np.ndarray:
        with T.no_grad():
            q, self._h = agent_step(self.params, "agent.",
                                    obs.astype(np.float64), self._h)
        return select_epsilon_greedy(q.data, avail, eps if rng is not None else 0.0,
                                     rng)

    # subclass hooks ----------------------------------------------------
    def _add_mixer(self, rng: np.random.Generator) -> None:
        pass

    def _q_tot(self, chosen: T.Tensor, batch: TrainBatch) -> T.Tensor:
        """Combine chosen per-agent values (B, T, n) into the trained value."""
        raise NotImplementedError

    def _bootstrap(self, target_max: np.ndarray, batch: TrainBatch) -> np.ndarray:
        """Combine next-step target maxima (B, T, n) into bootstrap values."""
        raise NotImplementedError

    # training ------------------------------------------------------------
    def observe_episode(self, record) -> None:
        self.buffer.insert(record)

    def ready(self) -> bool:
        return len(self.buffer) >= self.cfg.batch_size

    def update_targets(self) -> None:
        self.target_params.copy_from(self.params)

    def train_step(self, rng: np.random.Generator) -> float:
        records = self.buffer.sample(rng, self.cfg.batch_size)
        loss = self.loss(make_train_batch(records))
        self.opt.zero_grad()
        loss.backward()
        self.opt.step()
        value = float(loss.data)
        if not np.isfinite(value):
            raise FloatingPointError(f"{self.name}: non-finite loss")
        return value

    # loss -----------------------------------------------------------------
    def chosen_and_target_max(self, batch: TrainBatch):
        """Per-agent Q(taken) with gradients, next-step target maxima without."""
        b, t_max, n = batch.batch_size, batch.max_t, batch.n_agents
        rows = b * n
        qs, _ = unroll_agent(self.params, "agent.", batch.obs)
        idx = batch.actions.transpose(0, 2, 1).reshape(rows, t_max)
        steps = [T.gather(qs[t], idx[:, t: t + 1], axis=-1) for t in range(t_max)]
        chosen = T.transpose(T.reshape(T.concat(steps, axis=1), (b, n, t_max)),
                             (0, 2, 1))  # (B, T, n)

        with T.no_grad():
            tqs, _ = unroll_agent(self.target_params, "agent.", batch.obs)
        target_q = np.stack([q.data for q in tqs], axis=1)
        target_q = target_q.reshape(b, n, t_max + 1, -1).transpose(0, 2, 1, 3)
        if self.cfg.double_q:
            online_q = np.stack([q.data for q in qs], axis=1)
            online_q = online_q.reshape(b, n, t_max + 1, -1).transpose(0, 2, 1, 3)
            best = greedy_actions(online_q[:, 1:], batch.avail[:, 1:])
            tmax = np.take_along_axis(target_q[:, 1:], best[..., None], axis=-1)[..., 0]
        else:
            tmax = np.where(batch.avail[:, 1:], target_q[:, 1:], -np.inf).max(axis=-1)
        return chosen, tmax  # (B, T, n) both

    def loss(self, batch: TrainBatch) -> T.Tensor:
        sanitize_batch(batch)
        chosen, tmax = self.chosen_and_target_max(batch)
        q_tot = self._q_tot(chosen, batch)
        boot = self._bootstrap(tmax, batch)
        gamma = self.cfg.gamma
        if q_tot.ndim == 3:  # per-agent objective (IQL)
            targets = (batch.reward[..., None]
                       + gamma * (1.0 - batch.terminated[..., None]) * boot)
            mask = np.repeat(batch.filled[..., None], batch.n_agents, axis=-1)
        else:
            targets = batch.reward + gamma * (1.0 - batch.terminated) * boot
            mask = batch.filled
        err = T.apply_mask(T.sub(q_tot, targets), mask)
        return T.mul(T.sum(T.mul(err, err)), 1.0 / mask.sum())

    # persistence ------------------------------------------------------------
    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        out = {f"main/{k}": v for k, v in self.params.to_arrays().items()}
        out.update({f"target/{k}": v for k, v in self.target_params.to_arrays().items()})
        out.update({f"opt/{k}": v for k, v in self.opt.state_arrays().items()})
        return out

    def load_checkpoint_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        self.params.load_arrays({k[5:]: v for k, v in arrays.items()
                                 if k.startswith("main/")})
        self.target_params.load_arrays({k[7:]: v for k, v in arrays.items()
                                        if k.startswith("target/")})
        self.opt.load_state_arrays({k[4:]: v for k, v in arrays.items()
                                    if k.startswith("opt/")})


class IQL(QLearnerBase):
    """Independent Q-learning: every agent treats the rest as environment."""

    name = "iql"

    def _q_tot(self, chosen, batch):
        return chosen  # (B, T, n): one TD objective per agent

    def _bootstrap(self, target_max, batch):
        return target_max


class VDN(QLearnerBase):
    """Value decomposition: the joint value is exactly the sum of utilities."""

    name = "vdn"

    def _q_tot(self, chosen, batch):
        return T.sum(chosen, axis=2)

    def _bootstrap(self, target_max, batch):
        return target_max.sum(axis=-1)


class QMIX(QLearnerBase):
    """Monotonic mixing: state-conditioned nonnegative weights combine the
    utilities, so greedy per-agent choices maximise the joint value too."""

    name = "qmix"

    def _add_mixer(self, rng: np.random.Generator) -> None:
        s = self.meta["state_size"]
        n, e, h = self.n_agents, MIXING_EMBED, HYPERNET_HIDDEN
        T.add_linear(self.params, rng, "mixer.hw1_a", s, h)
        T.add_linear(self.params, rng, "mixer.hw1_b", h, n * e)
        T.add_linear(self.params, rng, "mixer.hb1", s, e)
        T.add_linear(self.params, rng, "mixer.hw2_a", s, h)
        T.add_linear(self.params, rng, "mixer.hw2_b", h, e)
        T.add_linear(self.params, rng, "mixer.v_a", s, e)
        T.add_linear(self.params, rng, "mixer.v_b", e, 1)

    def mix(self, agent_qs: T.Tensor, states: np.ndarray,
            params: T.ParamSet) -> T.Tensor:
        """agent_qs (B, T, n) + states (B, T, S) -> Q_tot (B, T).

        Hypernetworks with one 64-unit ReLU hidden layer emit the mixing
        weights; absolute values keep every dQ_tot/dQ_a nonnegative. The
        mixer body is a single 32-unit ELU layer; the final bias is a
        state-value head.
        """
        b, t_len, n = agent_qs.shape
        e = MIXING_EMBED
        bt = b * t_len
        s = T.Tensor(states.reshape(bt, -1))
        w1 = T.abs(T.linear(T.relu(T.linear(s, params, "mixer.hw1_a")),
                            params, "mixer.hw1_b"))
        b1 = T.linear(s, params, "mixer.hb1")
        w2 = T.abs(T.linear(T.relu(T.linear(s, params, "mixer.hw2_a")),
                            params, "mixer.hw2_b"))
        v = T.linear(T.relu(T.linear(s, params, "mixer.v_a")), params, "mixer.v_b")
        q = T.reshape(agent_qs, (bt, 1, n))
        hidden = T.elu(T.add(T.matmul(q, T.reshape(w1, (bt, n, e))),
                             T.reshape(b1, (bt, 1, e))))
        out = T.add(T.matmul(hidden, T.reshape(w2, (bt, e, 1))),
                    T.reshape(v, (bt, 1, 1)))
        return T.reshape(out, (b, t_len))

    def _q_tot(self, chosen, batch):
        return self.mix(chosen, batch.state[:, :-1], self.params)

    def _bootstrap(self, target_max, batch):
        with T.no_grad():
            out = self.mix(T.Tensor(target_max), batch.state[:, 1:],
                           self.target_params)
        return out.data
