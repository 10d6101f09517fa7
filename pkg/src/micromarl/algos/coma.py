"""Counterfactual policy gradients: a centralised critic scores every action
of each agent against the others' taken actions; the advantage subtracts the
policy-weighted baseline so credit is per-agent."""

from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..runtime.batch import TrainBatch, make_train_batch, sanitize_batch
from .common import (
    add_agent_net,
    agent_step,
    init_hidden,
    linear_schedule,
    sample_from_probs,
    unroll_agent,
)

CRITIC_HIDDEN = 128


def masked_softmax_floor_np(q: np.ndarray, avail: np.ndarray, eps: float) -> np.ndarray:
    """Plain-numpy policy probabilities (action selection, no gradients)."""
    masked = np.where(avail, q, -1e10)
    masked = masked - masked.max(axis=-1, keepdims=True)
    e = np.exp(masked) * avail
    probs = e / e.sum(axis=-1, keepdims=True)
    n_avail = avail.sum(axis=-1, keepdims=True)
    return (1.0 - eps) * probs + np.where(avail, eps / n_avail, 0.0)


class COMA:
    name = "coma"

    def __init__(self, meta: dict, cfg, rng: np.random.Generator):
        self.meta = meta
        self.cfg = cfg
        self.n_agents = meta["n_agents"]
        self.n_actions = meta["n_actions"]
        self.params = T.ParamSet()
        add_agent_net(self.params, rng, "agent.", meta["obs_size"],
                      self.n_actions, ff=cfg.ff)
        in_size = (meta["state_size"] + self.n_agents * self.n_actions
                   + self.n_agents)
        T.add_linear(self.params, rng, "critic.fc1", in_size, CRITIC_HIDDEN)
        T.add_linear(self.params, rng, "critic.fc2", CRITIC_HIDDEN, CRITIC_HIDDEN)
        T.add_linear(self.params, rng, "critic.out", CRITIC_HIDDEN, self.n_actions)
        self.target_params = self.params.clone()
        self.opt = T.RMSprop(self.params, lr=cfg.lr, alpha=cfg.rmsprop_alpha,
                             eps=cfg.rmsprop_eps, grad_clip=cfg.grad_clip)
        self._episodes = []
        self.env_steps = 0
        self._h = None

    # -- exploration / acting ----------------------------------------------
    def exploration_eps(self, env_steps: int) -> float:
        return linear_schedule(self.cfg.coma_eps_start, self.cfg.coma_eps_end,
                               self.cfg.coma_eps_anneal, env_steps)

    def start_episode(self) -> None:
        self._h = init_hidden(self.n_agents)

    def act(self, obs: np.ndarray, avail: np.ndarray, eps: float,
            rng: np.random.Generator | None) -> np.ndarray:
        with T.no_grad():
            q, self._h = agent_step(self.params, "agent.",
                                    obs.astype(np.float64), self._h)
        if rng is None:  # greedy evaluation: mode of the floored policy
            return np.where(avail, q.data, -np.inf).argmax(axis=-1)
        probs = masked_softmax_floor_np(q.data, avail, eps)
        return sample_from_probs(probs, rng)

    # -- episode intake -----------------------------------------------------
    def observe_episode(self, record) -> None:
        self._episodes.append(record)

    def ready(self) -> bool:
        return len(self._episodes) >= self.cfg.coma_batch_episodes

    def update_targets(self) -> None:
        self.target_params.copy_from(self.params)

    # -- critic helpers ------------------------------------------------------
    def critic_inputs(self, batch: TrainBatch) -> np.ndarray:
        """(B, T, n, state ++ others' actions one-hot ++ agent id).

        The joint-action block carries every agent's taken action one-hot
        with the evaluated agent's own block zeroed.
        """
        b, t_max, n, a = (batch.batch_size, batch.max_t, batch.n_agents,
                          self.n_actions)
        joint = np.zeros((b, t_max, n * a))
        flat = batch.actions.reshape(b, t_max, n)
        for i in range(n):
            rows_idx = i * a + flat[:, :, i]
            np.put_along_axis(joint, rows_idx[..., None], 1.0, axis=-1)
        out = np.zeros((b, t_max, n, batch.state.shape[-1] + n * a + n))
        s_dim = batch.state.shape[-1]
        for i in range(n):
            out[:, :, i, :s_dim] = batch.state[:, :t_max]
            block = joint.copy()
            block[:, :, i * a: (i + 1) * a] = 0.0
            out[:, :, i, s_dim: s_dim + n * a] = block
            out[:, :, i, s_dim + n * a + i] = 1.0
        return out

    def _critic_forward(self, params: T.ParamSet, rows: np.ndarray) -> T.Tensor:
        h1 = T.relu(T.linear(T.Tensor(rows), params, "critic.fc1"))
        h2 = T.relu(T.linear(h1, params, "critic.fc2"))
        return T.linear(h2, params, "critic.out")

    def lambda_targets(self, batch: TrainBatch, critic_in: np.ndarray) -> np.ndarray:
        """TD(lambda) returns of the team reward from the target critic."""
        b, t_max, n = batch.batch_size, batch.max_t, batch.n_agents
        with T.no_grad():
            q = self._critic_forward(self.target_params,
                                     critic_in.reshape(b * t_max * n, -1))
        q = q.data.reshape(b, t_max, n, self.n_actions)
        taken = np.take_along_axis(q, batch.actions[..., None], axis=-1)[..., 0]
        lam, gamma = self.cfg.td_lambda, self.cfg.gamma
        g = np.zeros((b, t_max, n))
        nxt = np.zeros((b, n))
        for t in range(t_max - 1, -1, -1):
            cont = 1.0 - batch.terminated[:, t: t + 1]
            boot = np.zeros((b, n)) if t + 1 >= t_max else taken[:, t + 1]
            nxt = (batch.reward[:, t: t + 1]
                   + gamma * cont * ((1.0 - lam) * boot + lam * nxt))
            nxt = nxt * batch.filled[:, t: t + 1]  # padded steps contribute 0
            g[:, t] = nxt
        return g

    # -- update ----------------------------------------------------------------
    def train_step(self, rng: np.random.Generator) -> float:
        batch = make_train_batch(self._episodes)
        self._episodes = []
        sanitize_batch(batch)
        b, t_max, n, a = (batch.batch_size, batch.max_t, batch.n_agents,
                          self.n_actions)

        critic_in = self.critic_inputs(batch)
        targets = self.lambda_targets(batch, critic_in)

        # critic: one gradient step per timestep, last step first
        q_vals = np.zeros((b, t_max, n, a))
        critic_loss_total = 0.0
        for t in range(t_max - 1, -1, -1):
            mask_t = batch.filled[:, t]
            if mask_t.sum() == 0:
                continue
            q_t = self._critic_forward(self.params, critic_in[:, t].reshape(b * n, -1))
            q_vals[:, t] = q_t.data.reshape(b, n, a)
            taken = T.gather(q_t, batch.actions[:, t].reshape(b * n, 1), axis=-1)
            err = T.apply_mask(
                T.sub(T.reshape(taken, (b, n)), targets[:, t]),
                np.repeat(mask_t[:, None], n, axis=1))
            loss_t = T.mul(T.sum(T.mul(err, err)), 1.0 / (mask_t.sum() * n))
            self.opt.zero_grad()
            loss_t.backward()
            self.opt.step()
            critic_loss_total += float(loss_t.data)

        # actors: one step over all episodes
        eps = self.exploration_eps(self.env_steps)
        qs, _ = unroll_agent(self.params, "agent.", batch.obs[:, :t_max])
        rows = b * n
        avail = batch.avail[:, :t_max].transpose(0, 2, 1, 3).reshape(rows, t_max, a)
        idx = batch.actions.transpose(0, 2, 1).reshape(rows, t_max)
        mask_rows = np.repeat(batch.filled[:, None, :], n, axis=1).reshape(rows, t_max)
        # dead agents only no-op; exclude their degenerate policies
        mask_rows = mask_rows * (avail.sum(axis=-1) > 1)

        q_flat = q_vals.transpose(0, 2, 1, 3).reshape(rows, t_max, a)
        pg_terms = []
        for t in range(t_max):
            probs = T.masked_softmax_probs(qs[t], avail[:, t], eps)
            taken_p = T.gather(probs, idx[:, t: t + 1], axis=-1)
            logp = T.log(T.add(taken_p, 1e-12))
            baseline = (probs.data * q_flat[:, t]).sum(axis=-1)
            q_taken = np.take_along_axis(q_flat[:, t], idx[:, t: t + 1], axis=-1)[:, 0]
            adv = (q_taken - baseline)[:, None]
            pg_terms.append(T.apply_mask(T.mul(logp, adv), mask_rows[:, t: t + 1]))
        denom = max(mask_rows.sum(), 1.0)
        pg_loss = T.mul(T.sum(T.concat(pg_terms, axis=1)), -1.0 / denom)
        self.opt.zero_grad()
        pg_loss.backward()
        self.opt.step()

        value = critic_loss_total + float(pg_loss.data)
        if not np.isfinite(value):
            raise FloatingPointError("coma: non-finite loss")
        return value

    # -- persistence -----------------------------------------------------------
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
