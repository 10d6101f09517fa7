"""QTRAN (base variant): factorisation by transformation constraints.

A joint action-value network scores (state, summed agent-action embeddings);
per-agent utilities are tied to it through the opt/nopt soft constraints
instead of a structural mixer.
"""

from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..runtime.batch import TrainBatch, make_train_batch, sanitize_batch
from .common import HIDDEN_DIM, greedy_actions, unroll_agent
from .qlearners import QLearnerBase


def _one_hot(idx: np.ndarray, depth: int) -> np.ndarray:
    out = np.zeros(idx.shape + (depth,))
    np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
    return out


class QTRAN(QLearnerBase):
    name = "qtran"

    def _add_mixer(self, rng: np.random.Generator) -> None:
        s = self.meta["state_size"]
        a = self.n_actions
        ae = HIDDEN_DIM + a  # embedding width: hidden state ++ action one-hot
        T.add_linear(self.params, rng, "embed.fc1", ae, ae)
        T.add_linear(self.params, rng, "embed.fc2", ae, ae)
        T.add_linear(self.params, rng, "joint.fc1", s + ae, 64)
        T.add_linear(self.params, rng, "joint.fc2", 64, 64)
        T.add_linear(self.params, rng, "joint.out", 64, 1)
        T.add_linear(self.params, rng, "vnet.fc1", s, 64)
        T.add_linear(self.params, rng, "vnet.fc2", 64, 64)
        T.add_linear(self.params, rng, "vnet.out", 64, 1)

    # -- network pieces -----------------------------------------------------
    def _joint_q(self, params: T.ParamSet, hidden_rows: T.Tensor,
                 action_onehot: np.ndarray, state: np.ndarray,
                 b: int) -> T.Tensor:
        """Q_jt for one timestep: embeddings summed over agents, then scored.

        hidden_rows: (B*n, H) tensor; action_onehot (B*n, A); state (B, S).
        """
        n = self.n_agents
        x = T.concat([hidden_rows, T.Tensor(action_onehot)], axis=1)
        emb = T.linear(T.relu(T.linear(x, params, "embed.fc1")), params, "embed.fc2")
        summed = T.sum(T.reshape(emb, (b, n, emb.shape[-1])), axis=1)  # permutation invariant
        joint_in = T.concat([T.Tensor(state), summed], axis=1)
        h1 = T.relu(T.linear(joint_in, params, "joint.fc1"))
        h2 = T.relu(T.linear(h1, params, "joint.fc2"))
        return T.linear(h2, params, "joint.out")  # (B, 1)

    def _v(self, state: np.ndarray) -> T.Tensor:
        s = T.Tensor(state)
        h1 = T.relu(T.linear(s, params := self.params, "vnet.fc1"))
        h2 = T.relu(T.linear(h1, params, "vnet.fc2"))
        return T.linear(h2, params, "vnet.out")

    # -- loss ----------------------------------------------------------------
    def loss(self, batch: TrainBatch) -> T.Tensor:
        return self.losses(batch)["total"]

    def losses(self, batch: TrainBatch) -> dict[str, T.Tensor]:
        sanitize_batch(batch)
        b, t_max, n, a = (batch.batch_size, batch.max_t, batch.n_agents,
                          self.n_actions)
        rows = b * n
        cfg = self.cfg

        qs, hs = unroll_agent(self.params, "agent.", batch.obs)
        q_data = np.stack([q.data for q in qs], axis=1).reshape(b, n, t_max + 1, a)
        q_data = q_data.transpose(0, 2, 1, 3)
        greedy = greedy_actions(q_data, batch.avail)          # (B, T+1, n)

        with T.no_grad():
            tqs, ths = unroll_agent(self.target_params, "agent.", batch.obs)
        tq_data = np.stack([q.data for q in tqs], axis=1).reshape(b, n, t_max + 1, a)
        tq_data = tq_data.transpose(0, 2, 1, 3)
        target_greedy = greedy_actions(tq_data, batch.avail)  # (B, T+1, n)

        idx = batch.actions.transpose(0, 2, 1).reshape(rows, t_max)
        joint_cols = []
        joint_umax = np.zeros((b, t_max))
        boot = np.zeros((b, t_max))
        for t in range(t_max):
            taken_oh = _one_hot(batch.actions[:, t].reshape(rows), a)
            joint_cols.append(self._joint_q(self.params, hs[t], taken_oh,
                                            batch.state[:, t], b))
            with T.no_grad():
                umax_oh = _one_hot(greedy[:, t].reshape(rows), a)
                joint_umax[:, t] = self._joint_q(
                    self.params, T.Tensor(hs[t].data), umax_oh,
                    batch.state[:, t], b).data[:, 0]
                next_oh = _one_hot(target_greedy[:, t + 1].reshape(rows), a)
                boot[:, t] = self._joint_q(
                    self.target_params, ths[t + 1], next_oh,
                    batch.state[:, t + 1], b).data[:, 0]
        q_joint = T.reshape(T.concat(joint_cols, axis=1), (b, t_max))

        targets = batch.reward + cfg.gamma * (1.0 - batch.terminated) * boot
        mask = batch.filled
        msum = mask.sum()

        td_err = T.apply_mask(T.sub(q_joint, targets), mask)
        l_td = T.mul(T.sum(T.mul(td_err, td_err)), 1.0 / msum)

        # per-agent maxima and chosen values, gradients attached
        chosen_steps, max_steps = [], []
        gidx = greedy[:, :t_max].transpose(0, 2, 1).reshape(rows, t_max)
        for t in range(t_max):
            chosen_steps.append(T.gather(qs[t], idx[:, t: t + 1], axis=-1))
            max_steps.append(T.gather(qs[t], gidx[:, t: t + 1], axis=-1))
        chosen_sum = T.sum(T.reshape(T.concat(chosen_steps, axis=1),
                                     (b, n, t_max)), axis=1)  # (B, T)
        max_sum = T.sum(T.reshape(T.concat(max_steps, axis=1),
                                  (b, n, t_max)), axis=1)

        v_flat = self._v(batch.state[:, :t_max].reshape(b * t_max, -1))
        v = T.reshape(v_flat, (b, t_max))

        opt_err = T.apply_mask(T.add(T.sub(max_sum, joint_umax), v), mask)
        l_opt = T.mul(T.sum(T.mul(opt_err, opt_err)), 1.0 / msum)

        nopt_raw = T.add(T.sub(chosen_sum, q_joint.data), v)
        nopt_clamped = T.mul(T.relu(T.mul(nopt_raw, -1.0)), -1.0)  # min(x, 0)
        nopt_err = T.apply_mask(nopt_clamped, mask)
        l_nopt = T.mul(T.sum(T.mul(nopt_err, nopt_err)), 1.0 / msum)

        total = T.add(l_td, T.add(T.mul(l_opt, cfg.qtran_lambda_opt),
                                  T.mul(l_nopt, cfg.qtran_lambda_nopt)))
        return {"td": l_td, "opt": l_opt, "nopt": l_nopt, "total": total}
