"""Episode storage: trimmed per-episode arrays, FIFO replay, padded batches."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class EpisodeRecord:
    """One finished episode, trimmed to its actual length L.

    obs / state / avail carry L+1 entries (the final observation included);
    actions / reward / terminated carry L.
    """
    obs: np.ndarray         # (L+1, n_agents, obs_size) float32
    state: np.ndarray       # (L+1, state_size) float32
    avail: np.ndarray       # (L+1, n_agents, n_actions) bool
    actions: np.ndarray     # (L, n_agents) int64
    reward: np.ndarray      # (L,) float64
    terminated: np.ndarray  # (L,) bool
    battle_won: bool

    @property
    def length(self) -> int:
        return self.actions.shape[0]

    def validate(self) -> None:
        L = self.length
        assert self.obs.shape[0] == L + 1
        assert self.state.shape[0] == L + 1
        assert self.avail.shape[0] == L + 1
        assert self.reward.shape == (L,)
        assert self.terminated.shape == (L,)
        assert self.terminated[:-1].sum() == 0 and self.terminated[-1] in (0, 1)


class ReplayBuffer:
    """Ring of episodes; strictly FIFO eviction, uniform sampling with
    replacement."""

    def __init__(self, capacity: int = 5000):
        self.capacity = capacity
        self._episodes: list[EpisodeRecord] = []
        self._next = 0
        self.total_inserted = 0

    def __len__(self) -> int:
        return len(self._episodes)

    def insert(self, record: EpisodeRecord) -> None:
        if len(self._episodes) < self.capacity:
            self._episodes.append(record)
        else:
            self._episodes[self._next] = record
        self._next = (self._next + 1) % self.capacity
        self.total_inserted += 1

    def sample(self, rng: np.random.Generator, k: int) -> list[EpisodeRecord]:
        idx = rng.integers(0, len(self._episodes), size=k)
        return [self._episodes[i] for i in idx]

    def episodes(self) -> list[EpisodeRecord]:
        return list(self._episodes)

    def ring_state(self) -> tuple[list[EpisodeRecord], int, int]:
        return list(self._episodes), self._next, self.total_inserted

    def load_ring_state(self, episodes: list[EpisodeRecord], next_slot: int,
                        total_inserted: int) -> None:
        self._episodes = list(episodes)
        self._next = next_slot
        self.total_inserted = total_inserted


@dataclass
class TrainBatch:
    """Episodes padded to the longest length in the batch (float64 math).

    ``filled`` marks real steps; padded avail rows allow only no-op so that
    masked maxima stay finite.
    """
    obs: np.ndarray         # (B, T+1, n, obs_size) float64
    state: np.ndarray       # (B, T+1, state_size) float64
    avail: np.ndarray       # (B, T+1, n, A) bool
    actions: np.ndarray     # (B, T, n) int64
    reward: np.ndarray      # (B, T) float64
    terminated: np.ndarray  # (B, T) float64 0/1
    filled: np.ndarray      # (B, T) float64 0/1, prefix per episode

    @property
    def batch_size(self) -> int:
        return self.obs.shape[0]

    @property
    def max_t(self) -> int:
        return self.actions.shape[1]

    @property
    def n_agents(self) -> int:
        return self.obs.shape[2]


def make_train_batch(records: list[EpisodeRecord]) -> TrainBatch:
    b = len(records)
    t_max = max(r.length for r in records)
    n = records[0].obs.shape[1]
    obs_size = records[0].obs.shape[2]
    state_size = records[0].state.shape[1]
    n_actions = records[0].avail.shape[2]

    obs = np.zeros((b, t_max + 1, n, obs_size))
    state = np.zeros((b, t_max + 1, state_size))
    avail = np.zeros((b, t_max + 1, n, n_actions), dtype=bool)
    avail[..., 0] = True  # padding: no-op only
    actions = np.zeros((b, t_max, n), dtype=np.int64)
    reward = np.zeros((b, t_max))
    terminated = np.zeros((b, t_max))
    filled = np.zeros((b, t_max))
    for i, r in enumerate(records):
        L = r.length
        obs[i, : L + 1] = r.obs
        state[i, : L + 1] = r.state
        avail[i, : L + 1] = r.avail
        actions[i, :L] = r.actions
        reward[i, :L] = r.reward
        terminated[i, :L] = r.terminated
        filled[i, :L] = 1.0
    return TrainBatch(obs, state, avail, actions, reward, terminated, filled)


def sanitize_batch(batch: TrainBatch) -> None:
    """Zero anything outside the filled prefix (defence against poisoned
    padding reaching the networks)."""
    mask_t1 = np.zeros(batch.obs.shape[:2], dtype=bool)
    t_max = batch.max_t
    lengths = batch.filled.sum(axis=1).astype(int)
    for i, L in enumerate(lengths):
        mask_t1[i, : L + 1] = True
    batch.obs[~mask_t1] = 0.0
    batch.state[~mask_t1] = 0.0
    batch.avail[~mask_t1] = False
    batch.avail[~mask_t1, :, 0] = True
    step_mask = batch.filled.astype(bool)
    batch.actions[~step_mask] = 0
    batch.reward[~step_mask] = 0.0
    batch.terminated[~step_mask] = 0.0
