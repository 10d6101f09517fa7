"""Dec-POMDP wrapper over the combat engine.

Per-agent observation layout (all features normalised, fixed order):

  [own]    health/max, shield/max, unit-type one-hot
  [enemy]  per enemy slot k: visible flag, distance/sight, dx/sight,
           dy/sight, health/max, shield/max, type one-hot
  [ally]   per teammate slot (agent order, self skipped): same fields,
           plus the teammate's last-action one-hot when
           include_last_actions_in_obs is set
  [probe]  8 x (height/2, walkable) terrain pairs when
           include_terrain_in_obs is set
  [id]     agent one-hot when agent_id_in_obs is set (default)

Slots for dead or out-of-sight units are exactly zero, so a distant teammate
is indistinguishable from a dead one. A dead agent observes zeros (its id
one-hot excepted).

The global state (training-only, never fed to execution policies) is:

  per ally:  (x-cx)/(w/2), (y-cy)/(h/2), health/max, shield/max,
             energy/max (healers) or cooldown/max, type one-hot
  per enemy: same minus the energy/cooldown entry
  then every agent's last-action one-hot.

Action ids: 0 no-op (dead agents only), 1 stop, 2-5 move N/S/E/W,
6+k attack enemy k (heal ally k for healers; slots past the ally count stay
masked).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import EnvConfig
from .engine import (
    DIRECTION_VECTORS,
    EngineIntent,
    Team,
    engine_reset,
    format_step_log,
    resolve_step,
)
from .engine.stats import UnitTypeSpec, default_stat_table
from .engine.terrain import terrain_probe
from .scenarios import ScenarioConfig, load_scenario


class EnvContractError(RuntimeError):
    """An action violated the availability mask."""


@dataclass
class StepResult:
    reward: float
    terminated: bool
    info: dict


class BattleEnv:
    """One battle scenario as a cooperative multi-agent environment.

    Instances are single-owner: one environment per training run, never
    shared across concurrent callers.
    """

    def __init__(self, scenario, env_config: EnvConfig | None = None,
                 stats: dict[str, UnitTypeSpec] | None = None,
                 enemy_ai=None, record_intents: bool = False):
        from .scripted import EnemyAttackMove

        if isinstance(scenario, str):
            scenario = load_scenario(scenario)
        self.scenario: ScenarioConfig = scenario
        self.cfg = env_config if env_config is not None else scenario.env
        self.cfg.validate()
        self.stats = stats if stats is not None else default_stat_table()
        self.enemy_ai = enemy_ai if enemy_ai is not None else EnemyAttackMove()
        self.record_intents = record_intents
        self.intent_log: list[str] = []

        self.n_agents = len(scenario.ally_units)
        self.n_enemies = len(scenario.enemy_units)
        self.n_actions = 6 + self.n_enemies
        self.episode_limit = scenario.episode_limit

        self.type_list = sorted({t for t, _ in scenario.ally_units}
                                | {t for t, _ in scenario.enemy_units})
        self._type_index = {t: i for i, t in enumerate(self.type_list)}
        k = len(self.type_list)
        self._own_feats = 2 + k
        self._enemy_feats = 6 + k
        self._ally_feats = 6 + k + (self.n_actions if self.cfg.include_last_actions_in_obs else 0)
        self.obs_size = (self._own_feats
                         + self.n_enemies * self._enemy_feats
                         + (self.n_agents - 1) * self._ally_feats
                         + (16 if self.cfg.include_terrain_in_obs else 0)
                         + (self.n_agents if self.cfg.agent_id_in_obs else 0))
        self._ally_state_feats = 5 + k
        self._enemy_state_feats = 4 + k
        self.state_size = (self.n_agents * self._ally_state_feats
                           + self.n_enemies * self._enemy_state_feats
                           + self.n_agents * self.n_actions)

        # static per-unit tables (allies first, matching engine uid order)
        specs = [self.stats[t] for t, _ in scenario.ally_units + scenario.enemy_units]
        for t, _ in scenario.ally_units + scenario.enemy_units:
            if t not in self.stats:
                raise ValueError(f"unknown unit type {t!r}")
        n = self.n_agents + self.n_enemies
        self._max_health = np.array([s.max_health for s in specs])
        self._max_shield_div = np.array([s.max_shield if s.max_shield > 0 else 1.0
                                         for s in specs])
        self._cd_or_energy_div = np.array(
            [s.max_energy if s.is_healer else float(s.cooldown_steps) for s in specs])
        self._is_healer = np.array([s.is_healer for s in specs])
        self._type_onehot = np.zeros((n, k))
        for i, s in enumerate(specs):
            self._type_onehot[i, self._type_index[s.type_id]] = 1.0
        self._specs = specs

        pools = [s.max_health + s.max_shield for s in specs[self.n_agents:]]
        self.max_reward = (float(np.sum(pools))
                           + self.cfg.reward_kill_bonus * self.n_enemies
                           + self.cfg.reward_win_bonus)
        self.reward_scale = self.cfg.reward_scale_target / self.max_reward

        self.world = None
        self._terminated = True
        self._arrays = None
        self._dist = None
        self._avail = None

    # -- meta -----------------------------------------------------------
    def meta(self) -> dict:
        return {"n_agents": self.n_agents, "n_actions": self.n_actions,
                "obs_size": self.obs_size, "state_size": self.state_size,
                "episode_limit": self.episode_limit}

    # -- lifecycle --------------------------------------------------------
    def reset(self, seed: int):
        self.world = engine_reset(self.scenario, seed, self.stats)
        self.enemy_ai.reset()
        self._terminated = False
        self.intent_log = []
        self._refresh_caches()
        return self.get_obs(), self.get_state()

    def step(self, actions) -> tuple[np.ndarray, np.ndarray, StepResult]:
        if self.world is None or self._terminated:
            raise EnvContractError("step() before reset() or after termination")
        actions = np.asarray(actions, dtype=np.int64)
        if actions.shape != (self.n_agents,):
            raise EnvContractError(
                f"expected {self.n_agents} actions, got shape {actions.shape}")
        avail = self._avail
        for i, a in enumerate(actions):
            if a < 0 or a >= self.n_actions or not avail[i, a]:
                raise EnvContractError(
                    f"agent {i}: action {int(a)} is not available")

        ally_intents = [self._to_intent(i, int(a)) for i, a in enumerate(actions)]
        enemy_intents = self.enemy_ai.step(self.world)
        if self.record_intents:
            self.intent_log.append(
                format_step_log(self.world.t, ally_intents, enemy_intents))
        outcome = resolve_step(self.world, ally_intents, enemy_intents)

        for i, a in enumerate(actions):
            self.world.units[i].last_action = int(a)

        enemies_alive = self.world.alive_count(Team.ENEMY)
        allies_alive = self.world.alive_count(Team.ALLY)
        won = enemies_alive == 0
        terminated = won or allies_alive == 0 or self.world.t >= self.episode_limit
        self._terminated = terminated

        if self.cfg.reward_mode == "shaped":
            reward = (outcome.damage_dealt_to_enemies
                      + self.cfg.reward_kill_bonus * outcome.enemy_kills
                      + (self.cfg.reward_win_bonus if won else 0.0)) * self.reward_scale
        else:
            reward = 0.0 if not terminated else (1.0 if won else -1.0)

        self._refresh_caches()
        info = {"battle_won": won,
                "dead_allies": self.n_agents - allies_alive,
                "dead_enemies": self.n_enemies - enemies_alive}
        return self.get_obs(), self.get_state(), StepResult(reward, terminated, info)

    def _to_intent(self, agent: int, action: int) -> EngineIntent:
        unit = self.world.units[agent]
        if action == 0:
            return EngineIntent.none() if not unit.alive else EngineIntent.stop()
        if action == 1:
            return EngineIntent.stop()
        if action < 6:
            return EngineIntent.move(action - 2)
        k = action - 6
        if unit.spec.is_healer:
            return EngineIntent.heal(k)  # ally index == uid
        return EngineIntent.attack(self.n_agents + k)

    # -- caches -------------------------------------------------------------
    def _refresh_caches(self) -> None:
        self._arrays = self.world.snapshot_arrays()
        pos = self._arrays["pos"]
        diff = pos[None, :, :] - pos[:, None, :]
        self._diff = diff
        self._dist = np.hypot(diff[..., 0], diff[..., 1])
        self._avail = self._build_avail()

    # -- availability ---------------------------------------------------------
    def _build_avail(self) -> np.ndarray:
        world = self.world
        arr = self._arrays
        avail = np.zeros((self.n_agents, self.n_actions), dtype=bool)
        enemy_slice = slice(self.n_agents, self.n_agents + self.n_enemies)
        for i, unit in enumerate(world.allies()):
            if not unit.alive:
                avail[i, 0] = True
                continue
            avail[i, 1] = True
            if unit.spec.move_speed > 0:
                h0 = world.terrain.height_at(unit.pos[0], unit.pos[1])
                for d, (dx, dy) in enumerate(DIRECTION_VECTORS):
                    nx = unit.pos[0] + dx * unit.spec.move_speed
                    ny = unit.pos[1] + dy * unit.spec.move_speed
                    if world.terrain.is_walkable(nx, ny) and (
                            unit.spec.ignores_cliffs
                            or world.terrain.height_at(nx, ny) == h0):
                        avail[i, 2 + d] = True
            if unit.spec.is_healer:
                if unit.energy >= unit.spec.heal_energy_cost:
                    for k in range(min(self.n_agents, self.n_enemies)):
                        mate = world.units[k]
                        if (k != i and mate.alive
                                and mate.health < mate.spec.max_health
                                and self._dist[i, k] <= world.shoot_range):
                            avail[i, 6 + k] = True
            elif unit.cooldown_remaining == 0:
                rng_i = world.effective_attack_range(unit)
                ok = (arr["alive"][enemy_slice]
                      & (self._dist[i, enemy_slice] <= rng_i))
                avail[i, 6:] = ok
        return avail

    def avail_actions(self, agent: int) -> np.ndarray:
        return self._avail[agent].copy()

    def avail_all(self) -> np.ndarray:
        return self._avail.copy()

    # -- observations -----------------------------------------------------------
    def get_obs(self) -> np.ndarray:
        out = np.zeros((self.n_agents, self.obs_size), dtype=np.float32)
        for i in range(self.n_agents):
            out[i] = self.build_obs(i)
        return out

    def build_obs(self, agent: int) -> np.ndarray:
        cfg = self.cfg
        arr = self._arrays
        obs = np.zeros(self.obs_size, dtype=np.float32)
        unit = self.world.units[agent]
        off = 0
        if unit.alive:
            nA, nE = self.n_agents, self.n_enemies
            obs[0] = arr["health"][agent] / self._max_health[agent]
            obs[1] = arr["shield"][agent] / self._max_shield_div[agent]
            obs[2: 2 + len(self.type_list)] = self._type_onehot[agent]
            off = self._own_feats

            sight = cfg.sight_range
            dist_row = self._dist[agent]
            vis = arr["alive"] & (dist_row <= sight)
            vis[agent] = False

            eidx = np.arange(nA, nA + nE)
            block = self._unit_block(agent, eidx, vis, dist_row, sight)
            obs[off: off + nE * self._enemy_feats] = block.reshape(-1)
            off += nE * self._enemy_feats

            aidx = np.array([j for j in range(nA) if j != agent], dtype=np.int64)
            if len(aidx):
                block = self._unit_block(agent, aidx, vis, dist_row, sight)
                if cfg.include_last_actions_in_obs:
                    la = np.zeros((len(aidx), self.n_actions), dtype=np.float32)
                    visible = vis[aidx]
                    la[np.arange(len(aidx))[visible],
                       arr["last_action"][aidx][visible]] = 1.0
                    block = np.concatenate([block, la], axis=1)
                obs[off: off + len(aidx) * self._ally_feats] = block.reshape(-1)
            off += (nA - 1) * self._ally_feats

            if cfg.include_terrain_in_obs:
                obs[off: off + 16] = terrain_probe(
                    self.world.terrain, unit.pos, cfg.terrain_probe_radius)
                off += 16
        else:
            off = (self._own_feats + self.n_enemies * self._enemy_feats
                   + (self.n_agents - 1) * self._ally_feats
                   + (16 if cfg.include_terrain_in_obs else 0))
        if cfg.agent_id_in_obs:
            obs[off + agent] = 1.0
        return obs

    def _unit_block(self, agent: int, idx: np.ndarray, vis: np.ndarray,
                    dist_row: np.ndarray, sight: float) -> np.ndarray:
        arr = self._arrays
        m = len(idx)
        block = np.zeros((m, 6 + len(self.type_list)), dtype=np.float32)
        visible = vis[idx]
        if visible.any():
            sel = idx[visible]
            rows = np.flatnonzero(visible)
            block[rows, 0] = 1.0
            block[rows, 1] = dist_row[sel] / sight
            block[rows, 2] = self._diff[agent, sel, 0] / sight
            block[rows, 3] = self._diff[agent, sel, 1] / sight
            block[rows, 4] = arr["health"][sel] / self._max_health[sel]
            block[rows, 5] = arr["shield"][sel] / self._max_shield_div[sel]
            block[rows, 6:] = self._type_onehot[sel]
        return block

    # -- global state -------------------------------------------------------
    def get_state(self) -> np.ndarray:
        return self.build_state()

    def build_state(self) -> np.ndarray:
        arr = self._arrays
        w, h = self.world.terrain.width, self.world.terrain.height
        cx, cy = w / 2.0, h / 2.0
        state = np.zeros(self.state_size, dtype=np.float32)
        k = len(self.type_list)
        off = 0
        for i in range(self.n_agents):
            if arr["alive"][i]:
                state[off] = (arr["pos"][i, 0] - cx) / cx
                state[off + 1] = (arr["pos"][i, 1] - cy) / cy
                state[off + 2] = arr["health"][i] / self._max_health[i]
                state[off + 3] = arr["shield"][i] / self._max_shield_div[i]
                raw = arr["energy"][i] if self._is_healer[i] else arr["cooldown"][i]
                state[off + 4] = raw / self._cd_or_energy_div[i]
                state[off + 5: off + 5 + k] = self._type_onehot[i]
            off += self._ally_state_feats
        for j in range(self.n_agents, self.n_agents + self.n_enemies):
            if arr["alive"][j]:
                state[off] = (arr["pos"][j, 0] - cx) / cx
                state[off + 1] = (arr["pos"][j, 1] - cy) / cy
                state[off + 2] = arr["health"][j] / self._max_health[j]
                state[off + 3] = arr["shield"][j] / self._max_shield_div[j]
                state[off + 4: off + 4 + k] = self._type_onehot[j]
            off += self._enemy_state_feats
        for i in range(self.n_agents):
            state[off + int(arr["last_action"][i])] = 1.0
            off += self.n_actions
        return state
