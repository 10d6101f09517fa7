"""Non-learning controllers: the opposing army AI and the allied baselines."""

from __future__ import annotations

import numpy as np

from .engine import EngineIntent, Team, WorldState, distance
from .engine.units import Unit


def _nearest(unit: Unit, candidates: list[Unit]) -> Unit | None:
    """Nearest living candidate; ties broken by lowest uid."""
    best = None
    best_key = None
    for c in candidates:
        if not c.alive:
            continue
        key = (distance(unit, c), c.uid)
        if best_key is None or key < best_key:
            best, best_key = c, key
    return best


class EnemyAttackMove:
    """Stand-in for the built-in opponent: every unit attack-moves.

    Each living unit attacks its nearest living opponent when in range and
    off cooldown, otherwise it moves straight toward it (static units hold).
    Healers keep the most-damaged nearby teammate topped up instead.
    ``focus_fire`` switches to one team-wide target (nearest to the army
    centroid, kept until it dies) as a difficulty knob.
    """

    def __init__(self, focus_fire: bool = False):
        self.focus_fire = focus_fire
        self._team_target_uid: int | None = None

    def reset(self) -> None:
        self._team_target_uid = None

    def _team_target(self, world: WorldState, opponents: list[Unit]) -> Unit | None:
        by_uid = {u.uid: u for u in opponents}
        current = by_uid.get(self._team_target_uid)
        if current is not None and current.alive:
            return current
        living = [u for u in world.enemies() if u.alive]
        if not living:
            return None
        cx = np.mean([u.pos for u in living], axis=0)
        best = None
        best_key = None
        for c in opponents:
            if not c.alive:
                continue
            key = (float(np.hypot(*(c.pos - cx))), c.uid)
            if best_key is None or key < best_key:
                best, best_key = c, key
        self._team_target_uid = best.uid if best is not None else None
        return best

    def step(self, world: WorldState) -> list[EngineIntent]:
        opponents = world.allies()
        intents: list[EngineIntent] = []
        shared = self._team_target(world, opponents) if self.focus_fire else None
        for unit in world.enemies():
            if not unit.alive:
                intents.append(EngineIntent.none())
                continue
            if unit.spec.is_healer:
                intents.append(self._healer_intent(world, unit))
                continue
            target = shared if shared is not None else _nearest(unit, opponents)
            if target is None:
                intents.append(EngineIntent.stop())
                continue
            if (unit.cooldown_remaining == 0
                    and distance(unit, target) <= world.effective_attack_range(unit)):
                intents.append(EngineIntent.attack(target.uid))
            elif unit.spec.is_static or unit.spec.move_speed == 0:
                intents.append(EngineIntent.stop())
            else:
                d = target.pos - unit.pos
                intents.append(EngineIntent.move_vec(d[0], d[1]))
        return intents

    def _healer_intent(self, world: WorldState, unit: Unit) -> EngineIntent:
        wounded = [u for u in world.enemies()
                   if u.alive and u.uid != unit.uid and u.health < u.spec.max_health]
        patient = _nearest(unit, wounded)
        if patient is not None:
            if (distance(unit, patient) <= world.shoot_range
                    and unit.energy >= unit.spec.heal_energy_cost):
                return EngineIntent.heal(patient.uid)
            d = patient.pos - unit.pos
            return EngineIntent.move_vec(d[0], d[1])
        opponent = _nearest(unit, world.allies())
        if opponent is not None and distance(unit, opponent) > world.shoot_range:
            d = opponent.pos - unit.pos
            return EngineIntent.move_vec(d[0], d[1])
        return EngineIntent.stop()


class HeuristicFocusFire:
    """Allied baseline: the whole team focuses the enemy nearest the team
    centroid (full observability), switching only when the target dies.

    Per agent: attack the target if that action is available, otherwise take
    the available move that gets closest to it, otherwise stop. Healers keep
    the most-wounded teammate in range healed.
    """

    def __init__(self):
        self._target_uid: int | None = None

    def reset(self) -> None:
        self._target_uid = None

    def _select_target(self, env) -> int | None:
        world = env.world
        enemies = world.enemies()
        current = next((u for u in enemies if u.uid == self._target_uid), None)
        if current is not None and current.alive:
            return self._target_uid
        living_allies = [u for u in world.allies() if u.alive]
        if not living_allies:
            return None
        centroid = np.mean([u.pos for u in living_allies], axis=0)
        best = None
        best_key = None
        for u in enemies:
            if not u.alive:
                continue
            key = (float(np.hypot(*(u.pos - centroid))), u.uid)
            if best_key is None or key < best_key:
                best, best_key = u, key
        self._target_uid = best.uid if best is not None else None
        return self._target_uid

    def step(self, env, avail: np.ndarray) -> np.ndarray:
        from .engine import DIRECTION_VECTORS

        world = env.world
        target_uid = self._select_target(env)
        actions = np.zeros(env.n_agents, dtype=np.int64)
        for i, unit in enumerate(world.allies()):
            if not unit.alive:
                continue
            if unit.spec.is_healer:
                actions[i] = self._healer_action(env, i, avail[i])
                continue
            if target_uid is None:
                actions[i] = 1
                continue
            attack_action = 6 + (target_uid - env.n_agents)
            if avail[i, attack_action]:
                actions[i] = attack_action
                continue
            target = world.units[target_uid]
            cur = distance(unit, target)
            best_action = 1
            best_dist = cur
            for d in range(4):
                if not avail[i, 2 + d]:
                    continue
                step_vec = np.array(DIRECTION_VECTORS[d]) * unit.spec.move_speed
                new_dist = float(np.hypot(*(unit.pos + step_vec - target.pos)))
                if new_dist < best_dist:
                    best_dist = new_dist
                    best_action = 2 + d
            actions[i] = best_action
        return actions

    def _healer_action(self, env, i: int, avail_row: np.ndarray) -> int:
        world = env.world
        allies = world.allies()
        best = None
        best_health = None
        for k, u in enumerate(allies):
            action = 6 + k
            if action < env.n_actions and avail_row[action]:
                if best_health is None or u.health < best_health:
                    best, best_health = action, u.health
        if best is not None:
            return best
        moves = [2 + d for d in range(4) if avail_row[2 + d]]
        if moves:
            # drift with the army: head toward the nearest living teammate
            unit = allies[i]
            others = [u for u in allies if u.alive and u.uid != unit.uid]
            mate = _nearest(unit, others)
            if mate is not None and distance(unit, mate) > 2.0:
                from .engine import DIRECTION_VECTORS

                best_action, best_dist = 1, distance(unit, mate)
                for d in range(4):
                    if not avail_row[2 + d]:
                        continue
                    vec = np.array(DIRECTION_VECTORS[d]) * unit.spec.move_speed
                    nd = float(np.hypot(*(unit.pos + vec - mate.pos)))
                    if nd < best_dist:
                        best_action, best_dist = 2 + d, nd
                return best_action
        return 1


class UniformRandomValid:
    """Uniform over the available actions (baseline and mask fuzzing)."""

    def reset(self) -> None:
        pass

    def step(self, env, avail: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        actions = np.zeros(env.n_agents, dtype=np.int64)
        for i in range(env.n_agents):
            options = np.flatnonzero(avail[i])
            actions[i] = options[rng.integers(len(options))]
        return actions
