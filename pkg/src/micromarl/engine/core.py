"""Step resolution: simultaneous intents, movement clipping, damage, deaths.

Resolution order inside one step is fixed:
  1. validate every intent (one per living unit, null for dead units)
  2. apply moves, clipped at unwalkable cells and cliff transitions
  3. accumulate attack / heal / detonation amounts from pre-step positions
  4. apply damage and healing simultaneously (shield absorbs before health;
     heal and damage sum before the death check)
  5. compute deaths and the ally damage credit (capped per target pool)
  6. decrement cooldowns, apply shield / energy regeneration, advance time
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .stats import UnitTypeSpec
from .terrain import Terrain
from .units import Team, Unit, distance
from .world import WorldState

_EPS = 1e-9

# action directions N, S, E, W
DIRECTION_VECTORS = ((0.0, 1.0), (0.0, -1.0), (1.0, 0.0), (-1.0, 0.0))
DIRECTION_NAMES = ("north", "south", "east", "west")


class EngineError(ValueError):
    """An intent violated the engine contract (callers must mask)."""


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EngineIntent:
    kind: str                 # none | stop | move | move_vec | attack | heal
    direction: int = -1       # move: 0..3 = N, S, E, W
    vec: tuple[float, float] | None = None  # move_vec: free displacement
    target_uid: int = -1      # attack / heal

    @classmethod
    def none(cls):
        return _NONE

    @classmethod
    def stop(cls):
        return _STOP

    @classmethod
    def move(cls, direction: int):
        return cls("move", direction=direction)

    @classmethod
    def move_vec(cls, dx: float, dy: float):
        return cls("move_vec", vec=(float(dx), float(dy)))

    @classmethod
    def attack(cls, target_uid: int):
        return cls("attack", target_uid=target_uid)

    @classmethod
    def heal(cls, target_uid: int):
        return cls("heal", target_uid=target_uid)


_NONE = EngineIntent("none")
_STOP = EngineIntent("stop")


@dataclass
class StepOutcome:
    damage_dealt_to_enemies: float
    enemy_kills: int
    ally_deaths: int
    world: WorldState


# ---------------------------------------------------------------------------
# movement

def _axis_move(terrain: Terrain, x: float, y: float, horizontal: bool,
               delta: float, ignores_cliffs: bool) -> float:
    """March cell-by-cell along one axis; stop just before a blocked cell."""
    if delta == 0.0:
        return x if horizontal else y
    cs = terrain.cell_size
    coord = x if horizontal else y
    target = coord + delta
    step = 1 if delta > 0 else -1
    ix, iy = terrain.cell_of(x, y)
    cur_height = int(terrain.height_map[iy, ix])
    cell = ix if horizontal else iy
    while True:
        boundary = (cell + 1) * cs if step > 0 else cell * cs
        if (step > 0 and boundary > target) or (step < 0 and boundary < target):
            return target
        nxt = cell + step
        cx, cy = (nxt, iy) if horizontal else (ix, nxt)
        if (cx < 0 or cy < 0 or cy >= terrain.walkable.shape[0]
                or cx >= terrain.walkable.shape[1]
                or not terrain.walkable[cy, cx]
                or (not ignores_cliffs and terrain.height_map[cy, cx] != cur_height)):
            return boundary - step * _EPS
        cur_height = int(terrain.height_map[cy, cx])
        cell = nxt


def apply_move(terrain: Terrain, pos: np.ndarray, delta: np.ndarray,
               ignores_cliffs: bool) -> np.ndarray:
    """Clipped displacement; x leg first, then y (slide along obstacles)."""
    x = _axis_move(terrain, pos[0], pos[1], True, float(delta[0]), ignores_cliffs)
    y = _axis_move(terrain, x, pos[1], False, float(delta[1]), ignores_cliffs)
    return np.array([x, y])


# ---------------------------------------------------------------------------
# step resolution

def _validate_intent(world: WorldState, by_uid: dict[int, Unit], unit: Unit,
                     intent: EngineIntent) -> None:
    if not unit.alive:
        if intent.kind != "none":
            raise EngineError(f"dead unit {unit.uid} submitted {intent.kind!r}")
        return
    kind = intent.kind
    if kind == "none":
        raise EngineError(f"living unit {unit.uid} submitted the null intent")
    if kind == "stop":
        return
    if kind in ("move", "move_vec"):
        if unit.spec.is_static or unit.spec.move_speed == 0.0:
            raise EngineError(f"static unit {unit.uid} cannot move")
        if kind == "move" and not 0 <= intent.direction < 4:
            raise EngineError(f"unit {unit.uid}: bad move direction {intent.direction}")
        return
    target = by_uid.get(intent.target_uid)
    if target is None or not target.alive:
        raise EngineError(
            f"unit {unit.uid}: {kind} targets dead or unknown unit {intent.target_uid}")
    if kind == "attack":
        if unit.spec.is_healer:
            raise EngineError(f"healer {unit.uid} cannot attack")
        if target.team == unit.team:
            raise EngineError(f"unit {unit.uid}: attack targets own team")
        if unit.cooldown_remaining > 0:
            raise EngineError(f"unit {unit.uid}: attack while on cooldown")
        max_range = world.effective_attack_range(unit)
        if distance(unit, target) > max_range:
            raise EngineError(
                f"unit {unit.uid}: target {target.uid} out of range "
                f"({distance(unit, target):.3f} > {max_range})")
    elif kind == "heal":
        if not unit.spec.is_healer:
            raise EngineError(f"unit {unit.uid} cannot heal")
        if target.team != unit.team or target.uid == unit.uid:
            raise EngineError(f"unit {unit.uid}: heal must target another teammate")
        if unit.energy < unit.spec.heal_energy_cost:
            raise EngineError(f"unit {unit.uid}: not enough energy to heal")
        if distance(unit, target) > world.shoot_range:
            raise EngineError(f"unit {unit.uid}: heal target {target.uid} out of range")
    else:
        raise EngineError(f"unit {unit.uid}: unknown intent kind {kind!r}")


def resolve_step(world: WorldState, ally_intents: list[EngineIntent],
                 enemy_intents: list[EngineIntent]) -> StepOutcome:
    allies, enemies = world.allies(), world.enemies()
    if len(ally_intents) != len(allies):
        raise EngineError(f"expected {len(allies)} ally intents, got {len(ally_intents)}")
    if len(enemy_intents) != len(enemies):
        raise EngineError(f"expected {len(enemies)} enemy intents, got {len(enemy_intents)}")
    by_uid = {u.uid: u for u in world.units}
    pairs = list(zip(allies, ally_intents)) + list(zip(enemies, enemy_intents))

    for unit, intent in pairs:
        _validate_intent(world, by_uid, unit, intent)

    pre_pos = {u.uid: u.pos.copy() for u in world.units if u.alive}
    pre_pool = {u.uid: u.pool() for u in world.units}

    # moves (independent; attacks below use pre-step positions)
    for unit, intent in pairs:
        if intent.kind == "move":
            dx, dy = DIRECTION_VECTORS[intent.direction]
            delta = np.array([dx, dy]) * unit.spec.move_speed
            unit.pos = apply_move(world.terrain, unit.pos, delta, unit.spec.ignores_cliffs)
        elif intent.kind == "move_vec":
            delta = np.array(intent.vec, dtype=np.float64)
            norm = float(np.hypot(delta[0], delta[1]))
            if norm > unit.spec.move_speed and norm > 0:
                delta *= unit.spec.move_speed / norm
            unit.pos = apply_move(world.terrain, unit.pos, delta, unit.spec.ignores_cliffs)

    # accumulate damage / healing
    dmg_total: dict[int, float] = {}
    dmg_by_ally: dict[int, float] = {}
    heal_in: dict[int, float] = {}
    suicides: list[Unit] = []
    for unit, intent in pairs:
        if intent.kind == "attack":
            if unit.spec.is_suicide_splash:
                suicides.append(unit)
            else:
                t = intent.target_uid
                dmg_total[t] = dmg_total.get(t, 0.0) + unit.spec.damage_per_hit
                if unit.team == Team.ALLY:
                    dmg_by_ally[t] = dmg_by_ally.get(t, 0.0) + unit.spec.damage_per_hit
                unit.cooldown_remaining = unit.spec.cooldown_steps
        elif intent.kind == "heal":
            t = intent.target_uid
            heal_in[t] = heal_in.get(t, 0.0) + unit.spec.heal_per_action
            unit.energy -= unit.spec.heal_energy_cost

    for bomber in suicides:
        centre = pre_pos[bomber.uid]
        radius = bomber.spec.splash_radius
        for other in world.units:
            if not other.alive or other.uid == bomber.uid:
                continue
            d = centre - pre_pos[other.uid]
            if float(np.hypot(d[0], d[1])) <= radius:
                dmg_total[other.uid] = dmg_total.get(other.uid, 0.0) + bomber.spec.damage_per_hit
                if bomber.team == Team.ALLY and other.team == Team.ENEMY:
                    dmg_by_ally[other.uid] = (dmg_by_ally.get(other.uid, 0.0)
                                              + bomber.spec.damage_per_hit)

    # apply simultaneously
    damage_credit = 0.0
    enemy_kills = 0
    ally_deaths = 0
    damaged: set[int] = set()
    for unit in world.units:
        if not unit.alive:
            continue
        d = dmg_total.get(unit.uid, 0.0)
        h = heal_in.get(unit.uid, 0.0)
        if d > 0.0:
            damaged.add(unit.uid)
            spill = max(0.0, d - unit.shield)
            unit.shield = max(0.0, unit.shield - d)
            unit.health = unit.health - spill
        if h > 0.0:
            unit.health = unit.health + h
        unit.health = min(unit.spec.max_health, max(0.0, unit.health))
        if unit.team == Team.ENEMY and unit.uid in dmg_by_ally:
            damage_credit += min(dmg_by_ally[unit.uid], pre_pool[unit.uid])

    for bomber in suicides:
        bomber.health = 0.0
        bomber.shield = 0.0

    for unit in world.units:
        if unit.alive and unit.health <= 0.0:
            unit.health = 0.0
            unit.alive = False
            if unit.team == Team.ENEMY:
                enemy_kills += 1
            else:
                ally_deaths += 1

    # housekeeping
    for unit in world.units:
        if not unit.alive:
            continue
        if unit.cooldown_remaining > 0:
            unit.cooldown_remaining -= 1
        if unit.uid in damaged:
            unit.steps_since_damaged = 0
        else:
            unit.steps_since_damaged = min(unit.steps_since_damaged + 1, 10 ** 9)
            if (world.shield_regen_enabled and unit.spec.max_shield > 0
                    and unit.steps_since_damaged >= world.shield_regen_delay):
                unit.shield = min(unit.spec.max_shield,
                                  unit.shield + world.shield_regen_rate)
        if unit.spec.is_healer:
            unit.energy = min(unit.spec.max_energy, unit.energy + unit.spec.energy_regen)
    world.t += 1

    return StepOutcome(damage_credit, enemy_kills, ally_deaths, world)


# ---------------------------------------------------------------------------
# episode start

def engine_reset(scenario, seed: int, stats: dict[str, UnitTypeSpec] | None = None) -> WorldState:
    """Deterministic initial world for (scenario, seed).

    Spawn jitter (if configured) is drawn from the seed and rejected onto
    walkable same-height cells; the base spawn itself must be walkable.
    """
    from .stats import default_stat_table

    if stats is None:
        stats = default_stat_table()
    terrain = scenario.build_terrain()
    rng = np.random.default_rng(seed)
    units: list[Unit] = []
    uid = 0
    for team, roster in ((Team.ALLY, scenario.ally_units), (Team.ENEMY, scenario.enemy_units)):
        for type_id, (sx, sy) in roster:
            if type_id not in stats:
                raise ConfigError(f"scenario {scenario.name!r}: unknown unit type {type_id!r}")
            if not terrain.is_walkable(sx, sy):
                raise ConfigError(
                    f"scenario {scenario.name!r}: spawn ({sx}, {sy}) is unwalkable")
            x, y = sx, sy
            if scenario.spawn_jitter > 0:
                base_height = terrain.height_at(sx, sy)
                for _ in range(20):
                    cx = sx + rng.uniform(-scenario.spawn_jitter, scenario.spawn_jitter)
                    cy = sy + rng.uniform(-scenario.spawn_jitter, scenario.spawn_jitter)
                    if terrain.is_walkable(cx, cy) and terrain.height_at(cx, cy) == base_height:
                        x, y = cx, cy
                        break
            units.append(Unit.fresh(uid, team, stats[type_id], (x, y)))
            uid += 1
    world = WorldState(units, len(scenario.ally_units), len(scenario.enemy_units),
                       terrain, t=0, shoot_range=scenario.env.shoot_range,
                       shield_regen_enabled=scenario.shield_regen_enabled,
                       shield_regen_delay=scenario.shield_regen_delay,
                       shield_regen_rate=scenario.shield_regen_rate)
    return world


# ---------------------------------------------------------------------------
# intent log (replay support)

def encode_intent(intent: EngineIntent) -> list:
    if intent.kind == "move":
        return ["move", intent.direction]
    if intent.kind == "move_vec":
        return ["move_vec", intent.vec[0], intent.vec[1]]
    if intent.kind in ("attack", "heal"):
        return [intent.kind, intent.target_uid]
    return [intent.kind]


def decode_intent(rec: list) -> EngineIntent:
    kind = rec[0]
    if kind == "move":
        return EngineIntent.move(int(rec[1]))
    if kind == "move_vec":
        return EngineIntent.move_vec(float(rec[1]), float(rec[2]))
    if kind == "attack":
        return EngineIntent.attack(int(rec[1]))
    if kind == "heal":
        return EngineIntent.heal(int(rec[1]))
    if kind == "stop":
        return EngineIntent.stop()
    if kind == "none":
        return EngineIntent.none()
    raise ValueError(f"bad intent record {rec!r}")


def format_step_log(t: int, ally_intents, enemy_intents) -> str:
    return json.dumps({"t": t,
                       "ally": [encode_intent(i) for i in ally_intents],
                       "enemy": [encode_intent(i) for i in enemy_intents]})


def replay(scenario, seed: int, log_lines, stats=None):
    """Re-run an intent log; yields the world after every resolved step."""
    world = engine_reset(scenario, seed, stats)
    for line in log_lines:
        rec = json.loads(line)
        ally = [decode_intent(r) for r in rec["ally"]]
        enemy = [decode_intent(r) for r in rec["enemy"]]
        yield resolve_step(world, ally, enemy).world
