"""Battle state: the ordered unit roster plus terrain and step counter."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .terrain import Terrain
from .units import Team, Unit


@dataclass
class WorldState:
    units: list[Unit]          # allies first; index order fixed for the episode
    n_allies: int
    n_enemies: int
    terrain: Terrain
    t: int = 0
    shoot_range: float = 6.0
    shield_regen_enabled: bool = False
    shield_regen_delay: int = 10
    shield_regen_rate: float = 2.0

    def allies(self) -> list[Unit]:
        return self.units[: self.n_allies]

    def enemies(self) -> list[Unit]:
        return self.units[self.n_allies:]

    def alive_count(self, team: Team) -> int:
        group = self.allies() if team == Team.ALLY else self.enemies()
        return sum(1 for u in group if u.alive)

    def effective_attack_range(self, unit: Unit) -> float:
        r = unit.spec.attack_range
        return self.shoot_range if r is None else min(r, self.shoot_range)

    def clone(self) -> "WorldState":
        w = WorldState([u.clone() for u in self.units], self.n_allies,
                       self.n_enemies, self.terrain, self.t, self.shoot_range,
                       self.shield_regen_enabled, self.shield_regen_delay,
                       self.shield_regen_rate)
        return w

    def snapshot_arrays(self) -> dict[str, np.ndarray]:
        """Columnar copy of the mutable unit state (observation building)."""
        n = len(self.units)
        pos = np.empty((n, 2))
        health = np.empty(n)
        shield = np.empty(n)
        energy = np.empty(n)
        cooldown = np.empty(n)
        alive = np.empty(n, dtype=bool)
        last_action = np.empty(n, dtype=np.int64)
        for i, u in enumerate(self.units):
            pos[i] = u.pos
            health[i] = u.health
            shield[i] = u.shield
            energy[i] = u.energy
            cooldown[i] = u.cooldown_remaining
            alive[i] = u.alive
            last_action[i] = u.last_action
        return {"pos": pos, "health": health, "shield": shield, "energy": energy,
                "cooldown": cooldown, "alive": alive, "last_action": last_action}

    def state_equal(self, other: "WorldState") -> bool:
        """Bitwise equality of engine-mutated unit state (replay checks).

        ``last_action`` is caller bookkeeping and is not compared.
        """
        if self.t != other.t or len(self.units) != len(other.units):
            return False
        for a, b in zip(self.units, other.units):
            if (a.uid != b.uid or a.alive != b.alive
                    or a.pos.tobytes() != b.pos.tobytes()
                    or a.health != b.health or a.shield != b.shield
                    or a.energy != b.energy
                    or a.cooldown_remaining != b.cooldown_remaining
                    or a.steps_since_damaged != b.steps_since_damaged):
                return False
        return True
