"""Per-instance combat state."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .stats import UnitTypeSpec


class Team(IntEnum):
    ALLY = 0
    ENEMY = 1


@dataclass
class Unit:
    uid: int
    team: Team
    spec: UnitTypeSpec
    pos: np.ndarray  # float64 (2,)
    health: float
    shield: float
    energy: float
    cooldown_remaining: int = 0
    steps_since_damaged: int = 10 ** 9
    alive: bool = True
    last_action: int = 0

    @classmethod
    def fresh(cls, uid: int, team: Team, spec: UnitTypeSpec, pos) -> "Unit":
        return cls(uid=uid, team=team, spec=spec,
                   pos=np.array(pos, dtype=np.float64),
                   health=spec.max_health, shield=spec.max_shield,
                   energy=spec.max_energy)

    def pool(self) -> float:
        """Remaining shield + health."""
        return self.shield + self.health

    def clone(self) -> "Unit":
        u = Unit(self.uid, self.team, self.spec, self.pos.copy(), self.health,
                 self.shield, self.energy, self.cooldown_remaining,
                 self.steps_since_damaged, self.alive, self.last_action)
        return u


def distance(a: Unit, b: Unit) -> float:
    d = a.pos - b.pos
    return float(np.hypot(d[0], d[1]))


def in_range(a: Unit, b: Unit, rng: float) -> bool:
    """True iff both units are alive and within ``rng`` (inclusive)."""
    return a.alive and b.alive and distance(a, b) <= rng
