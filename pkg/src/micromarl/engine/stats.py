"""Unit type definitions and the combat stat table.

Stats ship as a key-value text file (INI sections, one per unit kind) so they
can be overridden without code changes; see ``data/unit_stats.cfg`` for the
schema. The ``MICROMARL_UNIT_STATS`` environment variable points the default
loader at a replacement file.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from importlib import resources

UNIT_KINDS = (
    "marine", "marauder", "medivac", "stalker", "zealot",
    "colossus", "hydralisk", "zergling", "baneling", "spinecrawler",
)

SHIELDED_KINDS = ("stalker", "zealot", "colossus")

STATS_ENV_VAR = "MICROMARL_UNIT_STATS"


class StatTableError(ValueError):
    pass


@dataclass(frozen=True)
class UnitTypeSpec:
    type_id: str
    max_health: float
    max_shield: float = 0.0
    damage_per_hit: float = 0.0
    cooldown_steps: int = 1
    move_speed: float = 0.0
    attack_range: float | None = None  # None: use the environment shoot range
    is_healer: bool = False
    max_energy: float = 0.0
    heal_per_action: float = 0.0
    heal_energy_cost: float = 0.0
    energy_regen: float = 0.0
    is_suicide_splash: bool = False
    splash_radius: float = 0.0
    ignores_cliffs: bool = False
    is_static: bool = False

    def validate(self) -> None:
        if self.type_id not in UNIT_KINDS:
            raise StatTableError(f"unknown unit kind {self.type_id!r}")
        if self.max_health <= 0:
            raise StatTableError(f"{self.type_id}: max_health must be > 0")
        if self.max_shield < 0 or self.damage_per_hit < 0 or self.move_speed < 0:
            raise StatTableError(f"{self.type_id}: negative combat stat")
        if self.cooldown_steps < 1:
            raise StatTableError(f"{self.type_id}: cooldown_steps must be >= 1")
        if self.max_shield > 0 and self.type_id not in SHIELDED_KINDS:
            raise StatTableError(f"{self.type_id}: only {SHIELDED_KINDS} carry shields")
        if self.is_healer and (self.max_energy <= 0 or self.damage_per_hit != 0):
            raise StatTableError(f"{self.type_id}: healers need energy and zero damage")
        if self.is_suicide_splash and self.splash_radius <= 0:
            raise StatTableError(f"{self.type_id}: suicide units need splash_radius > 0")
        if self.is_static and self.move_speed != 0:
            raise StatTableError(f"{self.type_id}: static units cannot move")


_BOOL_FIELDS = ("is_healer", "is_suicide_splash", "ignores_cliffs", "is_static")
_INT_FIELDS = ("cooldown_steps",)
_FLOAT_FIELDS = (
    "max_health", "max_shield", "damage_per_hit", "move_speed", "attack_range",
    "max_energy", "heal_per_action", "heal_energy_cost", "energy_regen",
    "splash_radius",
)


def parse_stat_table(text: str, source: str = "<string>") -> dict[str, UnitTypeSpec]:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise StatTableError(f"{source}: {exc}") from exc
    table: dict[str, UnitTypeSpec] = {}
    for section in parser.sections():
        fields: dict = {"type_id": section}
        for key, raw in parser.items(section):
            if key in _FLOAT_FIELDS:
                fields[key] = float(raw)
            elif key in _INT_FIELDS:
                fields[key] = int(raw)
            elif key in _BOOL_FIELDS:
                fields[key] = parser.getboolean(section, key)
            else:
                raise StatTableError(f"{source}: [{section}] unknown key {key!r}")
        spec = UnitTypeSpec(**fields)
        spec.validate()
        table[section] = spec
    if not table:
        raise StatTableError(f"{source}: no unit sections found")
    return table


def load_stat_table(path) -> dict[str, UnitTypeSpec]:
    with open(path, encoding="utf-8") as f:
        return parse_stat_table(f.read(), source=str(path))


_default_cache: dict[str, UnitTypeSpec] | None = None


def default_stat_table() -> dict[str, UnitTypeSpec]:
    """Packaged defaults, or the ``MICROMARL_UNIT_STATS`` override."""
    global _default_cache
    override = os.environ.get(STATS_ENV_VAR)
    if override:
        return load_stat_table(override)
    if _default_cache is None:
        text = resources.files("micromarl.engine").joinpath("data/unit_stats.cfg").read_text()
        _default_cache = parse_stat_table(text, source="unit_stats.cfg")
    return _default_cache
