"""Scenario registry and file format.

A scenario file is INI-style text with four sections. Field names are frozen:

  [meta]     name (optional, defaults to the file stem), episode_limit,
             difficulty (easy | hard | super_hard), spawn_jitter,
             shield_regen (bool), regen_delay, regen_rate
  [env]      optional EnvConfig overrides (sight_range, shoot_range,
             reward_mode, reward_kill_bonus, reward_win_bonus,
             reward_scale_target, include_last_actions_in_obs,
             include_terrain_in_obs, agent_id_in_obs, terrain_probe_radius)
  [terrain]  either width / height / cell_size for a flat map, or a
             multi-line ``grid`` ('#' unwalkable, '.' level 0, '1'/'2'
             walkable height levels; first row is north)
  [ally]     multi-line ``units``: one "<type> <x> <y>" per line
  [enemy]    same

Shipped scenario geometry is an analog of the source rosters: spawn
coordinates, choke widths and cliff shapes are chosen to recreate the
tactical pressure, not copied from any map file.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from ..config import EnvConfig
from ..engine.terrain import Terrain

DIFFICULTIES = ("easy", "hard", "super_hard")


class ScenarioError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    name: str
    ally_units: list[tuple[str, tuple[float, float]]]
    enemy_units: list[tuple[str, tuple[float, float]]]
    episode_limit: int
    difficulty: str = "easy"
    env: EnvConfig = field(default_factory=EnvConfig)
    terrain_width: float = 32.0
    terrain_height: float = 32.0
    terrain_cell_size: float = 1.0
    terrain_grid: list[str] | None = None
    spawn_jitter: float = 0.0
    shield_regen_enabled: bool = False
    shield_regen_delay: int = 10
    shield_regen_rate: float = 2.0

    def build_terrain(self) -> Terrain:
        if self.terrain_grid is not None:
            return Terrain.from_grid_text(self.terrain_grid, self.terrain_cell_size)
        return Terrain.flat(self.terrain_width, self.terrain_height, self.terrain_cell_size)

    def validate(self) -> None:
        if not self.ally_units:
            raise ScenarioError(f"{self.name}: ally_units must not be empty")
        if not self.enemy_units:
            raise ScenarioError(f"{self.name}: enemy_units must not be empty")
        if self.episode_limit < 1:
            raise ScenarioError(f"{self.name}: episode_limit must be >= 1")
        if self.difficulty not in DIFFICULTIES:
            raise ScenarioError(f"{self.name}: difficulty {self.difficulty!r} "
                                f"not one of {DIFFICULTIES}")
        self.env.validate()
        terrain = self.build_terrain()
        for side, roster in (("ally", self.ally_units), ("enemy", self.enemy_units)):
            for type_id, (x, y) in roster:
                if not terrain.is_walkable(x, y):
                    raise ScenarioError(
                        f"{self.name}: {side} spawn ({x}, {y}) is unwalkable")
        margin = self.env.shoot_range + 2.0 * self.spawn_jitter
        closest = min(
            math.hypot(ax - ex, ay - ey)
            for _, (ax, ay) in self.ally_units
            for _, (ex, ey) in self.enemy_units)
        if closest <= margin:
            raise ScenarioError(
                f"{self.name}: armies spawn {closest:.2f} apart, inside the "
                f"shoot range margin {margin:.2f}")

    def is_symmetric(self) -> bool:
        comp = lambda roster: sorted(t for t, _ in roster)
        return comp(self.ally_units) == comp(self.enemy_units)


def _parse_units(raw: str, section: str, source: str):
    units = []
    for line in raw.strip().splitlines():
        parts = line.split()
        if len(parts) != 3:
            raise ScenarioError(f"{source}: [{section}] bad unit line {line!r} "
                                f"(want '<type> <x> <y>')")
        units.append((parts[0], (float(parts[1]), float(parts[2]))))
    return units


_META_KEYS = {"name", "episode_limit", "difficulty", "spawn_jitter",
              "shield_regen", "regen_delay", "regen_rate"}
_TERRAIN_KEYS = {"width", "height", "cell_size", "grid"}

_ENV_BOOL = {"include_last_actions_in_obs", "include_terrain_in_obs", "agent_id_in_obs"}
_ENV_STR = {"reward_mode"}


def parse_scenario(text: str, source: str = "<string>", default_name: str = "") -> ScenarioConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioError(f"{source}: {exc}") from exc
    for required in ("meta", "terrain", "ally", "enemy"):
        if not parser.has_section(required):
            raise ScenarioError(f"{source}: missing [{required}] section")

    meta = parser["meta"]
    for key in meta:
        if key not in _META_KEYS:
            raise ScenarioError(f"{source}: [meta] unknown key {key!r}")
    if "episode_limit" not in meta:
        raise ScenarioError(f"{source}: [meta] episode_limit is required")

    env = EnvConfig()
    if parser.has_section("env"):
        known = EnvConfig.field_names()
        for key, raw in parser.items("env"):
            if key not in known:
                raise ScenarioError(f"{source}: [env] unknown key {key!r}")
            if key in _ENV_BOOL:
                setattr(env, key, parser.getboolean("env", key))
            elif key in _ENV_STR:
                setattr(env, key, raw.strip())
            else:
                setattr(env, key, float(raw))

    terr = parser["terrain"]
    for key in terr:
        if key not in _TERRAIN_KEYS:
            raise ScenarioError(f"{source}: [terrain] unknown key {key!r}")
    grid = None
    width = height = 32.0
    cell = float(terr.get("cell_size", 1.0))
    if "grid" in terr:
        grid = [row.strip() for row in terr["grid"].strip().splitlines()]
    else:
        width = float(terr.get("width", 32.0))
        height = float(terr.get("height", 32.0))

    cfg = ScenarioConfig(
        name=meta.get("name", default_name or Path(source).stem),
        ally_units=_parse_units(parser["ally"].get("units", ""), "ally", source),
        enemy_units=_parse_units(parser["enemy"].get("units", ""), "enemy", source),
        episode_limit=meta.getint("episode_limit"),
        difficulty=meta.get("difficulty", "easy"),
        env=env,
        terrain_width=width,
        terrain_height=height,
        terrain_cell_size=cell,
        terrain_grid=grid,
        spawn_jitter=meta.getfloat("spawn_jitter", 0.0),
        shield_regen_enabled=meta.getboolean("shield_regen", False),
        shield_regen_delay=meta.getint("regen_delay", 10),
        shield_regen_rate=meta.getfloat("regen_rate", 2.0),
    )
    cfg.validate()
    return cfg


def _data_dir():
    return resources.files("micromarl.scenarios").joinpath("data")


def shipped_names() -> list[str]:
    return sorted(p.name[: -len(".cfg")] for p in _data_dir().iterdir()
                  if p.name.endswith(".cfg"))


def list_scenarios() -> list[tuple[str, str]]:
    """(name, difficulty) for every shipped scenario."""
    out = []
    for name in shipped_names():
        cfg = load_scenario(name)
        out.append((name, cfg.difficulty))
    return out


def load_scenario(name_or_path) -> ScenarioConfig:
    """Load a shipped scenario by name, or any scenario file by path."""
    name = str(name_or_path)
    candidate = _data_dir().joinpath(f"{name}.cfg")
    if not name.endswith(".cfg") and candidate.is_file():
        return parse_scenario(candidate.read_text(), source=f"{name}.cfg", default_name=name)
    path = Path(name)
    if path.is_file():
        return parse_scenario(path.read_text(), source=str(path), default_name=path.stem)
    raise ScenarioError(
        f"unknown scenario {name!r}; shipped: {', '.join(shipped_names())}")
