"""Environment-facing knobs shared by scenarios and the wrapper."""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass
class EnvConfig:
    sight_range: float = 9.0
    shoot_range: float = 6.0
    reward_mode: str = "shaped"          # shaped | sparse
    reward_kill_bonus: float = 10.0
    reward_win_bonus: float = 200.0
    reward_scale_target: float = 20.0
    include_last_actions_in_obs: bool = False
    include_terrain_in_obs: bool = False
    agent_id_in_obs: bool = True
    terrain_probe_radius: float = 2.0

    def validate(self) -> None:
        if self.sight_range <= self.shoot_range:
            raise ValueError(
                f"sight_range ({self.sight_range}) must exceed shoot_range "
                f"({self.shoot_range}): agents must move before they can fire")
        if self.reward_mode not in ("shaped", "sparse"):
            raise ValueError(f"unknown reward_mode {self.reward_mode!r}")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))
