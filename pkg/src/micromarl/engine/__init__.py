from .core import (
    DIRECTION_NAMES,
    DIRECTION_VECTORS,
    ConfigError,
    EngineError,
    EngineIntent,
    StepOutcome,
    apply_move,
    decode_intent,
    encode_intent,
    engine_reset,
    format_step_log,
    replay,
    resolve_step,
)
from .stats import (
    STATS_ENV_VAR,
    UNIT_KINDS,
    StatTableError,
    UnitTypeSpec,
    default_stat_table,
    load_stat_table,
    parse_stat_table,
)
from .terrain import Terrain, TerrainError, terrain_probe
from .units import Team, Unit, distance, in_range
from .world import WorldState

__all__ = [
    "DIRECTION_NAMES", "DIRECTION_VECTORS", "ConfigError", "EngineError",
    "EngineIntent", "STATS_ENV_VAR", "StatTableError", "StepOutcome", "Team",
    "Terrain", "TerrainError", "UNIT_KINDS", "Unit", "UnitTypeSpec",
    "WorldState", "apply_move", "decode_intent", "default_stat_table",
    "distance", "encode_intent", "engine_reset", "format_step_log",
    "in_range", "load_stat_table", "parse_stat_table", "replay",
    "resolve_step", "terrain_probe",
]
