import numpy as np
import pytest

from micromarl.engine import Team, Terrain, Unit, WorldState, default_stat_table


def make_world(allies, enemies, width=32.0, height=32.0, shoot_range=6.0,
               regen=False, regen_delay=10, regen_rate=2.0, terrain=None):
    """Hand-built battle state: unit lists are (type_id, (x, y)) tuples."""
    stats = default_stat_table()
    units = []
    uid = 0
    for team, roster in ((Team.ALLY, allies), (Team.ENEMY, enemies)):
        for type_id, pos in roster:
            units.append(Unit.fresh(uid, team, stats[type_id], pos))
            uid += 1
    terr = terrain if terrain is not None else Terrain.flat(width, height)
    return WorldState(units, len(allies), len(enemies), terr,
                      shoot_range=shoot_range, shield_regen_enabled=regen,
                      shield_regen_delay=regen_delay, shield_regen_rate=regen_rate)


@pytest.fixture
def stats():
    return default_stat_table()
