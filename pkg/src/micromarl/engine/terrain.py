"""Grid terrain: walkability, height levels, and the 8-point probe."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class TerrainError(ValueError):
    pass


@dataclass
class Terrain:
    width: float
    height: float
    cell_size: float
    height_map: np.ndarray  # int8 (ny, nx), levels 0..2
    walkable: np.ndarray    # bool (ny, nx)

    def __post_init__(self):
        nx = math.ceil(self.width / self.cell_size)
        ny = math.ceil(self.height / self.cell_size)
        if self.height_map.shape != (ny, nx) or self.walkable.shape != (ny, nx):
            raise TerrainError(
                f"grid shape {self.walkable.shape} != ceil dims ({ny}, {nx})")
        border = np.zeros((ny, nx), dtype=bool)
        border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
        if self.walkable[border].any():
            raise TerrainError("map border cells must be unwalkable")

    @classmethod
    def flat(cls, width: float, height: float, cell_size: float = 1.0) -> "Terrain":
        nx = math.ceil(width / cell_size)
        ny = math.ceil(height / cell_size)
        walk = np.ones((ny, nx), dtype=bool)
        walk[0, :] = walk[-1, :] = walk[:, 0] = walk[:, -1] = False
        return cls(width, height, cell_size, np.zeros((ny, nx), dtype=np.int8), walk)

    @classmethod
    def from_grid_text(cls, rows: list[str], cell_size: float = 1.0) -> "Terrain":
        """Character grid, one row per line, top row = north (highest y).

        ``X`` (or ``#``) unwalkable, ``.`` walkable level 0, ``1``/``2``
        walkable at that height level. Scenario files use ``X`` because
        ``#`` starts an INI comment.
        """
        if not rows:
            raise TerrainError("empty terrain grid")
        nx = len(rows[0])
        if any(len(r) != nx for r in rows):
            raise TerrainError("terrain grid rows differ in length")
        ny = len(rows)
        walk = np.zeros((ny, nx), dtype=bool)
        hmap = np.zeros((ny, nx), dtype=np.int8)
        for r, row in enumerate(rows):
            iy = ny - 1 - r
            for ix, ch in enumerate(row):
                if ch in "#X":
                    continue
                if ch == ".":
                    walk[iy, ix] = True
                elif ch in "12":
                    walk[iy, ix] = True
                    hmap[iy, ix] = int(ch)
                else:
                    raise TerrainError(f"bad terrain char {ch!r} at row {r}, col {ix}")
        return cls(float(nx * cell_size), float(ny * cell_size), cell_size, hmap, walk)

    # -- point queries ------------------------------------------------------
    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return int(x // self.cell_size), int(y // self.cell_size)

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x < self.width and 0.0 <= y < self.height

    def is_walkable(self, x: float, y: float) -> bool:
        if not self.in_bounds(x, y):
            return False
        ix, iy = self.cell_of(x, y)
        return bool(self.walkable[iy, ix])

    def height_at(self, x: float, y: float) -> int:
        if not self.in_bounds(x, y):
            return 0
        ix, iy = self.cell_of(x, y)
        return int(self.height_map[iy, ix])


_SQ2 = 1.0 / math.sqrt(2.0)
# N, NE, E, SE, S, SW, W, NW
PROBE_DIRS = (
    (0.0, 1.0), (_SQ2, _SQ2), (1.0, 0.0), (_SQ2, -_SQ2),
    (0.0, -1.0), (-_SQ2, -_SQ2), (-1.0, 0.0), (-_SQ2, _SQ2),
)


def terrain_probe(terrain: Terrain, pos, radius: float) -> np.ndarray:
    """(height / 2, walkable) pairs for the 8 compass points at ``radius``.

    Order N, NE, E, SE, S, SW, W, NW; points off the map read as (0, 0).
    """
    x0, y0 = float(pos[0]), float(pos[1])
    out = np.zeros(16, dtype=np.float64)
    for i, (dx, dy) in enumerate(PROBE_DIRS):
        x, y = x0 + dx * radius, y0 + dy * radius
        if terrain.in_bounds(x, y):
            out[2 * i] = terrain.height_at(x, y) / 2.0
            out[2 * i + 1] = 1.0 if terrain.is_walkable(x, y) else 0.0
    return out
