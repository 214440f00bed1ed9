"""Robot-centred local occupancy grid built from a single range scan."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from functools import lru_cache

import numpy as np

from agentshop.sim.engine import RangeScan
from agentshop.world_model import IDENTITY, Pose2D

DEFAULT_RESOLUTION = 0.05
DEFAULT_EXTENT = 4.0


class Cell(IntEnum):
    UNKNOWN = -1
    FREE = 0
    OCCUPIED = 1


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def sign(self) -> int:
        return 1 if self is Side.LEFT else -1


@dataclass(frozen=True)
class CorridorSlice:
    half_width: float = 0.3
    max_lookahead: float = 1.5

    def __post_init__(self) -> None:
        if self.half_width <= 0 or self.max_lookahead <= 0:
            raise ValueError("slice dimensions must be > 0")


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """``cells[iy, ix]``: ix runs along robot-frame x (forward), iy along y (left)."""

    origin: Pose2D
    resolution: float
    width: int
    height: int
    cells: np.ndarray

    def __post_init__(self) -> None:
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")
        if self.cells.shape != (self.height, self.width):
            raise ValueError("cells shape does not match width x height")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.origin == other.origin
            and self.resolution == other.resolution
            and np.array_equal(self.cells, other.cells)
        )

    @classmethod
    def empty(cls, resolution: float = DEFAULT_RESOLUTION, extent: float = DEFAULT_EXTENT, fill: Cell = Cell.UNKNOWN) -> OccupancyGrid:
        n = int(round(extent / resolution))
        return cls(IDENTITY, resolution, n, n, np.full((n, n), int(fill), dtype=np.int8))

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Forward and lateral coordinates of every cell centre, each (height, width)."""
        return _centers(self.resolution, self.width, self.height)

    def index_of(self, fwd: float, lat: float) -> tuple[int, int]:
        """(iy, ix) of the cell containing a robot-frame point."""
        ix = int(np.floor(fwd / self.resolution + self.width / 2 + 1e-9))
        iy = int(np.floor(lat / self.resolution + self.height / 2 + 1e-9))
        return iy, ix

    def with_cells(self, cells: np.ndarray) -> OccupancyGrid:
        return OccupancyGrid(self.origin, self.resolution, self.width, self.height, cells)

    def mirrored(self) -> OccupancyGrid:
        """Reflect left/right."""
        return self.with_cells(self.cells[::-1, :].copy())

    def to_ascii(self) -> str:
        """One char per cell, top row = leftmost, robot-frame x to the right."""
        chars = {Cell.FREE: ".", Cell.OCCUPIED: "#", Cell.UNKNOWN: "?"}
        lut = np.array([chars[Cell.UNKNOWN], chars[Cell.FREE], chars[Cell.OCCUPIED]])
        rows = lut[self.cells[::-1, :] + 1]
        return "\n".join("".join(r) for r in rows) + "\n"

    @classmethod
    def from_ascii(cls, text: str, resolution: float = DEFAULT_RESOLUTION) -> OccupancyGrid:
        codes = {".": Cell.FREE, "#": Cell.OCCUPIED, "?": Cell.UNKNOWN}
        rows = [line for line in text.splitlines() if line]
        cells = np.array([[int(codes[c]) for c in row] for row in rows], dtype=np.int8)[::-1, :]
        return cls(IDENTITY, resolution, cells.shape[1], cells.shape[0], cells.copy())


@lru_cache(maxsize=8)
def _centers(resolution: float, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    fwd = (np.arange(width) + 0.5 - width / 2) * resolution
    lat = (np.arange(height) + 0.5 - height / 2) * resolution
    f, l = np.meshgrid(fwd, lat)
    f.setflags(write=False)
    l.setflags(write=False)
    return f, l


def build_costmap(
    scan: RangeScan,
    resolution: float = DEFAULT_RESOLUTION,
    extent: float = DEFAULT_EXTENT,
    origin: Pose2D = IDENTITY,
) -> OccupancyGrid:
    """Ray endpoints inside the extent become Occupied, cells traversed before them Free."""
    if len(scan) == 0:
        raise ValueError("empty scan")
    grid = OccupancyGrid.empty(resolution, extent)
    n = grid.width
    cells = grid.cells
    half = extent / 2
    reach = min(float(np.max(scan.ranges)), half * np.sqrt(2.0))
    steps = (np.arange(int(np.ceil(reach / (0.5 * resolution)))) + 0.5) * (0.5 * resolution)
    cos_b, sin_b = np.cos(scan.bearings), np.sin(scan.bearings)

    before = steps[None, :] < scan.ranges[:, None]
    fx = (cos_b[:, None] * steps[None, :])[before]
    fy = (sin_b[:, None] * steps[None, :])[before]
    ix = np.floor(fx / resolution + n / 2 + 1e-9).astype(int)
    iy = np.floor(fy / resolution + n / 2 + 1e-9).astype(int)
    ok = (ix >= 0) & (ix < n) & (iy >= 0) & (iy < n)
    cells[iy[ok], ix[ok]] = Cell.FREE

    hit = scan.ranges < scan.max_range - 1e-9
    ex = cos_b[hit] * scan.ranges[hit]
    ey = sin_b[hit] * scan.ranges[hit]
    ix = np.floor(ex / resolution + n / 2 + 1e-9).astype(int)
    iy = np.floor(ey / resolution + n / 2 + 1e-9).astype(int)
    ok = (ix >= 0) & (ix < n) & (iy >= 0) & (iy < n)
    cells[iy[ok], ix[ok]] = Cell.OCCUPIED
    return OccupancyGrid(origin, resolution, n, n, cells)


def dist_ahead(grid: OccupancyGrid, slice_: CorridorSlice = CorridorSlice()) -> float | None:
    """Smallest forward coordinate of an Occupied cell in the slice; None when clear.

    Unknown cells count as free.
    """
    fwd, lat = grid.centers()
    mask = (
        (grid.cells == Cell.OCCUPIED)
        & (np.abs(lat) <= slice_.half_width + 1e-9)
        & (fwd > 0)
        & (fwd <= slice_.max_lookahead + 1e-9)
    )
    if not mask.any():
        return None
    return float(fwd[mask].min())


def free_side_bias(grid: OccupancyGrid, slice_: CorridorSlice = CorridorSlice()) -> Side:
    """Side with the larger fraction of Free cells ahead of the robot; ties go Left."""
    fwd, lat = grid.centers()
    look = slice_.max_lookahead + 1e-9
    ahead = (fwd > 0) & (fwd <= look) & (np.abs(lat) <= look)
    free = grid.cells == Cell.FREE
    left = ahead & (lat > 0)
    right = ahead & (lat < 0)
    left_mean = free[left].mean() if left.any() else 0.0
    right_mean = free[right].mean() if right.any() else 0.0
    return Side.RIGHT if right_mean > left_mean else Side.LEFT
