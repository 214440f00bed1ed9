"""Wall geometry derived from a union of axis-aligned free-space rectangles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_EPS = 1e-9


@dataclass(frozen=True, slots=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError(f"degenerate rectangle {self}")

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    @property
    def center(self) -> tuple[float, float]:
        return 0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax)

    def as_list(self) -> list[float]:
        return [self.xmin, self.ymin, self.xmax, self.ymax]


def _covered(rects: tuple[Rect, ...], x: float, y: float) -> bool:
    return any(r.contains(x, y) for r in rects)


def _merge(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1] + _EPS:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def boundary_segments(rects: tuple[Rect, ...]) -> np.ndarray:
    """Return the walls of the free-space union as an (M, 4) array of x0, y0, x1, y1.

    An edge piece is a wall when the point just outside it is not free.
    Segments are emitted in a canonical order so downstream output is stable.
    """
    probe = 1e-6
    # (axis, coordinate, outward sign) -> list of intervals along the other axis
    lines: dict[tuple[str, float, int], list[tuple[float, float]]] = {}
    xs = sorted({v for r in rects for v in (r.xmin, r.xmax)})
    ys = sorted({v for r in rects for v in (r.ymin, r.ymax)})
    for r in rects:
        edges = (
            ("h", r.ymin, -1, r.xmin, r.xmax),
            ("h", r.ymax, +1, r.xmin, r.xmax),
            ("v", r.xmin, -1, r.ymin, r.ymax),
            ("v", r.xmax, +1, r.ymin, r.ymax),
        )
        for axis, coord, sign, lo, hi in edges:
            cuts = [lo] + [c for c in (xs if axis == "h" else ys) if lo < c < hi] + [hi]
            for a, b in zip(cuts[:-1], cuts[1:]):
                m = 0.5 * (a + b)
                px, py = (m, coord + sign * probe) if axis == "h" else (coord + sign * probe, m)
                if not _covered(rects, px, py):
                    lines.setdefault((axis, coord, sign), []).append((a, b))
    out = []
    for (axis, coord, _sign), intervals in sorted(lines.items()):
        for a, b in _merge(intervals):
            out.append((a, coord, b, coord) if axis == "h" else (coord, a, coord, b))
    out.sort()
    return np.asarray(out, dtype=float).reshape(-1, 4)


class WallSet:
    """Vectorised queries against a fixed set of wall segments."""

    def __init__(self, segments: np.ndarray, rects: tuple[Rect, ...] = ()):
        self.segments = np.asarray(segments, dtype=float).reshape(-1, 4)
        self.rects = rects
        self.p = self.segments[:, 0:2]
        self.q = self.segments[:, 2:4]
        self.e = self.q - self.p
        self.len2 = np.maximum(np.einsum("ij,ij->i", self.e, self.e), 1e-18)

    @classmethod
    def from_rects(cls, rects: tuple[Rect, ...]) -> WallSet:
        return cls(boundary_segments(rects), rects)

    @property
    def unbounded(self) -> bool:
        return not self.rects

    def __len__(self) -> int:
        return len(self.segments)

    def is_free(self, x: float, y: float) -> bool:
        return self.unbounded or _covered(self.rects, x, y)

    def distances(self, x: float, y: float) -> np.ndarray:
        if len(self.segments) == 0:
            return np.empty(0)
        w = np.array([x, y]) - self.p
        t = np.clip(np.einsum("ij,ij->i", w, self.e) / self.len2, 0.0, 1.0)
        d = w - t[:, None] * self.e
        return np.sqrt(np.einsum("ij,ij->i", d, d))

    def clearance(self, x: float, y: float) -> float:
        """Distance from the point to the nearest wall (inf without walls)."""
        d = self.distances(x, y)
        return float(d.min()) if d.size else math.inf

    def cast(self, x: float, y: float, angles: np.ndarray, max_range: float) -> np.ndarray:
        """First-hit distance along each world-frame angle, capped at ``max_range``."""
        angles = np.asarray(angles, dtype=float)
        ranges = np.full(angles.shape, float(max_range))
        if len(self.segments) == 0:
            return ranges
        d = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (N, 2)
        w = self.p - np.array([x, y])  # (M, 2)
        denom = d[:, None, 0] * self.e[None, :, 1] - d[:, None, 1] * self.e[None, :, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (w[None, :, 0] * self.e[None, :, 1] - w[None, :, 1] * self.e[None, :, 0]) / denom
            u = (w[None, :, 0] * d[:, None, 1] - w[None, :, 1] * d[:, None, 0]) / denom
        ok = (np.abs(denom) > 1e-12) & (t > _EPS) & (u >= -_EPS) & (u <= 1 + _EPS)
        t = np.where(ok, t, np.inf)
        return np.minimum(ranges, t.min(axis=1))

    def blocks(self, x0: float, y0: float, x1: float, y1: float) -> bool:
        """True when the open segment (x0, y0)-(x1, y1) crosses any wall."""
        if len(self.segments) == 0:
            return False
        d = np.array([x1 - x0, y1 - y0])
        w = self.p - np.array([x0, y0])
        denom = d[0] * self.e[:, 1] - d[1] * self.e[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (w[:, 0] * self.e[:, 1] - w[:, 1] * self.e[:, 0]) / denom
            u = (w[:, 0] * d[1] - w[:, 1] * d[0]) / denom
        hit = (np.abs(denom) > 1e-12) & (t > _EPS) & (t < 1 - _EPS) & (u >= 0) & (u <= 1)
        return bool(hit.any())

    def sweep_limit(self, x: float, y: float, dx: float, dy: float, radius: float) -> float:
        """Largest fraction s in [0, 1] of the displacement that keeps clearance >= radius."""
        span = math.hypot(dx, dy)
        if span == 0.0 or len(self.segments) == 0:
            return 1.0
        near = np.nonzero(self.distances(x, y) < radius + span + 1e-6)[0]
        limit = 1.0
        for i in near:
            interval = _capsule_interval(x, y, dx, dy, self.segments[i], radius)
            if interval is None:
                continue
            enter, leave = interval
            if enter >= 0.0:
                limit = min(limit, enter)
            elif leave > 0.0 and 0.5 * (enter + leave) > 0.0:
                limit = 0.0
        return limit


def _interval_lt(c0: float, c1: float, bound: float) -> tuple[float, float] | None:
    """t-interval where |c0 + t c1| < bound."""
    if c1 == 0.0:
        return (-math.inf, math.inf) if abs(c0) < bound else None
    a, b = (-bound - c0) / c1, (bound - c0) / c1
    return (min(a, b), max(a, b))


def _disk_interval(x, y, dx, dy, cx, cy, r) -> tuple[float, float] | None:
    fx, fy = x - cx, y - cy
    a = dx * dx + dy * dy
    b = 2.0 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - r * r
    disc = b * b - 4 * a * c
    if disc <= 0.0:
        return None
    sq = math.sqrt(disc)
    return ((-b - sq) / (2 * a), (-b + sq) / (2 * a))


def _capsule_interval(x, y, dx, dy, seg, r) -> tuple[float, float] | None:
    """t-interval where the moving point p(t) = (x, y) + t (dx, dy) is within r of the segment."""
    px, py, qx, qy = seg
    ex, ey = qx - px, qy - py
    length = math.hypot(ex, ey)
    pieces = []
    if length > 0.0:
        ux, uy = ex / length, ey / length
        nx, ny = -uy, ux
        along0 = (x - px) * ux + (y - py) * uy
        along1 = dx * ux + dy * uy
        perp = _interval_lt((x - px) * nx + (y - py) * ny, dx * nx + dy * ny, r)
        inside = _interval_lt(along0 - 0.5 * length, along1, 0.5 * length)
        if perp and inside:
            lo, hi = max(perp[0], inside[0]), min(perp[1], inside[1])
            if lo < hi:
                pieces.append((lo, hi))
    for cx, cy in ((px, py), (qx, qy)):
        disk = _disk_interval(x, y, dx, dy, cx, cy, r)
        if disk:
            pieces.append(disk)
    if not pieces:
        return None
    return min(p[0] for p in pieces), max(p[1] for p in pieces)
