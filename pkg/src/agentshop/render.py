"""SVG and ASCII renderings of a world, its semantic map and a trajectory.

Output bytes depend only on the inputs: coordinates are printed with a fixed
number of decimals and elements are emitted in a fixed order.
"""

from __future__ import annotations

import math
from html import escape

from agentshop.semantic import SemanticMap
from agentshop.sim.config import WorldConfig

SCALE = 40.0  # pixels per metre
MARGIN = 1.0  # metres around the free-space bounding box


def _bounds(config: WorldConfig, points: list[tuple[float, float]]) -> tuple[float, float, float, float]:
    xs = [v for r in config.corridors for v in (r.xmin, r.xmax)] + [p[0] for p in points]
    ys = [v for r in config.corridors for v in (r.ymin, r.ymax)] + [p[1] for p in points]
    if not xs:
        xs, ys = [config.start.x - 2, config.start.x + 2], [config.start.y - 2, config.start.y + 2]
    return min(xs) - MARGIN, min(ys) - MARGIN, max(xs) + MARGIN, max(ys) + MARGIN


def thin(points: list[tuple[float, float]], step: float = 0.05) -> list[tuple[float, float]]:
    """Drop points closer than ``step`` to the last kept one; the final point is kept."""
    if not points:
        return []
    kept = [points[0]]
    for p in points[1:]:
        if math.hypot(p[0] - kept[-1][0], p[1] - kept[-1][1]) >= step:
            kept.append(p)
    if kept[-1] != points[-1]:
        kept.append(points[-1])
    return kept


def render_svg(config: WorldConfig, m: SemanticMap, trajectory: list[tuple[float, float]]) -> str:
    trajectory = thin(trajectory)
    x0, y0, x1, y1 = _bounds(config, trajectory)
    width, height = (x1 - x0) * SCALE, (y1 - y0) * SCALE

    def px(x: float) -> str:
        return f"{(x - x0) * SCALE:.1f}"

    def py(y: float) -> str:
        return f"{(y1 - y) * SCALE:.1f}"

    def rect(r, cls: str) -> str:
        return (
            f'<rect class="{cls}" x="{px(r.xmin)}" y="{py(r.ymax)}" '
            f'width="{(r.xmax - r.xmin) * SCALE:.1f}" height="{(r.ymax - r.ymin) * SCALE:.1f}"/>'
        )

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" viewBox="0 0 {width:.1f} {height:.1f}">',
        "<style>.free{fill:#f4f4f4}.store{fill:#cfe3ff}.pickup{fill:#d6f5d6}.wall{stroke:#222;stroke-width:3}"
        ".path{fill:none;stroke:#d33;stroke-width:2}.junction{fill:#f90;stroke:#222}"
        ".label{font:11px monospace;fill:#222}</style>",
        f'<rect x="0" y="0" width="{width:.1f}" height="{height:.1f}" fill="#fff"/>',
    ]
    out += [rect(r, "free") for r in config.corridors]
    for s in config.stores:
        out.append(rect(s.interior, "store"))
        cx, cy = s.interior.center
        out.append(f'<text class="label" x="{px(cx)}" y="{py(cy)}" text-anchor="middle">{escape(s.category)}</text>')
    if config.pickup_zone is not None:
        out.append(rect(config.pickup_zone, "pickup"))
        cx, cy = config.pickup_zone.center
        out.append(f'<text class="label" x="{px(cx)}" y="{py(cy)}" text-anchor="middle">pickup</text>')
    for xa, ya, xb, yb in config.walls.segments:
        out.append(f'<line class="wall" x1="{px(xa)}" y1="{py(ya)}" x2="{px(xb)}" y2="{py(yb)}"/>')
    if len(trajectory) > 1:
        pts = " ".join(f"{px(x)},{py(y)}" for x, y in trajectory)
        out.append(f'<polyline class="path" points="{pts}"/>')
    for r in m:
        x, y = r.pose.x, r.pose.y
        out.append(f'<circle class="junction" cx="{px(x)}" cy="{py(y)}" r="6"/>')
        hx, hy = x + 0.5 * math.cos(r.pose.yaw), y + 0.5 * math.sin(r.pose.yaw)
        out.append(f'<line class="wall" x1="{px(x)}" y1="{py(y)}" x2="{px(hx)}" y2="{py(hy)}"/>')
        lines = [r.id] + list(r.poi_pairs)
        for i, text in enumerate(lines):
            out.append(f'<text class="label" x="{(x - x0) * SCALE + 10:.1f}" y="{(y1 - y) * SCALE - 4 + 12 * i:.1f}">{escape(text)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_ascii(config: WorldConfig, m: SemanticMap, trajectory: list[tuple[float, float]], cell: float = 0.25) -> str:
    """Coarse top-down grid: '#' blocked, '.' free, 'S' store, 'P' pickup, '*' path, 'J' junction, 'R' robot."""
    x0, y0, x1, y1 = _bounds(config, trajectory)
    nx = int(math.ceil((x1 - x0) / cell))
    ny = int(math.ceil((y1 - y0) / cell))
    walls = config.walls
    grid = []
    for j in range(ny):
        y = y1 - (j + 0.5) * cell
        row = []
        for i in range(nx):
            x = x0 + (i + 0.5) * cell
            ch = "." if walls.is_free(x, y) else "#"
            if ch == "." and any(s.interior.contains(x, y) for s in config.stores):
                ch = "S"
            if ch == "." and config.pickup_zone is not None and config.pickup_zone.contains(x, y):
                ch = "P"
            row.append(ch)
        grid.append(row)

    def put(x: float, y: float, ch: str) -> None:
        i = int((x - x0) / cell)
        j = int((y1 - y) / cell)
        if 0 <= i < nx and 0 <= j < ny:
            grid[j][i] = ch

    for x, y in trajectory:
        put(x, y, "*")
    for r in m:
        put(r.pose.x, r.pose.y, "J")
    if trajectory:
        put(*trajectory[-1], "R")
    return "\n".join("".join(row) for row in grid) + "\n"
