"""Schematic 2D scene views: top-down SVG floor plans, occupancy
rasters (PGM), and action-trajectory overlays.

All renders are pure functions of their inputs. Colors derive from a
stable hash of (palette seed, object id), never from iteration order, so
documents are byte-identical across runs.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

from . import geometry
from .editenv import EpisodeLog, moved_positions, replay
from .scene import SceneGraph

_MARGIN_PX = 20.0


@dataclass
class RenderOptions:
    scale: float = 50.0  # pixels per meter
    show_labels: bool = True
    show_doors: bool = True
    highlight_ids: list[str] = field(default_factory=list)
    palette_seed: int = 0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def object_color(palette_seed: int, object_id: str) -> str:
    digest = hashlib.md5(f"{palette_seed}:{object_id}".encode("utf-8")).digest()
    hue = int.from_bytes(digest[:2], "big") % 360
    return f"hsl({hue}, 65%, 72%)"


class _Canvas:
    """World-to-pixel mapping with +z up in the image."""

    def __init__(self, g: SceneGraph, scale: float):
        xs = [p[0] for p in g.room.floor_polygon]
        zs = [p[1] for p in g.room.floor_polygon]
        self.min_x, self.max_z = min(xs), max(zs)
        self.scale = scale
        self.width = (max(xs) - min(xs)) * scale + 2 * _MARGIN_PX
        self.height = (max(zs) - min(zs)) * scale + 2 * _MARGIN_PX

    def to_px(self, p: tuple[float, float]) -> tuple[float, float]:
        return (
            (p[0] - self.min_x) * self.scale + _MARGIN_PX,
            (self.max_z - p[1]) * self.scale + _MARGIN_PX,
        )

    def points_attr(self, pts) -> str:
        return " ".join(
            f"{_fmt(x)},{_fmt(y)}" for x, y in (self.to_px(p) for p in pts)
        )


def _door_elements(g: SceneGraph, canvas: _Canvas) -> list[str]:
    out = []
    exits = set(g.exits)
    for d in g.room.doors:
        u, n = geometry.wall_frame(g.room, d)
        hw = d.width / 2.0
        a = (d.center[0] - hw * u[0], d.center[1] - hw * u[1])
        b = (d.center[0] + hw * u[0], d.center[1] + hw * u[1])
        ax, ay = canvas.to_px(a)
        bx, by = canvas.to_px(b)
        out.append(
            f'<line id="{d.id}" x1="{_fmt(ax)}" y1="{_fmt(ay)}" x2="{_fmt(bx)}" y2="{_fmt(by)}"'
            f' stroke="#ffffff" stroke-width="6"/>'
        )
        # quarter-circle swing arc from the hinge at corner a
        tip = (a[0] + d.width * n[0], a[1] + d.width * n[1])
        tx, ty = canvas.to_px(tip)
        r = d.width * canvas.scale
        out.append(
            f'<path d="M {_fmt(bx)} {_fmt(by)} A {_fmt(r)} {_fmt(r)} 0 0 1 {_fmt(tx)} {_fmt(ty)}"'
            f' fill="none" stroke="#999999" stroke-width="1" stroke-dasharray="3,3"/>'
        )
        if d.id in exits:
            mx, my = canvas.to_px(geometry.door_approach_point(g.room, d, 0.25))
            out.append(
                f'<text id="exit_{d.id}" x="{_fmt(mx)}" y="{_fmt(my)}" font-size="10"'
                f' font-family="monospace" fill="#007700" text-anchor="middle">EXIT</text>'
            )
    return out


def _object_elements(g: SceneGraph, opts: RenderOptions, canvas: _Canvas) -> list[str]:
    out = []
    highlights = set(opts.highlight_ids)
    for o in g.objects:
        corners = geometry.footprint_corners(o)
        color = object_color(opts.palette_seed, o.id)
        stroke = "#cc2200" if o.id in highlights else "#333333"
        stroke_w = "2.5" if o.id in highlights else "1"
        out.append(
            f'<polygon id="{o.id}" class="obj" points="{canvas.points_attr(corners)}"'
            f' fill="{color}" stroke="{stroke}" stroke-width="{stroke_w}"/>'
        )
        if opts.show_labels:
            cx, cy = canvas.to_px((o.position[0], o.position[2]))
            out.append(
                f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" font-size="9" font-family="monospace"'
                f' fill="#111111" text-anchor="middle">{o.id}</text>'
            )
    return out


def render_topdown(g: SceneGraph, opts: RenderOptions | None = None) -> str:
    """Top-down SVG: floor polygon, rotated object footprints, door arcs,
    and exit markers. Element ids equal object ids."""
    opts = opts or RenderOptions()
    canvas = _Canvas(g, opts.scale)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(canvas.width)}"'
        f' height="{_fmt(canvas.height)}" viewBox="0 0 {_fmt(canvas.width)} {_fmt(canvas.height)}">',
        f'<rect width="{_fmt(canvas.width)}" height="{_fmt(canvas.height)}" fill="#fafafa"/>',
        f'<polygon id="floor" points="{canvas.points_attr(g.room.floor_polygon)}"'
        f' fill="#eeeae4" stroke="#222222" stroke-width="2"/>',
    ]
    if opts.show_doors:
        parts.extend(_door_elements(g, canvas))
    parts.extend(_object_elements(g, opts, canvas))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_occupancy(grid: geometry.OccupancyGrid) -> str:
    """Plain-text P2 PGM, row-major, 0 = occupied, 255 = free."""
    return grid.to_pgm()


def render_trajectory(g0: SceneGraph, log: EpisodeLog, opts: RenderOptions | None = None) -> str:
    """Top-down render of the final scene plus, per moved object, a
    polyline through its accepted positions labeled with step indices."""
    opts = opts or RenderOptions()
    final = replay(g0, log)
    trails = moved_positions(g0, log)
    canvas = _Canvas(final, opts.scale)

    doc = render_topdown(final, opts)
    overlay: list[str] = []
    for object_id in sorted(trails):
        start = g0.get_object(object_id).position
        points: list[tuple[float, float]] = [(start[0], start[2])]
        steps: list[int] = []
        for step, pos in trails[object_id]:
            points.append((pos[0], pos[2]))
            steps.append(step)
        color = object_color(opts.palette_seed, object_id)
        overlay.append(
            f'<polyline id="traj_{object_id}" points="{canvas.points_attr(points)}"'
            f' fill="none" stroke="{color}" stroke-width="2" stroke-dasharray="5,3"/>'
        )
        for (px, pz), step in zip(points[1:], steps):
            x, y = canvas.to_px((px, pz))
            overlay.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="{color}" stroke="#333333"/>'
            )
            overlay.append(
                f'<text x="{_fmt(x + 5)}" y="{_fmt(y - 5)}" font-size="8"'
                f' font-family="monospace" fill="#333333">t{step}</text>'
            )
    return doc.replace("</svg>", "\n".join(overlay) + "\n</svg>") if overlay else doc


def occupancy_ascii(grid: geometry.OccupancyGrid, max_cols: int = 48) -> str:
    """Coarse text view of an occupancy grid for text-only endpoints:
    '#' occupied, '.' free."""
    nz, nx = grid.shape
    stride = max(1, math.ceil(nx / max_cols))
    lines = []
    for iz in range(nz - 1, -1, -stride):  # +z up, like the SVG
        row = grid.cells[iz]
        lines.append(
            "".join(
                "#" if row[ix : ix + stride].any() else "."
                for ix in range(0, nx, stride)
            )
        )
    return "\n".join(lines)
