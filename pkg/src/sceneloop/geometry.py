"""Deterministic geometry: world-space AABBs, overlap tests, occupancy
grids, door-blockage measurement, and navigable-path existence.

Conventions: y is up; footprints live in the xz-plane. Touching boxes do
not collide — overlap must exceed eps on every axis. Grid connectivity
is 4-connected; clearance is handled by inflating occupied cells with a
disc structuring element (strictly-less-than radius, so touching at
exactly the clearance radius is allowed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .scene import Door, Room, SceneGraph, SceneObject, polygon_signed_area

DEFAULT_EPS = 1e-6
DEFAULT_DOOR_DEPTH = 0.6
DEFAULT_CLEARANCE_RADIUS = 0.25
DEFAULT_RASTER = 0.01


class UnknownDoor(KeyError):
    pass


@dataclass(frozen=True)
class AABB:
    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "min", tuple(float(v) for v in self.min))
        object.__setattr__(self, "max", tuple(float(v) for v in self.max))
        if any(a > b for a, b in zip(self.min, self.max)):
            raise ValueError(f"AABB min {self.min} exceeds max {self.max}")

    @property
    def extents(self) -> tuple[float, float, float]:
        return tuple(b - a for a, b in zip(self.min, self.max))

    @property
    def volume(self) -> float:
        ex = self.extents
        return ex[0] * ex[1] * ex[2]

    def footprint(self) -> tuple[float, float, float, float]:
        """(min_x, min_z, max_x, max_z) of the xz projection."""
        return (self.min[0], self.min[2], self.max[0], self.max[2])


@dataclass
class OccupancyGrid:
    """2D raster over the room's bounding rectangle. cells[iz, ix] is True
    when occupied; cell centers are origin + (i + 0.5) * cell_size."""

    origin: tuple[float, float]
    cell_size: float
    cells: np.ndarray

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.cells = np.asarray(self.cells, dtype=bool)

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def cell_of(self, point: tuple[float, float]) -> tuple[int, int]:
        ix = int(math.floor((point[0] - self.origin[0]) / self.cell_size))
        iz = int(math.floor((point[1] - self.origin[1]) / self.cell_size))
        return iz, ix

    def contains_point(self, point: tuple[float, float]) -> bool:
        iz, ix = self.cell_of(point)
        nz, nx = self.cells.shape
        return 0 <= iz < nz and 0 <= ix < nx

    def to_pgm(self) -> str:
        """Plain-text P2 PGM: 0 = occupied, 255 = free."""
        nz, nx = self.cells.shape
        lines = [f"P2", f"{nx} {nz}", "255"]
        for row in self.cells:
            lines.append(" ".join("0" if occ else "255" for occ in row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BlockageResult:
    coverage: float
    passable: bool

    @property
    def blocked(self) -> bool:
        return not self.passable


def world_aabb(o: SceneObject) -> AABB:
    """Tightest axis-aligned box containing the object's local box
    rotated by yaw about its vertical center axis."""
    w, h, d = o.dims
    theta = math.radians(o.yaw)
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    half_x = (c * w + s * d) / 2.0
    half_z = (s * w + c * d) / 2.0
    px, py, pz = o.position
    return AABB(
        (px - half_x, py - h / 2.0, pz - half_z),
        (px + half_x, py + h / 2.0, pz + half_z),
    )


def footprint_corners(o: SceneObject) -> list[tuple[float, float]]:
    """The 4 xz corners of the object's rotated footprint rectangle."""
    w, _, d = o.dims
    theta = math.radians(o.yaw)
    c, s = math.cos(theta), math.sin(theta)
    px, _, pz = o.position
    corners = []
    for sx, sz in ((-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)):
        lx, lz = sx * w, sz * d
        corners.append((px + c * lx - s * lz, pz + s * lx + c * lz))
    return corners


def aabb_overlap(a: AABB, b: AABB, eps: float = DEFAULT_EPS) -> bool:
    """True iff interiors overlap by more than eps on every axis."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    for axis in range(3):
        if min(a.max[axis], b.max[axis]) - max(a.min[axis], b.min[axis]) <= eps:
            return False
    return True


def pairwise_collisions(g: SceneGraph, eps: float = DEFAULT_EPS) -> list[tuple[str, str]]:
    """All unordered object pairs whose world AABBs overlap, sorted
    lexicographically. Sweep-and-prune on x, exact test on survivors."""
    boxes = [(o.id, world_aabb(o)) for o in g.objects]
    order = sorted(range(len(boxes)), key=lambda i: boxes[i][1].min[0])
    pairs: list[tuple[str, str]] = []
    active: list[int] = []
    for idx in order:
        oid, box = boxes[idx]
        active = [j for j in active if boxes[j][1].max[0] - box.min[0] > eps]
        for j in active:
            jid, jbox = boxes[j]
            if aabb_overlap(box, jbox, eps):
                pairs.append((oid, jid) if oid < jid else (jid, oid))
        active.append(idx)
    return sorted(pairs)


# ---------------------------------------------------------------------------
# Point / polygon predicates


def point_in_polygon(p: tuple[float, float], poly, tol: float = 1e-9) -> bool:
    """Ray casting; points within tol of the boundary count as inside."""
    x, z = p
    n = len(poly)
    inside = False
    for i in range(n):
        ax, az = poly[i]
        bx, bz = poly[(i + 1) % n]
        # boundary check
        dx, dz = bx - ax, bz - az
        denom = dx * dx + dz * dz
        if denom > 0:
            t = ((x - ax) * dx + (z - az) * dz) / denom
            t = min(1.0, max(0.0, t))
            if math.hypot(x - (ax + t * dx), z - (az + t * dz)) <= tol:
                return True
        elif math.hypot(x - ax, z - az) <= tol:
            return True
        if (az > z) != (bz > z):
            xi = ax + (z - az) * (bx - ax) / (bz - az)
            if x < xi:
                inside = not inside
    return inside


def points_in_polygon(xs: np.ndarray, zs: np.ndarray, poly, tol: float = 1e-9) -> np.ndarray:
    """Vectorized point_in_polygon over coordinate arrays: even-odd ray
    casting, with points within tol of the boundary counted inside."""
    inside = np.zeros(xs.shape, dtype=bool)
    near = np.zeros(xs.shape, dtype=bool)
    n = len(poly)
    for i in range(n):
        ax, az = poly[i]
        bx, bz = poly[(i + 1) % n]
        dx, dz = bx - ax, bz - az
        denom = dx * dx + dz * dz
        if denom > 0:
            t = np.clip(((xs - ax) * dx + (zs - az) * dz) / denom, 0.0, 1.0)
            near |= (xs - (ax + t * dx)) ** 2 + (zs - (az + t * dz)) ** 2 <= tol * tol
        else:
            near |= (xs - ax) ** 2 + (zs - az) ** 2 <= tol * tol
        if dz != 0:
            crossing = (az > zs) != (bz > zs)
            xi = ax + (zs - az) * dx / dz
            inside ^= crossing & (xs < xi)
    return inside | near


def polygon_centroid(poly) -> tuple[float, float]:
    area = polygon_signed_area(poly)
    if abs(area) < 1e-12:
        xs = [p[0] for p in poly]
        zs = [p[1] for p in poly]
        return (sum(xs) / len(xs), sum(zs) / len(zs))
    cx = cz = 0.0
    n = len(poly)
    for i in range(n):
        x1, z1 = poly[i]
        x2, z2 = poly[(i + 1) % n]
        cross = x1 * z2 - x2 * z1
        cx += (x1 + x2) * cross
        cz += (z1 + z2) * cross
    return (cx / (6.0 * area), cz / (6.0 * area))


def _clip_segment_to_rect(p1, p2, rect):
    """Liang-Barsky; returns (t0, t1) of the clipped parameter range or
    None when the segment misses the rectangle."""
    minx, minz, maxx, maxz = rect
    dx, dz = p2[0] - p1[0], p2[1] - p1[1]
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-dx, p1[0] - minx),
        (dx, maxx - p1[0]),
        (-dz, p1[1] - minz),
        (dz, maxz - p1[1]),
    ):
        if p == 0:
            if q < 0:
                return None
            continue
        r = q / p
        if p < 0:
            if r > t1:
                return None
            t0 = max(t0, r)
        else:
            if r < t0:
                return None
            t1 = min(t1, r)
    if t0 > t1:
        return None
    return t0, t1


def rect_in_polygon(rect: tuple[float, float, float, float], poly, tol: float = 1e-9) -> bool:
    """True when the axis-aligned rectangle lies entirely inside the
    polygon. Boundary contact (flush against a wall) is allowed."""
    minx, minz, maxx, maxz = rect
    corners = ((minx, minz), (maxx, minz), (maxx, maxz), (minx, maxz))
    if not all(point_in_polygon(c, poly, tol) for c in corners):
        return False
    # No polygon edge may pass through the open interior.
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        clipped = _clip_segment_to_rect(a, b, rect)
        if clipped is None:
            continue
        t0, t1 = clipped
        if t1 - t0 < 1e-12:
            continue
        tm = (t0 + t1) / 2.0
        mx = a[0] + tm * (b[0] - a[0])
        mz = a[1] + tm * (b[1] - a[1])
        if (minx + tol < mx < maxx - tol) and (minz + tol < mz < maxz - tol):
            return False
    return True


# ---------------------------------------------------------------------------
# Occupancy grids


def occupancy_grid(g: SceneGraph, cell_size: float) -> OccupancyGrid:
    """A cell is occupied iff its center lies inside any object's
    world-AABB footprint or outside the floor polygon."""
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    poly = g.room.floor_polygon
    xs = [p[0] for p in poly]
    zs = [p[1] for p in poly]
    origin = (min(xs), min(zs))
    nx = max(1, math.ceil((max(xs) - origin[0]) / cell_size - 1e-9))
    nz = max(1, math.ceil((max(zs) - origin[1]) / cell_size - 1e-9))

    cx = origin[0] + (np.arange(nx) + 0.5) * cell_size
    cz = origin[1] + (np.arange(nz) + 0.5) * cell_size
    gx, gz = np.meshgrid(cx, cz)  # shape (nz, nx)

    occupied = ~points_in_polygon(gx, gz, poly)
    for o in g.objects:
        fminx, fminz, fmaxx, fmaxz = world_aabb(o).footprint()
        occupied |= (gx >= fminx) & (gx <= fmaxx) & (gz >= fminz) & (gz <= fmaxz)
    return OccupancyGrid(origin=origin, cell_size=cell_size, cells=occupied)


def _disc_structure(radius_cells: float) -> np.ndarray:
    """Disc structuring element with strict radius: offsets at exactly
    radius_cells stay outside (touching is not blocking)."""
    r = int(math.ceil(radius_cells))
    if r <= 0 or radius_cells <= 0:
        return np.ones((1, 1), dtype=bool)
    di, dj = np.mgrid[-r : r + 1, -r : r + 1]
    return (di * di + dj * dj) < radius_cells * radius_cells - 1e-12


def inflate_occupied(cells: np.ndarray, radius_cells: float) -> np.ndarray:
    """Grow occupied cells by a disc of the given radius (in cells)."""
    structure = _disc_structure(radius_cells)
    if structure.shape == (1, 1):
        return cells.copy()
    return ndimage.binary_dilation(cells, structure=structure)


def _connected(free: np.ndarray, start: tuple[int, int], goal: tuple[int, int]) -> bool:
    if not free[start] or not free[goal]:
        return False
    labels, _ = ndimage.label(free, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    return labels[start] == labels[goal]


def path_exists(
    grid: OccupancyGrid,
    start: tuple[float, float],
    goal: tuple[float, float],
    clearance_radius: float = 0.0,
) -> bool:
    """True iff a 4-connected path of free cells joins the cells holding
    start and goal after inflating occupied cells by clearance_radius."""
    if not grid.contains_point(start) or not grid.contains_point(goal):
        raise ValueError("start and goal must lie inside the grid bounds")
    inflated = inflate_occupied(grid.cells, clearance_radius / grid.cell_size)
    return _connected(~inflated, grid.cell_of(start), grid.cell_of(goal))


# ---------------------------------------------------------------------------
# Door access regions and blockage


def wall_frame(room: Room, door: Door) -> tuple[tuple[float, float], tuple[float, float]]:
    """Unit vectors (u, n): u along the wall, n the interior normal.

    The floor polygon winds counter-clockwise, so the interior lies to
    the left of each directed wall edge."""
    a, b = room.wall_segment(door.wall_index)
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    u = ((b[0] - a[0]) / length, (b[1] - a[1]) / length)
    n = (-u[1], u[0])
    return u, n


def door_access_region(
    room: Room, door: Door, depth: float = DEFAULT_DOOR_DEPTH
) -> tuple[tuple[float, float], ...]:
    """Rectangle of the door's width and the given depth, flush against
    the wall on the interior side. Corners ordered: wall-side along u,
    then interior-side back."""
    if depth <= 0:
        raise ValueError("depth must be positive")
    u, n = wall_frame(room, door)
    cx, cz = door.center
    hw = door.width / 2.0
    c0 = (cx - hw * u[0], cz - hw * u[1])
    c1 = (cx + hw * u[0], cz + hw * u[1])
    c2 = (c1[0] + depth * n[0], c1[1] + depth * n[1])
    c3 = (c0[0] + depth * n[0], c0[1] + depth * n[1])
    return (c0, c1, c2, c3)


def door_approach_point(
    room: Room, door: Door, depth: float = DEFAULT_DOOR_DEPTH
) -> tuple[float, float]:
    """Interior point at the far edge of the door's access region."""
    _, n = wall_frame(room, door)
    return (door.center[0] + depth * n[0], door.center[1] + depth * n[1])


def _region_raster(g: SceneGraph, door: Door, depth: float, raster: float):
    """Occupancy over the access region in wall-local coordinates.

    Returns (occupied[nd, nw], nd, nw) with rows along depth (away from
    the wall) and columns along the wall."""
    u, n = wall_frame(g.room, door)
    cx, cz = door.center
    hw = door.width / 2.0
    ox, oz = cx - hw * u[0], cz - hw * u[1]  # wall-side lateral origin
    nw = max(1, round(door.width / raster))
    nd = max(1, round(depth / raster))

    lat = (np.arange(nw) + 0.5) * raster  # along u
    dep = (np.arange(nd) + 0.5) * raster  # along n
    # cell center = origin + lat*u + dep*n
    wx = ox + lat[None, :] * u[0] + dep[:, None] * n[0]
    wz = oz + lat[None, :] * u[1] + dep[:, None] * n[1]

    occupied = np.zeros((nd, nw), dtype=bool)
    for o in g.objects:
        fminx, fminz, fmaxx, fmaxz = world_aabb(o).footprint()
        occupied |= (wx >= fminx) & (wx <= fmaxx) & (wz >= fminz) & (wz <= fmaxz)
    return occupied, nd, nw


def door_blocked(
    g: SceneGraph,
    door_id: str,
    depth: float = DEFAULT_DOOR_DEPTH,
    clearance_radius: float = DEFAULT_CLEARANCE_RADIUS,
    raster: float = DEFAULT_RASTER,
) -> BlockageResult:
    """Measure obstruction of the door's access region.

    coverage is the fraction of raster cells covered by object
    footprints. The region is passable when a disc of clearance_radius
    can cross it laterally (from one end of the region to the other)
    through free cells while staying inside the region's depth band.
    """
    if depth <= 0 or clearance_radius <= 0 or raster <= 0:
        raise ValueError("depth, clearance_radius, and raster must be positive")
    try:
        door = g.room.door(door_id)
    except KeyError:
        raise UnknownDoor(door_id) from None

    occupied, nd, nw = _region_raster(g, door, depth, raster)
    coverage = float(occupied.sum()) / occupied.size

    # Disc centers must keep the disc inside the depth band ...
    dep_centers = (np.arange(nd) + 0.5) * raster
    band = (dep_centers >= clearance_radius - 1e-9) & (
        dep_centers <= depth - clearance_radius + 1e-9
    )
    if not band.any():
        return BlockageResult(coverage=coverage, passable=False)
    # ... and clear of obstacles by more than the clearance radius.
    admissible = ~inflate_occupied(occupied, clearance_radius / raster)
    admissible &= band[:, None]

    start_col = admissible[:, 0]
    goal_col = admissible[:, -1]
    if not start_col.any() or not goal_col.any():
        return BlockageResult(coverage=coverage, passable=False)
    labels, _ = ndimage.label(
        admissible, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    )
    start_labels = set(labels[:, 0][start_col].tolist())
    goal_labels = set(labels[:, -1][goal_col].tolist())
    passable = bool(start_labels & goal_labels)
    return BlockageResult(coverage=coverage, passable=passable)
