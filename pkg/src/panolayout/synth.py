"""Exact forward model: floor polygon + camera pose -> boundary signal + truth.

This is the oracle the rest of the package is tested against, so it stays
brute force on purpose: every column casts a ray against every polygon edge,
visibility of a vertex is decided by comparing its distance against the
nearest hit along its own ray, and occlusions fall out of silhouette
classification at visible vertices. No acceleration structures, no shortcuts.

Also hosts the seeded fixture-family generators used by the acceptance
experiments (square, rectangle, pentagon, hexagon, l_room, t_room); each
family rejection-samples rooms until the rendered signal is cleanly
detectable (well-separated corners, strong distance jumps at occlusions,
wall slopes safely below the detection thresholds elsewhere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, InputError, RoomLayoutError
from .geometry import (
    CameraModel,
    CornerKind,
    LayoutCorner,
    VisibleLayout,
    point_in_polygon,
    polygon_is_simple,
    polygon_signed_area,
)
from .panorama import ImageGrid, col_to_lon, cyclic_column_distance, lon_to_col

HIT_EPS = 1e-9
VIS_EPS = 1e-6


def _min_edge_distance(point: np.ndarray, polygon: np.ndarray) -> float:
    a = polygon
    e = np.roll(polygon, -1, axis=0) - a
    t = np.clip(((point - a) * e).sum(1) / (e * e).sum(1), 0.0, 1.0)
    closest = a + t[:, None] * e
    return float(np.sqrt(((point - closest) ** 2).sum(1)).min())


@dataclass(frozen=True)
class SyntheticRoom:
    """A simple CCW floor polygon with a camera strictly inside it.

    World frame; the floor is z=0 and the ceiling z=room_height.
    """

    floor_polygon: np.ndarray
    room_height: float
    camera_position: np.ndarray
    camera_height: float = 1.6

    def __post_init__(self):
        poly = np.asarray(self.floor_polygon, dtype=float)
        cam = np.asarray(self.camera_position, dtype=float)
        poly.setflags(write=False)
        cam.setflags(write=False)
        object.__setattr__(self, "floor_polygon", poly)
        object.__setattr__(self, "camera_position", cam)
        if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
            raise InputError("floor_polygon must be an (N>=3, 2) array")
        if not polygon_is_simple(poly):
            raise InputError("floor_polygon is self-intersecting or degenerate")
        if polygon_signed_area(poly) <= 0:
            raise InputError("floor_polygon must be counterclockwise")
        if cam.shape != (2,):
            raise InputError("camera_position must be a 2-vector")
        # the even-odd test alone can classify boundary points as inside
        if not point_in_polygon(cam, poly) or _min_edge_distance(cam, poly) < 1e-9:
            raise InputError("camera_position is not strictly inside the polygon")
        if not 0 < self.camera_height < self.room_height:
            raise InputError(
                f"need 0 < camera_height < room_height, got {self.camera_height}, {self.room_height}"
            )

    def diameter(self) -> float:
        d = self.floor_polygon[:, None, :] - self.floor_polygon[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())


def _hit_params(origin: np.ndarray, dirs: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """(E, C) matrix of ray parameters s to each edge; inf where no hit.

    Edge parameter t lives in the half-open [0, 1) so a ray through a shared
    vertex counts exactly one of the two incident edges. t values within one
    part in 1e9 of an endpoint are snapped onto it first; otherwise a ray
    passing exactly through a vertex can round to t slightly above 1 on the
    incoming edge and slightly below 0 on the outgoing one and miss both.
    """
    a = polygon
    b = np.roll(polygon, -1, axis=0)
    e = b - a
    w = a - origin
    dx, dy = dirs[:, 0][None, :], dirs[:, 1][None, :]
    ex, ey = e[:, 0][:, None], e[:, 1][:, None]
    wx, wy = w[:, 0][:, None], w[:, 1][:, None]
    denom = dx * ey - dy * ex
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (wx * ey - wy * ex) / denom
        t = (wx * dy - wy * dx) / denom
    t = np.where(np.abs(t) < 1e-9, 0.0, t)
    t = np.where(np.abs(t - 1.0) < 1e-9, 1.0, t)
    ok = (np.abs(denom) > 1e-12) & (t >= 0.0) & (t < 1.0) & (s > HIT_EPS)
    return np.where(ok, s, np.inf)


def raycast(room: SyntheticRoom, lons) -> tuple[np.ndarray, np.ndarray]:
    """Nearest wall distance and edge index for each longitude."""
    lons = np.atleast_1d(np.asarray(lons, dtype=float))
    dirs = np.stack([np.cos(lons), np.sin(lons)], axis=1)
    s = _hit_params(room.camera_position, dirs, room.floor_polygon)
    dist = s.min(axis=0)
    if not np.all(np.isfinite(dist)):
        raise GeometryError("a ray escaped the polygon; camera outside or degenerate")
    return dist, s.argmin(axis=0)


@dataclass(frozen=True)
class _VertexView:
    """How one polygon vertex looks from the camera."""

    index: int
    lon: float
    distance: float
    visible: bool
    silhouette: bool  # both incident edges on one side of the camera ray
    near_side_lower_lon: bool  # near wall occupies the lower-longitude side
    far_distance: float  # hit beyond the vertex (silhouettes only), else nan


def _vertex_views(room: SyntheticRoom) -> list[_VertexView]:
    poly = room.floor_polygon
    cam = room.camera_position
    n = len(poly)
    rel = poly - cam
    r = np.sqrt((rel**2).sum(axis=1))
    lons = np.arctan2(rel[:, 1], rel[:, 0])
    dirs = rel / r[:, None]
    s = _hit_params(cam, dirs, poly)
    nearest = s.min(axis=0)
    views = []
    for i in range(n):
        visible = nearest[i] >= r[i] - VIS_EPS
        silhouette = False
        near_lower = False
        far = math.nan
        if visible:
            u = dirs[i]
            a = poly[(i - 1) % n] - poly[i]
            b = poly[(i + 1) % n] - poly[i]
            ca = u[0] * a[1] - u[1] * a[0]
            cb = u[0] * b[1] - u[1] * b[0]
            if abs(ca) < 1e-9 * np.linalg.norm(a) or abs(cb) < 1e-9 * np.linalg.norm(b):
                raise GeometryError(
                    f"camera ray collinear with a wall at vertex {i}; reposition the camera"
                )
            if ca * cb > 0:
                silhouette = True
                near_lower = ca < 0
                beyond = np.where(s[:, i] > r[i] + VIS_EPS, s[:, i], np.inf)
                far = float(beyond.min())
                if not math.isfinite(far):
                    raise GeometryError(f"no wall behind silhouette vertex {i}")
        views.append(
            _VertexView(i, float(lons[i]), float(r[i]), bool(visible), silhouette, near_lower, far)
        )
    return views


def _corner_from_distance(column: float, dist: float, room: SyntheticRoom, kind) -> LayoutCorner:
    return LayoutCorner(
        column,
        math.atan2(room.room_height - room.camera_height, dist),
        -math.atan2(room.camera_height, dist),
        kind,
    )


def truth_layout(room: SyntheticRoom, grid: ImageGrid) -> VisibleLayout:
    """Exact visible layout: visible vertices plus silhouette near/far pairs."""
    units: list[tuple[float, list[LayoutCorner]]] = []
    for view in _vertex_views(room):
        if not view.visible:
            continue
        col = float(lon_to_col(view.lon, grid)) % grid.width
        if view.silhouette:
            near = _corner_from_distance(col, view.distance, room, CornerKind.OCCLUSION_NEAR)
            far = _corner_from_distance(col, view.far_distance, room, CornerKind.OCCLUSION_FAR)
            pair = [near, far] if view.near_side_lower_lon else [far, near]
            units.append((col, pair))
        else:
            units.append((col, [_corner_from_distance(col, view.distance, room, CornerKind.VISIBLE)]))
    units.sort(key=lambda u: u[0])
    corners = [c for _, unit in units for c in unit]
    return VisibleLayout(
        corners, CameraModel(room.camera_height), room.room_height, grid
    )


def corner_bumps(columns, width: int, sigma: float = 2.0) -> np.ndarray:
    """Per-column corner probability: unit Gaussian bumps at the given columns.

    Overlapping bumps combine by max so values stay in [0, 1]. ``sigma=0``
    gives a one-hot at the nearest integer column.
    """
    y_p = np.zeros(width)
    cols = np.arange(width, dtype=float)
    for c in np.atleast_1d(np.asarray(columns, dtype=float)):
        if sigma <= 0:
            y_p[int(round(c)) % width] = 1.0
            continue
        delta = np.abs(cols - (c % width))
        delta = np.minimum(delta, width - delta)
        np.maximum(y_p, np.exp(-0.5 * (delta / sigma) ** 2), out=y_p)
    return y_p


def render_signal(
    room: SyntheticRoom, grid: ImageGrid | None = None, peak_sigma: float = 2.0
):
    """Render the exact boundary signal and its ground-truth visible layout.

    Each column's longitude is ray-cast to the nearest wall at distance d,
    giving y_f = -atan(camera_height / d) and
    y_c = atan((room_height - camera_height) / d); y_p carries a unit bump at
    every visible vertex.
    """
    from .detect import BoundarySignal  # local import: detect depends on geometry

    grid = grid or ImageGrid()
    lons = col_to_lon(np.arange(grid.width), grid)
    dist, _ = raycast(room, lons)
    above = room.room_height - room.camera_height
    y_c = np.arctan2(above, dist)
    y_f = -np.arctan2(room.camera_height, dist)
    truth = truth_layout(room, grid)
    peak_cols = [
        c.column
        for c in truth.corners
        if c.kind is not CornerKind.OCCLUSION_FAR
    ]
    y_p = corner_bumps(peak_cols, grid.width, peak_sigma)
    return BoundarySignal(y_p, y_c, y_f), truth


def layout_boundaries(layout: VisibleLayout, grid: ImageGrid | None = None):
    """Per-column (y_c, y_f) implied by a visible layout's floor polygon.

    Re-renders the layout from its own camera, so occlusion edges (collinear
    with rays) never register as walls.
    """
    grid = grid or layout.grid
    room = SyntheticRoom(
        layout.floor_points(),
        layout.room_height,
        np.zeros(2),
        layout.camera.camera_height,
    )
    lons = col_to_lon(np.arange(grid.width), grid)
    dist, _ = raycast(room, lons)
    y_c = np.arctan2(layout.room_height - layout.camera.camera_height, dist)
    y_f = -np.arctan2(layout.camera.camera_height, dist)
    return y_c, y_f


def perturb_signal(signal, noise_sigma: float, seed: int = 0):
    """Seeded Gaussian noise on both boundary curves; y_p untouched."""
    from .detect import BoundarySignal

    if noise_sigma < 0:
        raise InputError(f"noise_sigma must be >= 0, got {noise_sigma}")
    rng = np.random.default_rng(seed)
    margin = 1e-4
    half_pi = np.pi / 2
    y_c = np.clip(signal.y_c + rng.normal(0.0, noise_sigma, signal.width), margin, half_pi - margin)
    y_f = np.clip(signal.y_f + rng.normal(0.0, noise_sigma, signal.width), -half_pi + margin, -margin)
    return BoundarySignal(signal.y_p, y_c, y_f)


# --- fixture families ---

FIXTURE_FAMILIES = ("square", "rectangle", "pentagon", "hexagon", "l_room", "t_room")

_FAMILY_IDS = {name: i + 1 for i, name in enumerate(FIXTURE_FAMILIES)}
_EXPECTED_PAIRS = {
    "square": 0,
    "rectangle": 0,
    "pentagon": 0,
    "hexagon": 0,
    "l_room": 1,
    "t_room": 2,
}

# detectability margins used by the rejection predicate
_MIN_CORNER_SEP = 20  # columns at width 1024
_MIN_CAMERA_CLEARANCE = 1.05  # meters to nearest wall
_MAX_SMOOTH_STEP = 0.007  # radians/column away from occlusion jumps
_MIN_JUMP_STEP = 0.04  # radians across an occlusion jump (floor curve)
_MIN_JUMP_RATIO = 1.25  # distance ratio across an occlusion jump
_MAX_SMOOTH_RATIO = 1.10  # distance ratio away from jumps


def _rotate(points: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return points @ rot.T


def _sample_square(rng) -> SyntheticRoom:
    half = rng.uniform(2.4, 3.4)
    poly = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    m = half - 1.7
    cam = rng.uniform(-m, m, 2)
    angle = rng.uniform(0, math.pi / 2)
    return SyntheticRoom(
        _rotate(poly, angle), rng.uniform(2.7, 3.4), _rotate(cam[None, :], angle)[0], 1.6
    )


def _sample_rectangle(rng) -> SyntheticRoom:
    hx = rng.uniform(2.6, 3.5)
    hy = rng.uniform(1.9, hx - 0.5)
    poly = np.array([[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]])
    cam = np.array([rng.uniform(-(hx - 1.7), hx - 1.7), rng.uniform(-(hy - 1.7), hy - 1.7)])
    angle = rng.uniform(0, math.pi)
    return SyntheticRoom(
        _rotate(poly, angle), rng.uniform(2.7, 3.4), _rotate(cam[None, :], angle)[0], 1.6
    )


def _sample_ellipse_convex(rng, n: int) -> SyntheticRoom:
    # vertices in angular order on an ellipse are always convex
    a = rng.uniform(2.8, 3.6)
    b = rng.uniform(2.4, 3.1)
    base = np.arange(n) * 2 * math.pi / n
    ang = base + rng.uniform(-0.22, 0.22, n)
    ang = np.sort(ang) + rng.uniform(0, 2 * math.pi)
    poly = np.stack([a * np.cos(ang), b * np.sin(ang)], axis=1)
    poly = _rotate(poly, rng.uniform(0, math.pi))
    cam = rng.uniform(-0.45, 0.45, 2) + poly.mean(axis=0)
    return SyntheticRoom(poly, rng.uniform(2.7, 3.4), cam, 1.6)


def _sample_l_room(rng) -> SyntheticRoom:
    b = rng.uniform(2.7, 3.2)  # bottom arm depth
    c = rng.uniform(2.1, 2.7)  # left column width
    a = c + rng.uniform(3.5, 4.3)  # full width; keeps a camera box right of the column
    d = b + rng.uniform(1.7, 2.7)  # left column full depth
    poly = np.array([[0, 0], [a, 0], [a, b], [c, b], [c, d], [0, d]], dtype=float)
    cam = np.array([rng.uniform(c + 1.6, a - 1.6), rng.uniform(1.15, b - 1.15)])
    return SyntheticRoom(poly, rng.uniform(2.7, 3.4), cam, 1.6)


def _sample_t_room(rng) -> SyntheticRoom:
    w = rng.uniform(7.0, 8.5)  # bar width
    hw = rng.uniform(1.25, 1.6)  # stem half-width
    ws = w / 2 + rng.uniform(-0.4, 0.4)  # stem center
    h1 = rng.uniform(2.7, 3.2)  # stem depth
    h2 = h1 + rng.uniform(1.7, 2.5)  # bar top
    s1, s2 = ws - hw, ws + hw
    poly = np.array(
        [[s1, 0], [s2, 0], [s2, h1], [w, h1], [w, h2], [0, h2], [0, h1], [s1, h1]],
        dtype=float,
    )
    off = hw - 1.15
    cam = np.array([ws + rng.uniform(-off, off), rng.uniform(1.15, h1 - 1.15)])
    return SyntheticRoom(poly, rng.uniform(2.7, 3.4), cam, 1.6)


_SAMPLERS = {
    "square": _sample_square,
    "rectangle": _sample_rectangle,
    "pentagon": lambda rng: _sample_ellipse_convex(rng, 5),
    "hexagon": lambda rng: _sample_ellipse_convex(rng, 6),
    "l_room": _sample_l_room,
    "t_room": _sample_t_room,
}


def _fixture_ok(room: SyntheticRoom, grid: ImageGrid, expected_pairs: int) -> bool:
    """Signal-level detectability check; never consults the detection code."""
    try:
        signal, truth = render_signal(room, grid)
    except RoomLayoutError:
        return False
    pairs = truth.occlusion_pairs()
    if len(pairs) != expected_pairs:
        return False
    w = grid.width
    cols = [c.column for c in truth.corners]
    pair_positions = {i for p in pairs for i in p}
    n = len(cols)
    for i in range(n):
        j = (i + 1) % n
        if i in pair_positions and j in pair_positions and abs(cols[i] - cols[j]) < 1e-6:
            continue
        if cyclic_column_distance(cols[i], cols[j], w) < _MIN_CORNER_SEP:
            return False
    dist = room.camera_height / np.tan(-signal.y_f)
    if dist.min() < _MIN_CAMERA_CLEARANCE:
        return False
    jump_cols = np.array(sorted({cols[p[0]] for p in pairs}), dtype=float)
    near_jump = np.zeros(w, dtype=bool)
    idx = np.arange(w)
    for jc in jump_cols:
        delta = np.abs(idx - jc)
        near_jump |= np.minimum(delta, w - delta) <= 2
    for y in (signal.y_f, signal.y_c):
        step = np.abs(np.roll(y, -1) - y)
        if step[~near_jump].size and step[~near_jump].max() > _MAX_SMOOTH_STEP:
            return False
        if expected_pairs and y is signal.y_f:
            for jc in jump_cols:
                delta = np.abs(idx - jc)
                window = np.minimum(delta, w - delta) <= 2
                if step[window].max() < _MIN_JUMP_STEP:
                    return False
    ratio = np.maximum(dist, np.roll(dist, -1)) / np.minimum(dist, np.roll(dist, -1))
    if ratio[~near_jump].size and ratio[~near_jump].max() > _MAX_SMOOTH_RATIO:
        return False
    for jc in jump_cols:
        delta = np.abs(idx - jc)
        window = np.minimum(delta, w - delta) <= 2
        if ratio[window].max() < _MIN_JUMP_RATIO:
            return False
    return True


def make_fixture(family: str, seed: int, grid: ImageGrid | None = None) -> SyntheticRoom:
    """Deterministic, detectable fixture room for a family and seed."""
    if family not in _SAMPLERS:
        raise InputError(f"unknown fixture family {family!r}; choose from {FIXTURE_FAMILIES}")
    grid = grid or ImageGrid()
    rng = np.random.default_rng([_FAMILY_IDS[family], seed])
    for _ in range(400):
        try:
            room = _SAMPLERS[family](rng)
        except RoomLayoutError:
            continue
        if _fixture_ok(room, grid, _EXPECTED_PAIRS[family]):
            return room
    raise RuntimeError(f"could not sample a detectable {family} fixture for seed {seed}")
