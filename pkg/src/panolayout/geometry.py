"""Boundary latitudes -> 3D points, distance profiles, and layout assembly.

The camera sits at the origin of the floor plan at ``camera_height`` meters
above the floor plane z=0. A floor boundary latitude ``y_f < 0`` determines
the horizontal distance to the wall below the horizon; a ceiling latitude
``y_c > 0`` does the same above it, given a room height. No perpendicularity
constraint between walls is applied anywhere: layouts are general simple
polygons.

Visible layouts carry occlusion pairs: two corners joined by an edge along a
single camera ray, flanking a region whose geometry is hidden from the
camera. Hidden geometry is never completed or invented.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import AssemblyError, EstimationError, GeometryError, InputError
from .panorama import ImageGrid, col_to_lon, cyclic_column_distance

if TYPE_CHECKING:  # pragma: no cover
    from .detect import BoundarySignal


@dataclass(frozen=True)
class CameraModel:
    """Camera height above the floor, meters. The absolute scale of a scene."""

    camera_height: float = 1.6

    def __post_init__(self):
        if not self.camera_height > 0:
            raise InputError(f"camera_height must be > 0, got {self.camera_height}")


class CornerKind(str, enum.Enum):
    VISIBLE = "visible"
    OCCLUSION_NEAR = "occlusion_near"
    OCCLUSION_FAR = "occlusion_far"


OCCLUSION_KINDS = (CornerKind.OCCLUSION_NEAR, CornerKind.OCCLUSION_FAR)


@dataclass(frozen=True)
class LayoutCorner:
    """One wall junction: a real-valued column plus its two boundary latitudes."""

    column: float
    ceil_lat: float
    floor_lat: float
    kind: CornerKind = CornerKind.VISIBLE

    def __post_init__(self):
        if not self.floor_lat < 0 < self.ceil_lat:
            raise GeometryError(
                f"corner needs floor_lat < 0 < ceil_lat, got ({self.floor_lat}, {self.ceil_lat})"
            )


def floor_point(lon: float, floor_lat: float, cam: CameraModel) -> np.ndarray:
    """Project a floor-boundary direction to the floor plane (camera at origin).

    The horizontal distance to the wall is ``camera_height / tan(-floor_lat)``.
    """
    if floor_lat >= 0:
        raise GeometryError(f"floor boundary at lat {floor_lat} is not below the horizon")
    d = cam.camera_height / math.tan(-floor_lat)
    return np.array([d * math.cos(lon), d * math.sin(lon)])


def floor_distance(floor_lat, camera_height: float):
    """Horizontal wall distance from a floor latitude (array-friendly)."""
    return camera_height / np.tan(-np.asarray(floor_lat, dtype=float))


def floor_lat_of_distance(d, camera_height: float):
    """Inverse of :func:`floor_distance`."""
    return -np.arctan2(camera_height, np.asarray(d, dtype=float))


def wall_distance_profile(lats, cam: CameraModel, room_height: float | None = None) -> np.ndarray:
    """Per-column horizontal wall distance from a boundary-latitude profile.

    Floor profiles (all latitudes < 0) use the camera height; ceiling profiles
    (all latitudes > 0) use ``room_height - camera_height`` and require
    ``room_height``. A latitude on the wrong side of the horizon is a
    geometry error naming the offending column.
    """
    lats = np.asarray(lats, dtype=float)
    if lats.ndim != 1 or lats.size == 0:
        raise InputError("latitude profile must be a non-empty 1D array")
    is_floor = np.count_nonzero(lats < 0) >= np.count_nonzero(lats > 0)
    bad = np.flatnonzero(lats >= 0 if is_floor else lats <= 0)
    if bad.size:
        side = "floor" if is_floor else "ceiling"
        raise GeometryError(
            f"{side} latitude on wrong side of horizon at column {bad[0]}"
        )
    if is_floor:
        return cam.camera_height / np.tan(-lats)
    if room_height is None:
        raise InputError("ceiling profile requires room_height")
    eff = room_height - cam.camera_height
    if eff <= 0:
        raise GeometryError(f"room_height {room_height} not above camera")
    return eff / np.tan(lats)


def estimate_room_height(signal: "BoundarySignal", cam: CameraModel) -> float:
    """Camera height plus the median per-column ceiling height above the camera.

    The median resists boundary outliers near occlusions.
    """
    y_c = np.asarray(signal.y_c, dtype=float)
    y_f = np.asarray(signal.y_f, dtype=float)
    valid = (y_f < 0) & (y_c > 0) & np.isfinite(y_f) & np.isfinite(y_c)
    if np.count_nonzero(valid) < 8:
        raise EstimationError(
            f"room height needs >= 8 valid columns, got {np.count_nonzero(valid)}"
        )
    d_floor = cam.camera_height / np.tan(-y_f[valid])
    z_c = d_floor * np.tan(y_c[valid])
    return cam.camera_height + float(np.median(z_c))


# --- small polygon helpers (shared with the synthetic oracle) ---


def polygon_signed_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient(p, q, r):
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def segments_properly_intersect(p1, p2, q1, q2) -> bool:
    """True if the open segments cross or overlap (shared endpoints excluded)."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    # collinear overlap
    def on_seg(a, b, c):
        return (
            min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
            and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12
        )

    for d, a, b, c in ((d1, q1, q2, p1), (d2, q1, q2, p2), (d3, p1, p2, q1), (d4, p1, p2, q2)):
        if d == 0 and on_seg(a, b, c) and not (
            np.allclose(c, a) or np.allclose(c, b)
        ):
            return True
    return False


def polygon_is_simple(points: np.ndarray) -> bool:
    """Brute-force pairwise edge test; fine for layout-sized polygons."""
    n = len(points)
    if n < 3:
        return False
    edges = [(points[i], points[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        if np.allclose(edges[i][0], edges[i][1]):
            return False  # zero-length edge
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex
            if segments_properly_intersect(*edges[i], *edges[j]):
                return False
    return True


def point_in_polygon(point, points: np.ndarray) -> bool:
    """Even-odd crossing test; boundary points may land on either side."""
    x, y = float(point[0]), float(point[1])
    inside = False
    n = len(points)
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        if (y1 <= y) != (y2 <= y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


@dataclass
class VisibleLayout:
    """An ordered cyclic corner list with camera model, room height, and grid.

    Corners are sorted by increasing column; the two corners of an occlusion
    pair share a column (they lie on one camera ray) and are adjacent in the
    list, in the order the boundary traverses them. The floor polygon traced
    through the corners' floor points is simple.
    """

    corners: list[LayoutCorner]
    camera: CameraModel = field(default_factory=CameraModel)
    room_height: float = 3.2
    grid: ImageGrid = field(default_factory=ImageGrid)

    def __post_init__(self):
        if self.room_height <= 0:
            raise GeometryError(f"room_height must be > 0, got {self.room_height}")
        if len(self.corners) < 3:
            raise AssemblyError(f"layout needs >= 3 corners, got {len(self.corners)}")
        self._check_order_and_pairs()
        pts = self.floor_points()
        if not polygon_is_simple(pts):
            raise AssemblyError("floor polygon is self-intersecting or degenerate")

    def _check_order_and_pairs(self):
        n = len(self.corners)
        paired = [False] * n
        for i, c in enumerate(self.corners):
            if not 0 <= c.column < self.grid.width:
                raise AssemblyError(f"corner column {c.column} outside [0, {self.grid.width})")
            if c.kind is CornerKind.VISIBLE or paired[i]:
                continue
            for j in ((i + 1) % n, (i - 1) % n):
                other = self.corners[j]
                if (
                    j != i
                    and other.kind in OCCLUSION_KINDS
                    and other.kind is not c.kind
                    and not paired[j]
                    and abs(c.column - other.column) < 1e-6
                ):
                    paired[i] = paired[j] = True
                    break
            else:
                raise AssemblyError(
                    f"occlusion corner at column {c.column} has no adjacent partner"
                )
        cols = [c.column for c in self.corners]
        for i in range(n - 1):
            if cols[i + 1] < cols[i] - 1e-9:
                raise AssemblyError("corners not sorted by column")
            if cols[i + 1] - cols[i] < 1e-9:
                a, b = self.corners[i], self.corners[i + 1]
                if not (a.kind in OCCLUSION_KINDS and b.kind in OCCLUSION_KINDS):
                    raise AssemblyError(f"duplicate corner column {cols[i]}")
        # near must be closer than far on the shared ray
        for i, c in enumerate(self.corners):
            if c.kind is CornerKind.OCCLUSION_NEAR:
                j = (i + 1) % n
                partner = self.corners[j]
                if partner.kind is not CornerKind.OCCLUSION_FAR:
                    partner = self.corners[i - 1]
                d_near = floor_distance(c.floor_lat, self.camera.camera_height)
                d_far = floor_distance(partner.floor_lat, self.camera.camera_height)
                if d_near >= d_far:
                    raise AssemblyError(
                        f"occlusion pair at column {c.column}: near point not closer than far"
                    )

    def lons(self) -> np.ndarray:
        return col_to_lon(np.array([c.column for c in self.corners]), self.grid)

    def floor_points(self) -> np.ndarray:
        """(N, 2) floor polygon vertices in corner order, camera at origin."""
        return np.array(
            [floor_point(lon, c.floor_lat, self.camera) for lon, c in zip(self.lons(), self.corners)]
        )

    def occlusion_pairs(self) -> list[tuple[int, int]]:
        """Indices (i, j) of adjacent occlusion corners, polygon order."""
        pairs = []
        n = len(self.corners)
        seen = set()
        for i, c in enumerate(self.corners):
            if c.kind in OCCLUSION_KINDS and i not in seen:
                j = (i + 1) % n
                pairs.append((i, j))
                seen.update((i, j))
        return pairs

    def wall_edges(self) -> list[tuple[int, int]]:
        """Corner index pairs of true wall edges (occlusion edges excluded)."""
        occ = {p for p in self.occlusion_pairs()}
        n = len(self.corners)
        return [(i, (i + 1) % n) for i in range(n) if (i, (i + 1) % n) not in occ]

    def floor_area(self) -> float:
        return abs(polygon_signed_area(self.floor_points()))


def _group_units(corners: Sequence[LayoutCorner], width: int):
    """Group a corner sequence into singles and cyclically-adjacent occlusion pairs."""
    n = len(corners)
    units: list[list[LayoutCorner]] = []
    used = [False] * n
    for i, c in enumerate(corners):
        if used[i]:
            continue
        if c.kind is CornerKind.VISIBLE:
            used[i] = True
            units.append([c])
            continue
        partner_idx = None
        for j in ((i + 1) % n, (i - 1) % n):
            o = corners[j]
            if (
                not used[j]
                and j != i
                and o.kind in OCCLUSION_KINDS
                and o.kind is not c.kind
                and cyclic_column_distance(c.column, o.column, width) <= width / 8
            ):
                partner_idx = j
                break
        if partner_idx is None:
            raise InputError(f"unpaired occlusion corner at column {c.column}")
        used[i] = used[partner_idx] = True
        pair = [c, corners[partner_idx]] if partner_idx == (i + 1) % n else [corners[partner_idx], c]
        units.append(pair)
    return units


def _snap_pair(pair: list[LayoutCorner], width: int) -> list[LayoutCorner]:
    """Move both corners of a pair to their mean column so they share a ray."""
    a, b = pair
    ca, cb = a.column % width, b.column % width
    if abs(ca - cb) > width / 2:  # pair straddles the wrap
        if ca < cb:
            ca += width
        else:
            cb += width
    col = ((ca + cb) / 2.0) % width
    return [
        LayoutCorner(col, a.ceil_lat, a.floor_lat, a.kind),
        LayoutCorner(col, b.ceil_lat, b.floor_lat, b.kind),
    ]


def assemble_layout(
    corners: Sequence[LayoutCorner],
    signal: "BoundarySignal",
    cam: CameraModel,
    grid: ImageGrid | None = None,
) -> VisibleLayout:
    """Close a corner sequence into a visible layout.

    Occlusion pairs (which detection returns at slightly different columns)
    are snapped to their shared mean column before projecting, which makes
    every occlusion edge exactly collinear with a camera ray. Room height is
    estimated from the signal. A self-intersecting floor polygon is an
    assembly error.
    """
    grid = grid or ImageGrid(signal.width, signal.width // 2)
    room_height = estimate_room_height(signal, cam)
    units = _group_units(list(corners), grid.width)
    snapped = [
        _snap_pair(u, grid.width) if len(u) == 2 else u for u in units
    ]
    snapped.sort(key=lambda u: u[0].column % grid.width)
    flat = [c for u in snapped for c in u]
    return VisibleLayout(flat, cam, room_height, grid)
