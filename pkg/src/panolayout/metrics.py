"""Layout evaluation: area/volume IoU, corner and pixel error, F-scores.

Polygon IoU is rasterized rather than clipped exactly: both polygons land on
one shared grid over their joint bounding box (2048x2048 cells by default)
and cells are tested by center parity. That keeps non-convex polygons with
occlusion notches trivial to handle and the quantization error is far below
the precision anything downstream reports.

Corner-level scores work in pixel space with cyclic column distances, so
every metric here is invariant under rotating both panoramas by the same
number of columns.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree

from .errors import InputError, MetricError
from .geometry import VisibleLayout
from .panorama import ImageGrid, lat_to_row, row_to_lat

THRESHOLDS = (5.0, 10.0, 20.0)

CEILING, WALL, FLOOR = 0, 1, 2


@dataclass(frozen=True)
class MetricReport:
    """All scores for one (prediction, ground truth) pair; column order of the
    aggregate report tables."""

    iou2d: float
    iou3d: float
    corner_error: float
    pixel_error: float
    junction_f: float
    wireframe_f: float
    plane_f: float

    def as_row(self) -> list[float]:
        return [getattr(self, f.name) for f in fields(self)]


def _floor_polygon(x) -> np.ndarray:
    pts = x.floor_points() if isinstance(x, VisibleLayout) else np.asarray(x, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise InputError("polygon must be an (N>=3, 2) array or a layout")
    return pts


def _polygon_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def _raster_mask(poly: np.ndarray, lo, cell, nx: int, ny: int) -> np.ndarray:
    """Even-odd scanline fill: toggle crossing counts per row, then parity."""
    x1, y1 = poly[:, 0][:, None], poly[:, 1][:, None]
    x2 = np.roll(poly[:, 0], -1)[:, None]
    y2 = np.roll(poly[:, 1], -1)[:, None]
    yc = lo[1] + (np.arange(ny) + 0.5) * cell[1]
    crosses = (y1 <= yc) != (y2 <= yc)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x1 + (yc - y1) * (x2 - x1) / (y2 - y1)
    e_idx, r_idx = np.nonzero(crosses)
    cols = np.ceil((xc[e_idx, r_idx] - lo[0]) / cell[0] - 0.5).astype(np.int64)
    cols = np.clip(cols, 0, nx)  # nx = overflow bucket past the last center
    buf = np.zeros((ny, nx + 1), dtype=np.uint8)
    np.add.at(buf, (r_idx, cols), 1)
    return (np.cumsum(buf[:, :nx], axis=1, dtype=np.uint8) & 1).astype(bool)


def _rasterize_pair(poly_a: np.ndarray, poly_b: np.ndarray, resolution: int):
    pts = np.vstack([poly_a, poly_b])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    cell = span / resolution
    ma = _raster_mask(poly_a, lo, cell, resolution, resolution)
    mb = _raster_mask(poly_b, lo, cell, resolution, resolution)
    return ma, mb, float(cell[0] * cell[1])


def iou_2d(a, b, resolution: int = 2048) -> float:
    """Floor-polygon area IoU by shared-grid rasterization."""
    pa, pb = _floor_polygon(a), _floor_polygon(b)
    if _polygon_area(pa) <= 1e-12 or _polygon_area(pb) <= 1e-12:
        raise MetricError("zero-area polygon")
    ma, mb, _ = _rasterize_pair(pa, pb, resolution)
    union = np.count_nonzero(ma | mb)
    if union == 0:
        raise MetricError("polygons rasterized to nothing")
    return np.count_nonzero(ma & mb) / union


def _height_of(x, height) -> float:
    if height is not None:
        return float(height)
    if isinstance(x, VisibleLayout):
        return float(x.room_height)
    raise InputError("bare polygons need an explicit height for volume IoU")


def iou_3d(a, b, height_a: float | None = None, height_b: float | None = None,
           resolution: int = 2048) -> float:
    """Extruded-prism volume IoU; both layouts share the camera at the origin."""
    ha, hb = _height_of(a, height_a), _height_of(b, height_b)
    if ha <= 0 or hb <= 0:
        raise MetricError(f"nonpositive room height: {ha}, {hb}")
    pa, pb = _floor_polygon(a), _floor_polygon(b)
    if _polygon_area(pa) <= 1e-12 or _polygon_area(pb) <= 1e-12:
        raise MetricError("zero-area polygon")
    ma, mb, cell_area = _rasterize_pair(pa, pb, resolution)
    area_inter = np.count_nonzero(ma & mb) * cell_area
    area_a = np.count_nonzero(ma) * cell_area
    area_b = np.count_nonzero(mb) * cell_area
    vol_inter = area_inter * min(ha, hb)
    vol_union = area_a * ha + area_b * hb - vol_inter
    if vol_union <= 0:
        raise MetricError("degenerate volumes")
    return vol_inter / vol_union


def _pixel_distances(p: np.ndarray, q: np.ndarray, width: float | None) -> np.ndarray:
    """(len(p), len(q)) Euclidean pixel distances, columns cyclic if width given."""
    du = np.abs(p[:, 0][:, None] - q[:, 0][None, :])
    if width is not None:
        du = np.minimum(du, width - du)
    dv = p[:, 1][:, None] - q[:, 1][None, :]
    return np.sqrt(du**2 + dv**2)


def _as_corner_points(x, grid: ImageGrid) -> np.ndarray:
    if isinstance(x, VisibleLayout):
        return corner_image_points(x, grid)
    return np.asarray(x, dtype=float).reshape(-1, 2)


def corner_error(
    pred_corners,
    gt_corners,
    grid: ImageGrid | None = None,
    method: str = "hungarian",
    unmatched_penalty: float = 0.1,
) -> float:
    """Mean matched corner distance as a fraction of the image diagonal.

    Accepts layouts or (N, 2) pixel point arrays. One-to-one matching
    (Hungarian by default, greedy selectable); every unmatched corner on
    either side is charged ``unmatched_penalty`` of the diagonal, keeping the
    score defined and monotone under spurious corners.
    """
    if grid is None:
        grid = pred_corners.grid if isinstance(pred_corners, VisibleLayout) else ImageGrid()
    p = _as_corner_points(pred_corners, grid)
    q = _as_corner_points(gt_corners, grid)
    if len(p) == 0 or len(q) == 0:
        raise MetricError("corner sets must be non-empty")
    dist = _pixel_distances(p, q, grid.width)
    if method == "hungarian":
        rows, cols = linear_sum_assignment(dist)
        matched = dist[rows, cols]
    elif method == "greedy":
        matched = np.array(_greedy_match(dist, np.inf))
    else:
        raise InputError(f"unknown matching method {method!r}")
    n_unmatched = (len(p) - len(matched)) + (len(q) - len(matched))
    diag = grid.diagonal
    total = float(matched.sum()) + n_unmatched * unmatched_penalty * diag
    return total / (len(matched) + n_unmatched) / diag


def _greedy_match(dist: np.ndarray, threshold: float) -> list[float]:
    """Ascending-distance one-to-one matching; returns matched distances."""
    order = np.argsort(dist, axis=None, kind="stable")
    used_p = np.zeros(dist.shape[0], dtype=bool)
    used_q = np.zeros(dist.shape[1], dtype=bool)
    out = []
    for k in order:
        i, j = divmod(int(k), dist.shape[1])
        if dist[i, j] > threshold:
            break
        if not used_p[i] and not used_q[j]:
            used_p[i] = used_q[j] = True
            out.append(float(dist[i, j]))
    return out


def _f_score(matched: int, n_pred: int, n_gt: int) -> float:
    if n_pred == 0 and n_gt == 0:
        return 1.0
    if n_pred == 0 or n_gt == 0:
        return 0.0
    precision = matched / n_pred
    recall = matched / n_gt
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def junction_f(
    pred_corners,
    gt_corners,
    grid: ImageGrid | None = None,
    thresholds: Sequence[float] = THRESHOLDS,
) -> float:
    """Corner-matching F-score averaged over the pixel thresholds.

    Accepts layouts or (N, 2) pixel point arrays.
    """
    if grid is None:
        grid = pred_corners.grid if isinstance(pred_corners, VisibleLayout) else ImageGrid()
    p = _as_corner_points(pred_corners, grid)
    q = _as_corner_points(gt_corners, grid)
    if len(p) == 0 and len(q) == 0:
        return 1.0
    if len(p) == 0 or len(q) == 0:
        return 0.0
    dist = _pixel_distances(p, q, grid.width)
    scores = []
    for t in thresholds:
        matched = len(_greedy_match(dist, t))
        scores.append(_f_score(matched, len(p), len(q)))
    return float(np.mean(scores))


def _boundaries_of(x, grid: ImageGrid):
    if isinstance(x, VisibleLayout):
        from .synth import layout_boundaries

        return layout_boundaries(x, grid)
    y_c = np.asarray(x.y_c, dtype=float)
    y_f = np.asarray(x.y_f, dtype=float)
    if len(y_c) != grid.width:
        raise InputError(f"signal width {len(y_c)} does not match grid width {grid.width}")
    return y_c, y_f


def render_semantic(layout_or_signal, grid: ImageGrid | None = None) -> np.ndarray:
    """Per-pixel ceiling/wall/floor labels implied by the boundary curves."""
    if grid is None:
        grid = layout_or_signal.grid if isinstance(layout_or_signal, VisibleLayout) else ImageGrid(
            layout_or_signal.width, layout_or_signal.width // 2
        )
    y_c, y_f = _boundaries_of(layout_or_signal, grid)
    lats = row_to_lat(np.arange(grid.height), grid)
    mask = np.full((grid.height, grid.width), WALL, dtype=np.int8)
    mask[lats[:, None] > y_c[None, :]] = CEILING
    mask[lats[:, None] < y_f[None, :]] = FLOOR
    return mask


def pixel_error(pred_mask: np.ndarray, gt_mask: np.ndarray) -> float:
    """Fraction of pixels whose labels differ."""
    p = np.asarray(pred_mask)
    g = np.asarray(gt_mask)
    if p.shape != g.shape:
        raise InputError(f"mask shapes differ: {p.shape} vs {g.shape}")
    return float(np.mean(p != g))


def corner_image_points(layout: VisibleLayout, grid: ImageGrid | None = None) -> np.ndarray:
    """(2N, 2) pixel positions of every corner's ceiling and floor junction."""
    grid = grid or layout.grid
    pts = []
    for c in layout.corners:
        pts.append((c.column, lat_to_row(c.ceil_lat, grid)))
        pts.append((c.column, lat_to_row(c.floor_lat, grid)))
    return np.array(pts)


def _wireframe_points(layout: VisibleLayout, grid: ImageGrid, include_verticals: bool) -> np.ndarray:
    y_c, y_f = _boundaries_of(layout, grid)
    cols = np.arange(grid.width, dtype=float)
    rows_c = lat_to_row(y_c, grid)
    rows_f = lat_to_row(y_f, grid)
    pts = [np.stack([cols, rows_c], axis=1), np.stack([cols, rows_f], axis=1)]
    if include_verticals:
        for c in layout.corners:
            r1 = lat_to_row(c.ceil_lat, grid)
            r2 = lat_to_row(c.floor_lat, grid)
            rows = np.arange(np.ceil(r1), np.floor(r2) + 1.0)
            pts.append(np.stack([np.full(len(rows), c.column), rows], axis=1))
    return np.vstack(pts)


def _chamfer_fraction(src: np.ndarray, target: np.ndarray, width: int, t: float) -> float:
    """Fraction of src points within t pixels of some target point (cyclic u)."""
    aug = np.vstack([target, target + [width, 0], target - [width, 0]])
    d, _ = cKDTree(aug).query(src, k=1)
    return float(np.mean(d <= t))


def wireframe_f(
    pred_layout: VisibleLayout,
    gt_layout: VisibleLayout,
    grid: ImageGrid | None = None,
    thresholds: Sequence[float] = THRESHOLDS,
    include_verticals: bool = True,
) -> float:
    """Boundary-curve chamfer F-score averaged over the pixel thresholds.

    The wireframe is both boundary curves plus (by default) the vertical
    junction segment at every corner column.
    """
    grid = grid or pred_layout.grid
    p = _wireframe_points(pred_layout, grid, include_verticals)
    g = _wireframe_points(gt_layout, grid, include_verticals)
    scores = []
    for t in thresholds:
        precision = _chamfer_fraction(p, g, grid.width, t)
        recall = _chamfer_fraction(g, p, grid.width, t)
        if precision + recall == 0:
            scores.append(0.0)
        else:
            scores.append(2 * precision * recall / (precision + recall))
    return float(np.mean(scores))


def _cyclic_col_range(c0: float, c1: float, width: int) -> np.ndarray:
    """Integer columns whose centers lie in the cyclic interval [c0, c1)."""
    if c1 < c0:
        c1 += width
    cols = np.arange(np.ceil(c0), np.ceil(c1))
    return (cols.astype(np.int64)) % width


def _planes(layout: VisibleLayout, grid: ImageGrid):
    """Each plane as (label, top_row[w], bottom_row[w]); empty columns 0-height."""
    w = grid.width
    y_c, y_f = _boundaries_of(layout, grid)
    rows_c = lat_to_row(y_c, grid)
    rows_f = lat_to_row(y_f, grid)
    planes = [
        ("ceiling", np.full(w, -0.5), rows_c.copy()),
        ("floor", rows_f.copy(), np.full(w, grid.height - 0.5)),
    ]
    corners = layout.corners
    for i, j in layout.wall_edges():
        top = np.full(w, 0.0)
        bot = np.full(w, 0.0)
        cols = _cyclic_col_range(corners[i].column, corners[j].column, w)
        top[cols] = rows_c[cols]
        bot[cols] = rows_f[cols]
        planes.append(("wall", top, bot))
    return planes


def _interval_iou(a, b) -> float:
    _, ta, ba = a
    _, tb, bb = b
    inter = np.clip(np.minimum(ba, bb) - np.maximum(ta, tb), 0.0, None).sum()
    area_a = np.clip(ba - ta, 0.0, None).sum()
    area_b = np.clip(bb - tb, 0.0, None).sum()
    union = area_a + area_b - inter
    return float(inter / union) if union > 0 else 0.0


def plane_f(
    pred_layout: VisibleLayout,
    gt_layout: VisibleLayout,
    grid: ImageGrid | None = None,
    iou_threshold: float = 0.5,
) -> float:
    """Surface-matching F-score: same-class planes matched at mask IoU > 0.5.

    Planes are the floor, the ceiling, and one wall per corner-to-corner edge;
    occlusion edges contribute no plane. Matching is greedy by descending IoU,
    one-to-one.
    """
    grid = grid or pred_layout.grid
    pred = _planes(pred_layout, grid)
    gt = _planes(gt_layout, grid)
    cand = []
    for i, p in enumerate(pred):
        for j, g in enumerate(gt):
            if p[0] != g[0]:
                continue
            iou = _interval_iou(p, g)
            if iou > iou_threshold:
                cand.append((iou, i, j))
    cand.sort(key=lambda c: -c[0])
    used_p, used_g = set(), set()
    matched = 0
    for iou, i, j in cand:
        if i not in used_p and j not in used_g:
            used_p.add(i)
            used_g.add(j)
            matched += 1
    return _f_score(matched, len(pred), len(gt))


def clip_to_visible(layout: VisibleLayout) -> VisibleLayout:
    """Restrict a full layout to what its own camera sees.

    Layouts that already carry occlusion pairs are returned unchanged; a full
    polygon is re-rendered from the origin so hidden notches collapse into
    near/far pairs, which is the visible evaluation regime's ground truth.
    """
    if layout.occlusion_pairs():
        return layout
    from .synth import SyntheticRoom, truth_layout

    room = SyntheticRoom(
        layout.floor_points(),
        layout.room_height,
        np.zeros(2),
        layout.camera.camera_height,
    )
    return truth_layout(room, layout.grid)


def evaluate_pair(
    pred: VisibleLayout,
    gt: VisibleLayout,
    grid: ImageGrid | None = None,
    regime: str = "non_visible",
    resolution: int = 2048,
) -> MetricReport:
    """All metrics for one prediction/ground-truth pair."""
    if regime not in ("visible", "non_visible"):
        raise InputError(f"regime must be 'visible' or 'non_visible', got {regime!r}")
    grid = grid or pred.grid
    if regime == "visible":
        gt = clip_to_visible(gt)
    pa, pb = pred.floor_points(), gt.floor_points()
    ma, mb, cell_area = _rasterize_pair(pa, pb, resolution)
    inter = np.count_nonzero(ma & mb)
    union = np.count_nonzero(ma | mb)
    if union == 0:
        raise MetricError("polygons rasterized to nothing")
    iou2 = inter / union
    ha, hb = pred.room_height, gt.room_height
    vol_inter = inter * cell_area * min(ha, hb)
    vol_union = np.count_nonzero(ma) * cell_area * ha + np.count_nonzero(mb) * cell_area * hb - vol_inter
    iou3 = vol_inter / vol_union
    p_pts = corner_image_points(pred, grid)
    g_pts = corner_image_points(gt, grid)
    return MetricReport(
        iou2d=iou2,
        iou3d=iou3,
        corner_error=corner_error(p_pts, g_pts, grid),
        pixel_error=pixel_error(render_semantic(pred, grid), render_semantic(gt, grid)),
        junction_f=junction_f(p_pts, g_pts, grid),
        wireframe_f=wireframe_f(pred, gt, grid),
        plane_f=plane_f(pred, gt, grid),
    )
