"""Parsers and emitters for every on-disk format.

Everything here is pure text/bytes in, value out; the CLI owns the file
system. Numeric emission uses Python's shortest round-trip representation,
so emit/parse cycles are lossless and golden files stay diffable.

Formats:
  signal file   magic line "PANOSIG1", width line, then three rows of width
                floats: corner probability, ceiling latitudes, floor
                latitudes (radians).
  corner txt    one "x y" pixel pair per line, alternating ceiling/floor at a
                shared x, x ascending between corners.
  layout json   lossless serialization of a visible layout.
  PLY           ASCII mesh: floor/ceiling fans plus wall quads; occlusion
                spans are left open, since their geometry is unknown.
  SVG           top-down floor polygons to scale, occlusion edges dashed,
                camera marked; multiple layouts overlay for comparison.
  report        per-scene metric rows plus aggregate means as a padded table
                or CSV.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .detect import BoundarySignal
from .errors import EmitError, ParseError, RoomLayoutError
from .geometry import (
    CameraModel,
    CornerKind,
    LayoutCorner,
    VisibleLayout,
    floor_distance,
)
from .panorama import ImageGrid, lat_to_row, row_to_lat

SIGNAL_MAGIC = "PANOSIG1"
LAYOUT_FORMAT = "visible-layout-1"


# --- boundary signal files ---


def parse_signal_file(data) -> BoundarySignal:
    """Parse a signal file (bytes or text) into a validated BoundarySignal."""
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"signal file is not UTF-8: {e}") from None
    else:
        text = data
    tokens = text.split()
    if not tokens or tokens[0] != SIGNAL_MAGIC:
        got = tokens[0][:16] if tokens else "<empty>"
        raise ParseError(f"bad magic: expected {SIGNAL_MAGIC}, got {got!r}")
    if len(tokens) < 2:
        raise ParseError("missing width")
    try:
        width = int(tokens[1])
    except ValueError:
        raise ParseError(f"width is not an integer: {tokens[1]!r}") from None
    if width < 1:
        raise ParseError(f"width must be >= 1, got {width}")
    values = tokens[2:]
    if len(values) != 3 * width:
        raise ParseError(
            f"expected {3 * width} values for width {width}, got {len(values)}"
        )
    rows = []
    for r, name in enumerate(("y_p", "y_c", "y_f")):
        row = np.empty(width)
        for c in range(width):
            tok = values[r * width + c]
            try:
                row[c] = float(tok)
            except ValueError:
                raise ParseError(f"{name} column {c}: not a number: {tok!r}") from None
        rows.append(row)
    try:
        return BoundarySignal(*rows)
    except RoomLayoutError as e:
        raise ParseError(str(e)) from None


def emit_signal_file(signal: BoundarySignal) -> str:
    lines = [SIGNAL_MAGIC, str(signal.width)]
    for row in (signal.y_p, signal.y_c, signal.y_f):
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


# --- corner annotations (pixel space) ---


@dataclass(frozen=True)
class LayoutFile:
    """Corner annotations in pixel space: (column, ceiling_row, floor_row)."""

    corners: tuple
    grid: ImageGrid = field(default_factory=ImageGrid)
    format_version: int = 1
    camera_height: float | None = None
    room_height: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "corners", tuple(tuple(map(float, c)) for c in self.corners))
        prev = -math.inf
        for x, ceil_row, floor_row in self.corners:
            if not 0 <= x < self.grid.width:
                raise ParseError(f"corner column {x} outside [0, {self.grid.width})")
            if not (0 <= ceil_row < self.grid.height and 0 <= floor_row < self.grid.height):
                raise ParseError(f"corner row outside [0, {self.grid.height}) at x={x}")
            if not ceil_row < floor_row:
                raise ParseError(f"ceiling row {ceil_row} not above floor row {floor_row} at x={x}")
            if x < prev:
                raise ParseError(f"corner columns not sorted at x={x}")
            prev = x


def parse_corner_txt(text: str, grid: ImageGrid | None = None) -> LayoutFile:
    """Parse alternating ceiling/floor "x y" lines into a LayoutFile.

    Line 2k is a corner's ceiling point and line 2k+1 its floor point at the
    same x (0.5 px tolerance); corners must come in ascending x. The pixel
    grid the annotations refer to is not stored in the format itself, so it
    is a parameter (default 1024x512).
    """
    grid = grid or ImageGrid()
    points = []
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected 'x y', got {raw!r}")
        try:
            points.append((float(parts[0]), float(parts[1]), lineno))
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric token in {raw!r}") from None
        last_line = lineno
    if not points:
        raise ParseError("no corner lines")
    if len(points) % 2:
        raise ParseError(f"line {last_line}: odd number of corner lines ({len(points)})")
    corners = []
    prev_x = -math.inf
    for k in range(0, len(points), 2):
        (x1, y1, l1), (x2, y2, l2) = points[k], points[k + 1]
        if abs(x1 - x2) > 0.5:
            raise ParseError(f"line {l2}: pair x mismatch ({x1} vs {x2})")
        if not y1 < y2:
            raise ParseError(f"line {l2}: ceiling row {y1} not above floor row {y2}")
        x = (x1 + x2) / 2.0
        if x <= prev_x:
            raise ParseError(f"line {l1}: corner x {x} not ascending")
        prev_x = x
        corners.append((x, y1, y2))
    try:
        return LayoutFile(tuple(corners), grid)
    except RoomLayoutError as e:
        raise ParseError(str(e)) from None


def emit_corner_txt(layout_file: LayoutFile) -> str:
    cols = [c[0] for c in layout_file.corners]
    if any(b <= a for a, b in zip(cols, cols[1:])):
        raise EmitError("corner txt cannot represent corners sharing a column")
    lines = []
    for x, ceil_row, floor_row in layout_file.corners:
        lines.append(f"{repr(float(x))} {repr(float(ceil_row))}")
        lines.append(f"{repr(float(x))} {repr(float(floor_row))}")
    return "\n".join(lines) + "\n"


def layout_from_file(lf: LayoutFile, camera: CameraModel | None = None) -> VisibleLayout:
    """Lift pixel-space corner annotations into a visible layout.

    Rows become latitudes on the annotation grid; room height is the median
    ceiling height implied by the corners (or the stored value if present).
    """
    camera = camera or CameraModel(lf.camera_height or 1.6)
    corners = []
    heights = []
    for x, ceil_row, floor_row in lf.corners:
        ceil_lat = float(row_to_lat(ceil_row, lf.grid))
        floor_lat = float(row_to_lat(floor_row, lf.grid))
        corners.append(LayoutCorner(x % lf.grid.width, ceil_lat, floor_lat))
        d = float(floor_distance(floor_lat, camera.camera_height))
        heights.append(camera.camera_height + d * math.tan(ceil_lat))
    room_height = lf.room_height if lf.room_height is not None else float(np.median(heights))
    corners.sort(key=lambda c: c.column)
    return VisibleLayout(corners, camera, room_height, lf.grid)


def file_from_layout(layout: VisibleLayout) -> LayoutFile:
    corners = tuple(
        (
            c.column,
            float(lat_to_row(c.ceil_lat, layout.grid)),
            float(lat_to_row(c.floor_lat, layout.grid)),
        )
        for c in layout.corners
    )
    return LayoutFile(
        corners,
        layout.grid,
        camera_height=layout.camera.camera_height,
        room_height=layout.room_height,
    )


# --- layout JSON ---


def emit_layout_json(layout: VisibleLayout) -> str:
    doc = {
        "format": LAYOUT_FORMAT,
        "grid": {"width": layout.grid.width, "height": layout.grid.height},
        "camera_height": layout.camera.camera_height,
        "room_height": layout.room_height,
        "corners": [
            {
                "column": c.column,
                "ceil_lat": c.ceil_lat,
                "floor_lat": c.floor_lat,
                "kind": c.kind.value,
            }
            for c in layout.corners
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_layout_json(text) -> VisibleLayout:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"layout json is not UTF-8: {e}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid json: {e}") from None
    try:
        if doc["format"] != LAYOUT_FORMAT:
            raise ParseError(f"unsupported layout format {doc.get('format')!r}")
        grid = ImageGrid(int(doc["grid"]["width"]), int(doc["grid"]["height"]))
        corners = [
            LayoutCorner(
                float(c["column"]),
                float(c["ceil_lat"]),
                float(c["floor_lat"]),
                CornerKind(c["kind"]),
            )
            for c in doc["corners"]
        ]
        return VisibleLayout(
            corners,
            CameraModel(float(doc["camera_height"])),
            float(doc["room_height"]),
            grid,
        )
    except ParseError:
        raise
    except (RoomLayoutError, KeyError, TypeError, ValueError) as e:
        raise ParseError(f"invalid layout document: {e}") from None


# --- PLY mesh ---


def _ear_clip(points: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate a simple CCW polygon; N-2 triangles, works for reflex shapes."""
    idx = list(range(len(points)))
    tris = []
    guard = 0
    while len(idx) > 3 and guard < 10000:
        guard += 1
        n = len(idx)
        for k in range(n):
            i0, i1, i2 = idx[(k - 1) % n], idx[k], idx[(k + 1) % n]
            a, b, c = points[i0], points[i1], points[i2]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= 1e-12:
                continue  # reflex or degenerate corner, not an ear
            ear = True
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                if _point_in_triangle(points[j], a, b, c):
                    ear = False
                    break
            if ear:
                tris.append((i0, i1, i2))
                idx.pop(k)
                break
        else:
            break  # numerically stuck; fall through to fan
    if len(idx) == 3:
        tris.append((idx[0], idx[1], idx[2]))
    else:
        for k in range(1, len(idx) - 1):
            tris.append((idx[0], idx[k], idx[k + 1]))
    return tris


def _point_in_triangle(p, a, b, c) -> bool:
    def side(u, v):
        return (v[0] - u[0]) * (p[1] - u[1]) - (v[1] - u[1]) * (p[0] - u[0])

    d1, d2, d3 = side(a, b), side(b, c), side(c, a)
    return not ((d1 < 0 or d2 < 0 or d3 < 0) and (d1 > 0 or d2 > 0 or d3 > 0))


def emit_ply(layout: VisibleLayout) -> bytes:
    """ASCII mesh: wall quads (two triangles each) plus floor/ceiling caps.

    Vertex i is corner i's floor point, vertex N+i its ceiling point. Spans
    between occlusion pairs get no wall, leaving the mesh open exactly where
    the room is not observed.
    """
    pts = layout.floor_points()
    n = len(pts)
    if n < 3:
        raise EmitError("layout has no polygon to mesh")
    h = layout.room_height - 0.0
    verts = [(p[0], p[1], 0.0) for p in pts] + [(p[0], p[1], h) for p in pts]
    faces: list[tuple[int, int, int]] = []
    for i, j in layout.wall_edges():
        faces.append((i, j, n + j))
        faces.append((i, n + j, n + i))
    floor_tris = _ear_clip(pts)
    faces.extend(floor_tris)
    faces.extend((n + a, n + c, n + b) for a, b, c in floor_tris)
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(verts)}",
        "property float x",
        "property float y",
        "property float z",
        f"element face {len(faces)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    lines += [f"{repr(float(x))} {repr(float(y))} {repr(float(z))}" for x, y, z in verts]
    lines += [f"3 {a} {b} {c}" for a, b, c in faces]
    return ("\n".join(lines) + "\n").encode("ascii")


# --- SVG top-down view ---

_SVG_COLORS = ("#2b6cb0", "#c53030", "#2f855a", "#b7791f")


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def emit_svg_topdown(*layouts: VisibleLayout, scale: float = 100.0,
                     labels: Sequence[str] | None = None) -> str:
    """Floor polygons to scale, camera at the marked origin, occlusions dashed.

    Pass several layouts (e.g. prediction and truth) for an overlay.
    """
    if not layouts:
        raise EmitError("no layouts to draw")
    all_pts = np.vstack([lay.floor_points() for lay in layouts] + [np.zeros((1, 2))])
    margin = 0.5
    lo = all_pts.min(axis=0) - margin
    hi = all_pts.max(axis=0) + margin
    size = (hi - lo) * scale

    def to_svg(p):
        return (p[0] - lo[0]) * scale, (hi[1] - p[1]) * scale

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(size[0])}" '
        f'height="{_fmt(size[1])}" viewBox="0 0 {_fmt(size[0])} {_fmt(size[1])}">',
    ]
    for li, lay in enumerate(layouts):
        color = _SVG_COLORS[li % len(_SVG_COLORS)]
        label = labels[li] if labels and li < len(labels) else f"layout {li}"
        pts = lay.floor_points()
        n = len(pts)
        occ = set(lay.occlusion_pairs())
        parts.append(f'  <g stroke="{color}" fill="none" stroke-width="2"><!-- {label} -->')
        for i in range(n):
            j = (i + 1) % n
            (x1, y1), (x2, y2) = to_svg(pts[i]), to_svg(pts[j])
            dash = ' stroke-dasharray="6 4"' if (i, j) in occ else ""
            parts.append(
                f'    <line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}"{dash}/>'
            )
        parts.append("  </g>")
    cx, cy = to_svg((0.0, 0.0))
    r = 0.08 * scale
    parts.append(
        f'  <circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" fill="#222222"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --- metric reports ---

_REPORT_COLUMNS = (
    "iou2d",
    "iou3d",
    "corner_error",
    "pixel_error",
    "junction_f",
    "wireframe_f",
    "plane_f",
)


def _report_rows(named_reports) -> list[tuple[str, list[float]]]:
    rows = [(name, rep.as_row()) for name, rep in named_reports]
    if not rows:
        raise EmitError("no reports to emit")
    means = [float(np.mean([r[i] for _, r in rows])) for i in range(len(_REPORT_COLUMNS))]
    rows.append(("mean", means))
    return rows


def emit_report(named_reports, fmt: str = "table") -> str:
    """Per-scene metric rows plus a final aggregate-mean row."""
    rows = _report_rows(list(named_reports))
    if fmt == "csv":
        lines = ["scene," + ",".join(_REPORT_COLUMNS)]
        for name, vals in rows:
            lines.append(name + "," + ",".join(repr(v) for v in vals))
        return "\n".join(lines) + "\n"
    if fmt != "table":
        raise EmitError(f"unknown report format {fmt!r}")
    name_w = max(len("scene"), *(len(name) for name, _ in rows))
    col_w = 2 + max(len(c) for c in _REPORT_COLUMNS)
    header = "scene".ljust(name_w) + "".join(c.rjust(col_w) for c in _REPORT_COLUMNS)
    lines = [header, "-" * len(header)]
    for name, vals in rows:
        lines.append(name.ljust(name_w) + "".join(f"{v:.4f}".rjust(col_w) for v in vals))
    return "\n".join(lines) + "\n"


# --- annotation interchange ---


def convert_structured3d(data, grid: ImageGrid | None = None) -> str:
    """Map a panorama layout annotation document to corner txt.

    Assumed variant: a JSON object with a "junctions" list of 2D pixel
    positions, either bare [x, y] pairs or {"coordinate": [x, y]} objects,
    listing each wall junction's ceiling point and floor point (in either
    order) so that junctions come in vertical pairs. Pairs are sorted by
    column before emission. Other release variants (3D junction graphs) are
    out of scope.
    """
    if isinstance(data, (bytes, str)):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid json: {e}") from None
    else:
        doc = data
    if not isinstance(doc, dict) or "junctions" not in doc:
        raise ParseError("document has no 'junctions' list")
    raw = doc["junctions"]
    pts = []
    for j in raw:
        coord = j.get("coordinate") if isinstance(j, dict) else j
        try:
            x, y = float(coord[0]), float(coord[1])
        except (TypeError, ValueError, IndexError):
            raise ParseError(f"junction is not a 2D point: {j!r}") from None
        pts.append((x, y))
    if len(pts) < 6 or len(pts) % 2:
        raise ParseError(f"need an even number (>= 6) of junctions, got {len(pts)}")
    pts.sort(key=lambda p: (p[0], p[1]))
    lines = []
    for k in range(0, len(pts), 2):
        (x1, y1), (x2, y2) = pts[k], pts[k + 1]
        if abs(x1 - x2) > 0.5:
            raise ParseError(f"junctions at x={x1} and x={x2} do not pair vertically")
        lines.append(f"{repr(x1)} {repr(y1)}")
        lines.append(f"{repr(x2)} {repr(y2)}")
    return "\n".join(lines) + "\n"
