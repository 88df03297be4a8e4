"""Corner peaks, boundary-discontinuity detection, and the visible-layout pipeline.

A hidden region announces itself twice in a 1D boundary signal: in image
space as an abrupt jump (or a drastic slope change) of the ceiling/floor
boundary curve, and in plan space as a jump in the camera-to-wall distance
profile. Both detectors run per boundary, their candidates are clustered
into confirmed discontinuity columns, and at each confirmed column the two
sides of the jump become an occlusion near/far corner pair. Everything is
cyclic: a panorama has no first column.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import AmbiguityError, InputError, ReconstructionError
from .geometry import (
    CameraModel,
    CornerKind,
    LayoutCorner,
    VisibleLayout,
    assemble_layout,
    estimate_room_height,
    wall_distance_profile,
)
from .panorama import ImageGrid, cyclic_column_distance

HALF_PI = np.pi / 2

MODES = ("2d_only", "3d_only", "ensemble")


@dataclass(frozen=True)
class BoundarySignal:
    """Per-column network output: corner probability and boundary latitudes.

    ``y_p`` is in [0, 1]; ``y_c`` (ceiling-wall) is in (0, pi/2); ``y_f``
    (floor-wall) is in (-pi/2, 0). All three share one length, the panorama
    width.
    """

    y_p: np.ndarray
    y_c: np.ndarray
    y_f: np.ndarray

    def __post_init__(self):
        for name in ("y_p", "y_c", "y_f"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.y_p.ndim == self.y_c.ndim == self.y_f.ndim == 1:
            raise InputError("signal components must be 1D arrays")
        if not len(self.y_p) == len(self.y_c) == len(self.y_f):
            raise InputError(
                f"signal lengths differ: {len(self.y_p)}, {len(self.y_c)}, {len(self.y_f)}"
            )
        for name, arr, lo, hi in (
            ("y_p", self.y_p, 0.0, 1.0),
            ("y_c", self.y_c, 0.0, HALF_PI),
            ("y_f", self.y_f, -HALF_PI, 0.0),
        ):
            bad = ~np.isfinite(arr)
            if name == "y_p":
                bad |= (arr < lo) | (arr > hi)
            else:
                bad |= (arr <= lo) | (arr >= hi)
            if np.any(bad):
                raise InputError(
                    f"{name} out of range at column {int(np.flatnonzero(bad)[0])}"
                )

    @property
    def width(self) -> int:
        return len(self.y_p)

    def shifted(self, s: int) -> "BoundarySignal":
        """Signal rotated by ``s`` columns (column i of the result is column i-s)."""
        return BoundarySignal(
            np.roll(self.y_p, s), np.roll(self.y_c, s), np.roll(self.y_f, s)
        )


class DiscontinuitySource(str, enum.Enum):
    SLOPE2D_CEILING = "slope2d_ceiling"
    SLOPE2D_FLOOR = "slope2d_floor"
    KINK2D_CEILING = "kink2d_ceiling"
    KINK2D_FLOOR = "kink2d_floor"
    JUMP3D_CEILING = "jump3d_ceiling"
    JUMP3D_FLOOR = "jump3d_floor"


@dataclass(frozen=True)
class DiscontinuityCandidate:
    """A column suspected to sit at a boundary discontinuity."""

    column: int
    source: DiscontinuitySource
    strength: float

    def __post_init__(self):
        if self.column < 0:
            raise InputError(f"candidate column {self.column} negative")
        if not self.strength > 0:
            raise InputError(f"candidate strength must be > 0, got {self.strength}")


@dataclass
class DetectConfig:
    """Tunable thresholds of the detection pipeline.

    ``peak_min_separation=None`` resolves to ``width // 64`` at use time.
    """

    peak_threshold: float = 0.5
    peak_min_separation: int | None = None
    slope_threshold: float = 0.015  # radians per column
    kink_threshold: float = 0.008  # radians per column^2, on the smoothed curve
    jump_ratio: float = 1.15
    cluster_radius: int = 4
    extrema_window: int = 5
    smoothing_width: int = 5

    def __post_init__(self):
        positives = {
            "peak_threshold": self.peak_threshold,
            "slope_threshold": self.slope_threshold,
            "kink_threshold": self.kink_threshold,
            "cluster_radius": self.cluster_radius,
            "extrema_window": self.extrema_window,
            "smoothing_width": self.smoothing_width,
        }
        if self.peak_min_separation is not None:
            positives["peak_min_separation"] = self.peak_min_separation
        for name, value in positives.items():
            if not value > 0:
                raise InputError(f"{name} must be > 0, got {value}")
        if not self.jump_ratio > 1:
            raise InputError(f"jump_ratio must be > 1, got {self.jump_ratio}")

    def min_separation(self, width: int) -> int:
        if self.peak_min_separation is not None:
            return self.peak_min_separation
        return max(1, width // 64)

    def with_overrides(self, **kwargs) -> "DetectConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def extract_corner_peaks(y_p, config: DetectConfig | None = None) -> list[int]:
    """Cyclic local maxima of the corner probability above the peak threshold.

    Peaks closer than the minimum separation suppress each other; the higher
    peak survives, ties going to the lower column. Result sorted ascending.
    """
    config = config or DetectConfig()
    y_p = np.asarray(y_p, dtype=float)
    w = len(y_p)
    is_peak = (
        (y_p >= np.roll(y_p, 1))
        & (y_p >= np.roll(y_p, -1))
        & (y_p >= config.peak_threshold)
    )
    candidates = np.flatnonzero(is_peak)
    order = sorted(candidates, key=lambda c: (-y_p[c], c))
    min_sep = config.min_separation(w)
    kept: list[int] = []
    for c in order:
        if all(cyclic_column_distance(c, k, w) >= min_sep for k in kept):
            kept.append(int(c))
    return sorted(kept)


def _box_smooth_cyclic(y: np.ndarray, span: int) -> np.ndarray:
    """Cyclic box filter; exact under column rotation."""
    acc = np.zeros_like(y)
    half = span // 2
    for k in range(-half, span - half):
        acc += np.roll(y, -k)
    return acc / span


def detect_2d(
    y, config: DetectConfig | None = None, boundary: str = "floor"
) -> list[DiscontinuityCandidate]:
    """Image-space discontinuity candidates on one boundary curve.

    Emits a slope candidate at column i when |y[i+1] - y[i]| exceeds the
    slope threshold, and a kink candidate where the second difference of the
    box-smoothed curve exceeds the kink threshold. Raw second differences of
    pixel-quantized curves are noise-dominated, hence the smoothing.
    """
    config = config or DetectConfig()
    if boundary not in ("floor", "ceiling"):
        raise InputError(f"boundary must be 'floor' or 'ceiling', got {boundary!r}")
    y = np.asarray(y, dtype=float)
    slope_src = (
        DiscontinuitySource.SLOPE2D_FLOOR
        if boundary == "floor"
        else DiscontinuitySource.SLOPE2D_CEILING
    )
    kink_src = (
        DiscontinuitySource.KINK2D_FLOOR
        if boundary == "floor"
        else DiscontinuitySource.KINK2D_CEILING
    )
    out: list[DiscontinuityCandidate] = []
    dy = np.abs(np.roll(y, -1) - y)
    for i in np.flatnonzero(dy > config.slope_threshold):
        out.append(DiscontinuityCandidate(int(i), slope_src, float(dy[i])))
    # Box smoothing spreads a one-column slope change of m over `span` columns,
    # shrinking its second difference to m/span; the rescale by span turns the
    # statistic back into an estimate of the local slope-change rate so the
    # threshold is in radians per column squared.
    span = config.smoothing_width
    smooth = _box_smooth_cyclic(y, span)
    d2 = span * np.abs(np.roll(smooth, -1) - 2 * smooth + np.roll(smooth, 1))
    for i in np.flatnonzero(d2 > config.kink_threshold):
        out.append(DiscontinuityCandidate(int(i), kink_src, float(d2[i])))
    out.sort(key=lambda c: (c.column, c.source.value))
    return out


def detect_3d(
    distance_profile, config: DetectConfig | None = None, boundary: str = "floor"
) -> list[DiscontinuityCandidate]:
    """Plan-space discontinuity candidates on a wall-distance profile.

    A candidate fires at column i when the larger of d[i], d[i+1] exceeds the
    smaller by the configured ratio; the ratio test makes detection invariant
    to the free camera-height scale.
    """
    config = config or DetectConfig()
    if boundary not in ("floor", "ceiling"):
        raise InputError(f"boundary must be 'floor' or 'ceiling', got {boundary!r}")
    d = np.asarray(distance_profile, dtype=float)
    bad = np.flatnonzero(~(d > 0) | ~np.isfinite(d))
    if bad.size:
        raise InputError(f"nonpositive distance at column {int(bad[0])}")
    src = (
        DiscontinuitySource.JUMP3D_FLOOR
        if boundary == "floor"
        else DiscontinuitySource.JUMP3D_CEILING
    )
    nxt = np.roll(d, -1)
    ratio = np.maximum(d, nxt) / np.minimum(d, nxt)
    return [
        DiscontinuityCandidate(int(i), src, float(ratio[i]))
        for i in np.flatnonzero(ratio > config.jump_ratio)
    ]


def _cluster_columns(
    columns: np.ndarray, strengths: np.ndarray, radius: int, width: int
) -> list[float]:
    """Single-linkage cyclic clustering; each cluster -> strength-weighted mean."""
    order = np.argsort(columns, kind="stable")
    cols = columns[order].astype(float)
    wts = strengths[order].astype(float)
    n = len(cols)
    if n == 0:
        return []
    gaps = np.diff(cols, append=cols[0] + width)
    breaks = np.flatnonzero(gaps > radius)
    if breaks.size == 0:
        # everything chains together around the circle
        segments = [np.arange(n)]
    else:
        start = (breaks[-1] + 1) % n
        idx = np.arange(start, start + n) % n
        seg_ends = [((b - start) % n) + 1 for b in breaks]
        segments = np.split(idx, seg_ends[:-1])
    means = []
    for seg in segments:
        c = cols[seg].copy()
        c[c < c[0]] += width  # unwrap within the chain
        m = float(np.average(c, weights=wts[seg])) % width
        means.append(m)
    return sorted(means)


def ensemble(
    candidates: Iterable[DiscontinuityCandidate],
    width: int,
    config: DetectConfig | None = None,
    corner_peaks: Sequence[int] = (),
) -> list[float]:
    """Cluster candidates from any subset of sources into confirmed columns.

    Candidates within the cluster radius of each other (cyclically, which is
    why the panorama width is required) merge by single linkage; each cluster
    confirms one column, its strength-weighted mean. A cluster that lands
    within the cluster radius of an existing corner peak is pulled onto that
    peak instead of spawning a second corner next to it.
    """
    config = config or DetectConfig()
    candidates = list(candidates)
    if not candidates:
        return []
    if width < 1:
        raise InputError(f"width must be >= 1, got {width}")
    cols = np.array([c.column for c in candidates])
    wts = np.array([c.strength for c in candidates])
    if np.any(cols >= width):
        raise InputError(
            f"candidate column {int(cols[cols >= width][0])} outside width {width}"
        )
    confirmed = _cluster_columns(cols, wts, config.cluster_radius, width)
    snapped: list[float] = []
    for col in confirmed:
        near_peaks = [
            p
            for p in corner_peaks
            if cyclic_column_distance(col, p, width) <= config.cluster_radius
        ]
        if near_peaks:
            col = float(
                min(near_peaks, key=lambda p: cyclic_column_distance(col, p, width))
            )
        if not any(cyclic_column_distance(col, s, width) < 1e-9 for s in snapped):
            snapped.append(col)
    return sorted(snapped)


_FLOOR_LAT_RANGE = (-math.pi / 2 + 1e-6, -1e-6)
_CEIL_LAT_RANGE = (1e-6, math.pi / 2 - 1e-6)


def _extrapolate_half(y: np.ndarray, k: int, toward: int, cap: float, lo: float, hi: float) -> float:
    """Boundary value half a column beyond column k, following its wall.

    Continues the line through columns k and k - toward for half a column in
    the `toward` direction. The per-column slope is capped so a second
    discontinuity inside the stencil cannot fling the estimate off the wall.
    """
    w = len(y)
    slope = float(y[k] - y[(k - toward) % w])
    slope = min(max(slope, -cap), cap)
    return min(max(float(y[k]) + 0.5 * slope, lo), hi)


def extract_occlusion_pair(
    signal: BoundarySignal, column: float, config: DetectConfig | None = None
) -> tuple[LayoutCorner, LayoutCorner]:
    """Near/far corner pair at a confirmed discontinuity column.

    Within the extrema window around the column, the largest single-step jump
    of the floor boundary locates the discontinuity between two adjacent
    columns. Both corners are placed at the jump midpoint, each keeping its
    own wall's boundary values extrapolated to that midpoint; the side with
    the lower floor point in the image (larger |y_f|, nearer wall) is the
    near corner. A window without a jump at least as large as the slope
    threshold is ambiguous: there is no discontinuity to flank, so no pair is
    extracted there.
    """
    config = config or DetectConfig()
    w = signal.width
    if not 0 <= column < w:
        raise InputError(f"column {column} outside [0, {w})")
    half = config.extrema_window
    idx = (int(round(column)) + np.arange(-half, half + 1)) % w
    y_f_win = signal.y_f[idx]
    jumps = np.abs(np.diff(y_f_win))
    j = int(np.argmax(jumps))
    if jumps[j] < max(config.slope_threshold, 1e-12):
        raise AmbiguityError(
            f"no floor-boundary discontinuity within {half} columns of column {column}"
        )
    a, b = int(idx[j]), int(idx[j + 1])
    col = (a + 0.5) % w
    cap = config.slope_threshold

    def corner_at(k: int, toward: int, kind: CornerKind) -> LayoutCorner:
        ceil = _extrapolate_half(signal.y_c, k, toward, cap, *_CEIL_LAT_RANGE)
        floor = _extrapolate_half(signal.y_f, k, toward, cap, *_FLOOR_LAT_RANGE)
        return LayoutCorner(col, ceil, floor, kind)

    # toward = +1 extrapolates the left wall rightward onto the jump, -1 the
    # right wall leftward
    left = (a, +1)
    right = (b, -1)
    if abs(signal.y_f[a]) > abs(signal.y_f[b]):
        near_side, far_side = left, right
    else:
        near_side, far_side = right, left
    near = corner_at(*near_side, CornerKind.OCCLUSION_NEAR)
    far = corner_at(*far_side, CornerKind.OCCLUSION_FAR)
    return near, far


def candidates_for_mode(
    signal: BoundarySignal,
    config: DetectConfig | None = None,
    mode: str = "ensemble",
    cam: CameraModel | None = None,
) -> list[DiscontinuityCandidate]:
    """Discontinuity candidates from the sources the mode enables."""
    config = config or DetectConfig()
    cam = cam or CameraModel()
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}, got {mode!r}")
    cands: list[DiscontinuityCandidate] = []
    if mode in ("2d_only", "ensemble"):
        cands += detect_2d(signal.y_c, config, boundary="ceiling")
        cands += detect_2d(signal.y_f, config, boundary="floor")
    if mode in ("3d_only", "ensemble"):
        room_height = estimate_room_height(signal, cam)
        d_floor = wall_distance_profile(signal.y_f, cam)
        d_ceil = wall_distance_profile(signal.y_c, cam, room_height)
        cands += detect_3d(d_floor, config, boundary="floor")
        cands += detect_3d(d_ceil, config, boundary="ceiling")
    return cands


def _refine_peak_column(y_p: np.ndarray, p: int) -> float:
    """Sub-pixel peak position by log-parabolic interpolation.

    Exact for Gaussian-shaped peaks (their log is a parabola). Falls back to
    the integer column when a neighbor is nonpositive or the log values are
    not strictly concave.
    """
    w = len(y_p)
    window = y_p[[(p - 1) % w, p, (p + 1) % w]]
    if np.any(window <= 0):
        return float(p)
    l0, l1, l2 = np.log(window)
    denom = l0 - 2.0 * l1 + l2
    if denom >= -1e-12:
        return float(p)
    delta = 0.5 * (l0 - l2) / denom
    return (p + float(np.clip(delta, -0.5, 0.5))) % w


def _refined_corner(
    signal: BoundarySignal, peak: int, config: DetectConfig
) -> LayoutCorner:
    """Plain corner at the sub-pixel peak position.

    The boundary value at the junction is estimated by continuing each
    adjoining wall's curve to the refined column and averaging; interpolating
    straight across the junction would mix the two walls' slopes and bias the
    corner inward.
    """
    w = signal.width
    col = _refine_peak_column(np.asarray(signal.y_p), peak)
    k0 = int(math.floor(col)) % w
    k1 = (k0 + 1) % w
    t = col - math.floor(col)
    cap = config.slope_threshold

    def junction(y: np.ndarray, lo: float, hi: float) -> float:
        slope_l = min(max(float(y[k0] - y[(k0 - 1) % w]), -cap), cap)
        slope_r = min(max(float(y[(k1 + 1) % w] - y[k1]), -cap), cap)
        from_left = float(y[k0]) + t * slope_l
        from_right = float(y[k1]) - (1.0 - t) * slope_r
        return min(max(0.5 * (from_left + from_right), lo), hi)

    return LayoutCorner(
        col,
        junction(signal.y_c, *_CEIL_LAT_RANGE),
        junction(signal.y_f, *_FLOOR_LAT_RANGE),
    )


def postprocess(
    signal: BoundarySignal,
    config: DetectConfig | None = None,
    mode: str = "ensemble",
    cam: CameraModel | None = None,
) -> VisibleLayout:
    """Full pipeline: peaks + discontinuity detection + pair extraction + assembly.

    The mode chooses which candidate sources feed the ensemble (image-space
    only, plan-space only, or both); corner peaks are always used. Confirmed
    discontinuities that sit on a corner peak replace that corner with its
    occlusion pair rather than duplicating it.
    """
    config = config or DetectConfig()
    cam = cam or CameraModel()
    w = signal.width
    peaks = extract_corner_peaks(signal.y_p, config)
    cands = candidates_for_mode(signal, config, mode, cam)
    confirmed = ensemble(cands, w, config, peaks)

    pairs: list[tuple[LayoutCorner, LayoutCorner]] = []
    claimed: set[int] = set()
    seen_pair_cols: set[int] = set()
    for col in confirmed:
        try:
            near, far = extract_occlusion_pair(signal, col, config)
        except AmbiguityError:
            continue  # kink-only cluster on a continuous boundary: a plain corner
        key = round(near.column * 2)  # pair members share the jump midpoint
        if key in seen_pair_cols:
            continue
        seen_pair_cols.add(key)
        pairs.append((near, far))
        claimed.update(
            p
            for p in peaks
            if any(
                cyclic_column_distance(q, p, w) <= config.cluster_radius
                for q in (col, near.column)
            )
        )

    corners: list[LayoutCorner] = [
        _refined_corner(signal, p, config) for p in peaks if p not in claimed
    ]
    for near, far in pairs:
        # the side whose wall continues leftward must precede the other so the
        # polygon threads prev corner -> left flank -> right flank -> next
        left_flank = int(near.column - 0.5) % w
        near_is_left = abs(signal.y_f[left_flank]) > abs(
            signal.y_f[(left_flank + 1) % w]
        )
        corners.extend((near, far) if near_is_left else (far, near))
    if len(corners) < 3:
        raise ReconstructionError(
            f"signal yields {len(corners)} corners; a closed layout needs >= 3"
        )
    grid = ImageGrid(w, w // 2)
    return assemble_layout(corners, signal, cam, grid)
