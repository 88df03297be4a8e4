"""Equirectangular image-coordinate <-> spherical-coordinate conversions.

Conventions used everywhere in this package:

* pixel centers sit at half-integer offsets, so column ``u`` maps to the
  longitude of ``u + 0.5`` pixel widths from the left edge;
* longitude is canonical in ``[-pi, pi)`` and increases with the column;
* latitude is in ``(-pi/2, pi/2)`` and decreases with the row (row 0 is the
  top of the panorama);
* columns are cyclic: all column arithmetic downstream is modulo ``width``.

All functions accept scalars or numpy arrays and are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, InputError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ImageGrid:
    """Pixel grid of a full 2:1 equirectangular panorama."""

    width: int = 1024
    height: int = 512

    def __post_init__(self):
        if self.width < 4 or self.height < 2:
            raise InputError(f"grid too small: {self.width}x{self.height}")
        if self.width != 2 * self.height:
            raise InputError(
                f"full panorama requires width = 2 * height, got {self.width}x{self.height}"
            )

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)


def wrap_lon(lon):
    """Wrap longitude(s) into the canonical interval [-pi, pi)."""
    return (np.asarray(lon, dtype=float) + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class SphericalCoord:
    """A viewing direction; longitude auto-wrapped, latitude strictly off the poles."""

    lon: float
    lat: float

    def __post_init__(self):
        object.__setattr__(self, "lon", float(wrap_lon(self.lon)))
        if not -math.pi / 2 < self.lat < math.pi / 2:
            raise GeometryError(f"latitude {self.lat} is at or beyond a pole")


def col_to_lon(u, grid: ImageGrid = ImageGrid()):
    """Longitude of column ``u`` (integer or real-valued, 0 <= u < width)."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u >= grid.width):
        raise InputError(f"column index out of range [0, {grid.width})")
    lon = ((u + 0.5) / grid.width - 0.5) * TWO_PI
    return float(lon) if lon.ndim == 0 else lon


def row_to_lat(v, grid: ImageGrid = ImageGrid()):
    """Latitude of row ``v`` (integer or real-valued, 0 <= v < height)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0) or np.any(v >= grid.height):
        raise InputError(f"row index out of range [0, {grid.height})")
    lat = math.pi / 2 - ((v + 0.5) / grid.height) * math.pi
    return float(lat) if lat.ndim == 0 else lat


def lon_to_col(lon, grid: ImageGrid = ImageGrid()):
    """Real-valued column of a longitude; exact inverse of :func:`col_to_lon`.

    Longitudes are wrapped into [-pi, pi) first, so ``lon = -pi`` lands on the
    left column boundary at -0.5.
    """
    lon = wrap_lon(lon)
    col = (lon / TWO_PI + 0.5) * grid.width - 0.5
    return float(col) if col.ndim == 0 else col


def lat_to_row(lat, grid: ImageGrid = ImageGrid()):
    """Real-valued row of a latitude; exact inverse of :func:`row_to_lat`."""
    lat = np.asarray(lat, dtype=float)
    if np.any(np.abs(lat) >= math.pi / 2):
        raise GeometryError("latitude at or beyond a pole has no row")
    row = (0.5 - lat / math.pi) * grid.height - 0.5
    return float(row) if row.ndim == 0 else row


def cyclic_column_distance(a, b, width: int):
    """Shortest distance between two column positions on a cyclic panorama."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % width
    d = np.minimum(d, width - d)
    return float(d) if d.ndim == 0 else d
