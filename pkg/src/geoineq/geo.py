"""Tract geometry: areas, containment, and a pruning spatial index.

Containment uses the even-odd (ray-casting) rule over every ring of a
tract, so holes subtract without caring about ring orientation. When a
point lies in more than one tract (shared edges, sloppy data), the
lexicographically smallest tract_id wins; counts must be reproducible,
so ties cannot depend on input order.

The index is a uniform grid over tract bounding boxes. It only prunes
candidates; containment is always decided by the exact test, so indexed
assignment answers identically to a scan over all polygons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DegeneratePolygon, DuplicateTractId, EmptyTractSet
from .ingest import Polygon, RawTractFeature, Ring

EARTH_RADIUS_KM = 6371.0
AREA_EPS_KM2 = 1e-12
_DEG = math.pi / 180.0


@dataclass(frozen=True)
class Tract:
    tract_id: str
    polygons: tuple[Polygon, ...]
    bbox: tuple[float, float, float, float]  # (min_lon, min_lat, max_lon, max_lat)
    area_km2: float

    @property
    def rings(self):
        for poly in self.polygons:
            yield from poly


def _normalize_polygons(rings_or_polygons) -> tuple[Polygon, ...]:
    """Accept either one polygon (a sequence of rings) or a sequence of
    polygons; return the nested form."""
    first = rings_or_polygons[0]
    try:
        float(first[0][0])
        return (tuple(tuple((float(x), float(y)) for x, y in r) for r in rings_or_polygons),)
    except (TypeError, ValueError):
        return tuple(
            tuple(tuple((float(x), float(y)) for x, y in r) for r in poly)
            for poly in rings_or_polygons
        )


def polygon_area_km2(rings_or_polygons) -> float:
    """Shoelace area in km² under a local equirectangular projection.

    All rings are projected about the mean latitude of their vertices
    (x = R·lon_rad·cos(mean_lat), y = R·lat_rad, R = 6371 km); per
    polygon the exterior ring counts positive and hole areas subtract.
    City-scale tracts are small enough that the flat-map error is
    negligible; geodesic area is intentionally out of scope.
    """
    polygons = _normalize_polygons(rings_or_polygons)
    lat_sum = 0.0
    n_pts = 0
    for poly in polygons:
        for ring in poly:
            for _, y in ring[:-1]:  # closing duplicate excluded from the mean
                lat_sum += y
                n_pts += 1
    if n_pts == 0:
        raise DegeneratePolygon("polygon with no vertices")
    mean_lat = lat_sum / n_pts
    kx = EARTH_RADIUS_KM * _DEG * math.cos(mean_lat * _DEG)
    ky = EARTH_RADIUS_KM * _DEG
    total = 0.0
    for poly in polygons:
        for ring_idx, ring in enumerate(poly):
            s = 0.0
            for i in range(len(ring) - 1):
                x1, y1 = ring[i]
                x2, y2 = ring[i + 1]
                s += x1 * y2 - x2 * y1
            ring_area = abs(s) * 0.5 * kx * ky
            total += ring_area if ring_idx == 0 else -ring_area
    if total <= AREA_EPS_KM2:
        raise DegeneratePolygon(f"area {total} km² is not positive")
    return total


def tract_from_feature(feature: RawTractFeature) -> Tract:
    """Attach bbox and area to a parsed tract.

    An ``area_km2`` property in the source file overrides computation
    (authoritative areas, e.g. published census figures, beat our local
    projection).
    """
    xs: list[float] = []
    ys: list[float] = []
    for ring in feature.rings:
        for x, y in ring:
            xs.append(x)
            ys.append(y)
    bbox = (min(xs), min(ys), max(xs), max(ys))
    override = feature.properties.get("area_km2")
    if override is not None:
        area = float(override)
        if area <= AREA_EPS_KM2:
            raise DegeneratePolygon(
                f"tract {feature.tract_id}: provided area_km2 {area} not positive"
            )
    else:
        try:
            area = polygon_area_km2(feature.polygons)
        except DegeneratePolygon as e:
            raise DegeneratePolygon(f"tract {feature.tract_id}: {e}") from None
    return Tract(feature.tract_id, feature.polygons, bbox, area)


def point_in_rings(lon: float, lat: float, rings: Iterable[Ring]) -> bool:
    """Even-odd crossing test over a flat iterable of rings."""
    inside = False
    for ring in rings:
        for i in range(len(ring) - 1):
            x1, y1 = ring[i]
            x2, y2 = ring[i + 1]
            if (y1 > lat) != (y2 > lat) and lon < (x2 - x1) * (lat - y1) / (y2 - y1) + x1:
                inside = not inside
    return inside


class SpatialIndex:
    """Immutable uniform-grid index over a tract set.

    Tracts are held in ascending tract_id order; both the scalar and the
    vectorized assignment walk candidates in that order and take the
    first containing tract, which realizes the smallest-id tie-break.
    """

    def __init__(self, tracts: Iterable[Tract]):
        ordered = sorted(tracts, key=lambda t: t.tract_id)
        if not ordered:
            raise EmptyTractSet("cannot index an empty tract set")
        ids = [t.tract_id for t in ordered]
        if len(set(ids)) != len(ids):
            raise DuplicateTractId("duplicate tract_id in index input")
        self.tracts: tuple[Tract, ...] = tuple(ordered)
        self.tract_ids: tuple[str, ...] = tuple(ids)

        bbox = np.array([t.bbox for t in ordered], dtype=np.float64)
        self._minx = bbox[:, 0]
        self._miny = bbox[:, 1]
        self._maxx = bbox[:, 2]
        self._maxy = bbox[:, 3]
        self._env = (
            float(self._minx.min()),
            float(self._miny.min()),
            float(self._maxx.max()),
            float(self._maxy.max()),
        )
        x0, y0, x1, y1 = self._env
        g = max(1, 2 * int(math.ceil(math.sqrt(len(ordered)))))
        self._g = g
        self._inv_w = g / (x1 - x0) if x1 > x0 else 0.0
        self._inv_h = g / (y1 - y0) if y1 > y0 else 0.0

        # per-cell candidate lists and per-tract covered-cell lists
        cells: dict[int, list[int]] = {}
        tract_cells: list[list[int]] = []
        for ti, t in enumerate(ordered):
            cx0 = self._cell_x(t.bbox[0])
            cx1 = self._cell_x(t.bbox[2])
            cy0 = self._cell_y(t.bbox[1])
            cy1 = self._cell_y(t.bbox[3])
            covered = []
            for cy in range(cy0, cy1 + 1):
                for cx in range(cx0, cx1 + 1):
                    lin = cy * g + cx
                    covered.append(lin)
                    cells.setdefault(lin, []).append(ti)
            tract_cells.append(covered)
        self._cells = cells
        self._tract_cells = tract_cells

        # edge arrays for the vectorized containment test
        ex1, ey1, ex2, ey2 = [], [], [], []
        for t in ordered:
            a1, b1, a2, b2 = [], [], [], []
            for ring in t.rings:
                for i in range(len(ring) - 1):
                    a1.append(ring[i][0])
                    b1.append(ring[i][1])
                    a2.append(ring[i + 1][0])
                    b2.append(ring[i + 1][1])
            ex1.append(np.array(a1, dtype=np.float64))
            ey1.append(np.array(b1, dtype=np.float64))
            ex2.append(np.array(a2, dtype=np.float64))
            ey2.append(np.array(b2, dtype=np.float64))
        self._ex1, self._ey1, self._ex2, self._ey2 = ex1, ey1, ex2, ey2

    def _cell_x(self, lon: float) -> int:
        c = int((lon - self._env[0]) * self._inv_w)
        return min(max(c, 0), self._g - 1)

    def _cell_y(self, lat: float) -> int:
        c = int((lat - self._env[1]) * self._inv_h)
        return min(max(c, 0), self._g - 1)

    def candidates(self, lat: float, lon: float) -> list[int]:
        """Indices of tracts whose bbox contains the point (a superset of
        the true containing tracts), ascending by tract_id."""
        x0, y0, x1, y1 = self._env
        if not (x0 <= lon <= x1 and y0 <= lat <= y1):
            return []
        lin = self._cell_y(lat) * self._g + self._cell_x(lon)
        out = []
        for ti in self._cells.get(lin, ()):
            if (
                self._minx[ti] <= lon <= self._maxx[ti]
                and self._miny[ti] <= lat <= self._maxy[ti]
            ):
                out.append(ti)
        return out

    def assign(self, lat: float, lon: float) -> str | None:
        for ti in self.candidates(lat, lon):
            if point_in_rings(lon, lat, self.tracts[ti].rings):
                return self.tract_ids[ti]
        return None

    def assign_batch(self, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
        """Vectorized assignment: index into ``self.tracts`` per point, or
        -1 for no tract. Point-for-point identical to :meth:`assign`."""
        n = len(lats)
        res = np.full(n, -1, dtype=np.int64)
        if n == 0:
            return res
        x0, y0, x1, y1 = self._env
        env_mask = (lons >= x0) & (lons <= x1) & (lats >= y0) & (lats <= y1)
        pts = np.nonzero(env_mask)[0]
        if pts.size == 0:
            return res
        g = self._g
        cx = np.clip(((lons[pts] - x0) * self._inv_w).astype(np.int64), 0, g - 1)
        cy = np.clip(((lats[pts] - y0) * self._inv_h).astype(np.int64), 0, g - 1)
        cell = cy * g + cx
        order = np.argsort(cell, kind="stable")
        sorted_cells = cell[order]
        pts_sorted = pts[order]
        for ti in range(len(self.tracts)):
            segs = []
            for lin in self._tract_cells[ti]:
                a = np.searchsorted(sorted_cells, lin, side="left")
                b = np.searchsorted(sorted_cells, lin, side="right")
                if a < b:
                    segs.append(pts_sorted[a:b])
            if not segs:
                continue
            cand = segs[0] if len(segs) == 1 else np.concatenate(segs)
            cand = cand[res[cand] == -1]
            if cand.size == 0:
                continue
            x = lons[cand]
            y = lats[cand]
            m = (
                (x >= self._minx[ti])
                & (x <= self._maxx[ti])
                & (y >= self._miny[ti])
                & (y <= self._maxy[ti])
            )
            cand = cand[m]
            if cand.size == 0:
                continue
            x = lons[cand]
            y = lats[cand]
            x1e = self._ex1[ti][:, None]
            y1e = self._ey1[ti][:, None]
            x2e = self._ex2[ti][:, None]
            y2e = self._ey2[ti][:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                straddle = (y1e > y) != (y2e > y)
                xint = (x2e - x1e) * (y - y1e) / (y2e - y1e) + x1e
                crossings = straddle & (x < xint)
            inside = np.bitwise_xor.reduce(crossings, axis=0)
            res[cand[inside]] = ti
        return res


def build_spatial_index(tracts: Iterable[Tract]) -> SpatialIndex:
    return SpatialIndex(tracts)


def assign_tract(lat: float, lon: float, index: SpatialIndex) -> str | None:
    """Tract containing the point, or None; smallest tract_id on ties."""
    return index.assign(lat, lon)
