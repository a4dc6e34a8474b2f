"""Independent reference implementations used as test oracles.

These deliberately do not share code with the production paths: Gini is
the O(n^2) pairwise sum, containment is a textbook ray cast over every
polygon with no index, and so on. Synthetic-city ground truth is
computed with these, so the pipeline is always checked against a second
route.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .geo import Tract


def gini_pairwise(values: Sequence[float]) -> float:
    """Brute-force population Gini: sum_ij |x_i - x_j| / (2 n^2 mu)."""
    n = len(values)
    total = math.fsum(values)
    if n < 2 or total <= 0:
        raise ValueError("need n >= 2 and a positive total")
    diff_sum = math.fsum(
        abs(values[i] - values[j]) for i in range(n) for j in range(n)
    )
    mu = total / n
    return diff_sum / (2.0 * n * n * mu)


def lorenz_trapezoid_gini(points: Sequence[tuple[float, float]]) -> float:
    """1 - 2 * (trapezoid area under a piecewise-linear Lorenz curve)."""
    area = math.fsum(
        (points[i + 1][0] - points[i][0]) * (points[i + 1][1] + points[i][1]) * 0.5
        for i in range(len(points) - 1)
    )
    return 1.0 - 2.0 * area


def hoover_direct(values: Sequence[float]) -> float:
    total = math.fsum(values)
    if total <= 0:
        raise ValueError("positive total required")
    n = len(values)
    return 0.5 * math.fsum(abs(v / total - 1.0 / n) for v in sorted(values))


def theil_direct(values: Sequence[float]) -> float:
    total = math.fsum(values)
    n = len(values)
    if n < 2 or total <= 0:
        raise ValueError("need n >= 2 and a positive total")
    mu = total / n
    return math.fsum((v / mu) * math.log(v / mu) for v in sorted(values) if v > 0) / n


def percentile_nearest_rank(values: Sequence[float], p: float) -> float:
    """Value at the p-th percentile: 1-based element ceil(p/100 * n) of
    the ascending sort."""
    xs = sorted(values)
    idx = max(1, math.ceil(p * len(xs) / 100.0))
    return xs[idx - 1]


def percentile_ratio_direct(values: Sequence[float], hi: float, lo: float) -> float | None:
    v_lo = percentile_nearest_rank(values, lo)
    if v_lo == 0:
        return None
    return percentile_nearest_rank(values, hi) / v_lo


def relative_entropy_direct(counts: Iterable[float]) -> float:
    positive = sorted(c for c in counts if c > 0)
    if not positive:
        raise ValueError("no positive counts")
    if len(positive) == 1:
        return 0.0
    total = math.fsum(positive)
    h = -math.fsum((c / total) * math.log(c / total) for c in positive)
    return min(1.0, max(0.0, h / math.log(len(positive))))


def index_suite_direct(values: Sequence[float]) -> dict[str, float | None]:
    """All five reference indexes as a plain dict (JSON-friendly)."""
    return {
        "gini": gini_pairwise(values),
        "ratio_80_20": percentile_ratio_direct(values, 80.0, 20.0),
        "ratio_90_10": percentile_ratio_direct(values, 90.0, 10.0),
        "hoover": hoover_direct(values),
        "theil": theil_direct(values),
    }


def _ray_cast(lon: float, lat: float, ring) -> bool:
    inside = False
    j = len(ring) - 2  # last distinct vertex (ring is closed)
    for i in range(len(ring) - 1):
        xi, yi = ring[i]
        xj, yj = ring[j]
        if (yi > lat) != (yj > lat) and lon < (xj - xi) * (lat - yi) / (yj - yi) + xi:
            inside = not inside
        j = i
    return inside


def assign_tract_naive(lat: float, lon: float, tracts: Iterable[Tract]) -> str | None:
    """O(n) reference assignment: ray-cast against every ring of every
    tract in ascending tract_id order; first containing tract wins."""
    for tract in sorted(tracts, key=lambda t: t.tract_id):
        inside = False
        for ring in tract.rings:
            if _ray_cast(lon, lat, ring):
                inside = not inside
        if inside:
            return tract.tract_id
    return None


def assign_batch_naive(lats, lons, tracts: Iterable[Tract]):
    """All-polygons scan over every point: no grid, no bbox pruning, no
    candidate sets. Every tract is tested against every still-unassigned
    point in ascending tract_id order. Returns tract_id or None per point.

    numpy is used only to batch the identical even-odd test across
    points; nothing is ever skipped, which is the property the spatial
    index is checked against.
    """
    import numpy as np

    lats = np.asarray(lats, dtype=np.float64)
    lons = np.asarray(lons, dtype=np.float64)
    out: list[str | None] = [None] * len(lats)
    unassigned = np.ones(len(lats), dtype=bool)
    for tract in sorted(tracts, key=lambda t: t.tract_id):
        idx = np.nonzero(unassigned)[0]
        if idx.size == 0:
            break
        x = lons[idx]
        y = lats[idx]
        inside = np.zeros(idx.size, dtype=bool)
        for ring in tract.rings:
            for i in range(len(ring) - 1):
                x1, y1 = ring[i]
                x2, y2 = ring[i + 1]
                if y1 == y2:
                    continue
                straddle = (y1 > y) != (y2 > y)
                xint = (x2 - x1) * (y - y1) / (y2 - y1) + x1
                inside ^= straddle & (x < xint)
        hit = idx[inside]
        for i in hit:
            out[i] = tract.tract_id
        unassigned[hit] = False
    return out
