import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import feature_collection, square_feature
from geoineq import oracles
from geoineq.errors import DegeneratePolygon, EmptyTractSet
from geoineq.geo import (
    EARTH_RADIUS_KM,
    assign_tract,
    build_spatial_index,
    point_in_rings,
    polygon_area_km2,
    tract_from_feature,
)
from geoineq.ingest import parse_tracts


def square_ring(x0, y0, size=1.0):
    return (
        (x0, y0),
        (x0 + size, y0),
        (x0 + size, y0 + size),
        (x0, y0 + size),
        (x0, y0),
    )


def square_tract(tract_id, x0, y0, size=1.0):
    return tract_from_feature(
        parse_tracts(feature_collection([square_feature(tract_id, x0, y0, size)]))[0]
    )


DEG_KM = math.pi / 180.0 * EARTH_RADIUS_KM  # one degree of latitude, km


class TestArea:
    def test_unit_square_at_equator(self):
        # 1x1 degree square centered on the equator
        area = polygon_area_km2([square_ring(0.0, -0.5)])
        assert area == pytest.approx(DEG_KM**2, rel=1e-3)

    def test_unit_square_at_60_degrees(self):
        area = polygon_area_km2([square_ring(0.0, 59.5)])
        assert area == pytest.approx(DEG_KM**2 * 0.5, rel=1e-3)

    def test_sliver_degenerate(self):
        flat = ((0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (0.0, 0.0))
        with pytest.raises(DegeneratePolygon):
            polygon_area_km2([flat])

    def test_hole_subtracts(self):
        outer = square_ring(0.0, -0.5, 1.0)
        hole = square_ring(0.25, -0.25, 0.5)
        with_hole = polygon_area_km2([outer, hole])
        full = polygon_area_km2([outer])
        assert with_hole == pytest.approx(full * 0.75, rel=1e-12)

    def test_vertical_strip_additivity(self):
        # strips share the parent's latitude extent, so the projection is
        # identical and areas must add up almost exactly
        x0, y0, size = 10.0, 40.0, 1.0
        whole = polygon_area_km2([square_ring(x0, y0, size)])
        n = 8
        parts = sum(
            polygon_area_km2(
                [
                    (
                        (x0 + i * size / n, y0),
                        (x0 + (i + 1) * size / n, y0),
                        (x0 + (i + 1) * size / n, y0 + size),
                        (x0 + i * size / n, y0 + size),
                        (x0 + i * size / n, y0),
                    )
                ]
            )
            for i in range(n)
        )
        assert parts == pytest.approx(whole, rel=1e-6)

    def test_area_override_from_properties(self):
        feat = parse_tracts(
            feature_collection([square_feature("T1", 0, 0, props={"area_km2": 3.25})])
        )[0]
        assert tract_from_feature(feat).area_km2 == 3.25

    def test_bad_override_rejected(self):
        feat = parse_tracts(
            feature_collection([square_feature("T1", 0, 0, props={"area_km2": 0.0})])
        )[0]
        with pytest.raises(DegeneratePolygon):
            tract_from_feature(feat)

    def test_multipolygon_area_sums(self):
        a = polygon_area_km2([[square_ring(0, 0)], [square_ring(3, 0)]])
        b = 2 * polygon_area_km2([square_ring(0, 0)])
        assert a == pytest.approx(b, rel=1e-6)


class TestContainment:
    def test_interior_point(self):
        assert point_in_rings(0.5, 0.5, [square_ring(0, 0)])

    def test_outside_point(self):
        assert not point_in_rings(2.0, 2.0, [square_ring(0, 0)])

    def test_hole_excludes(self):
        rings = [square_ring(0, 0, 1.0), square_ring(0.25, 0.25, 0.5)]
        assert not point_in_rings(0.5, 0.5, rings)
        assert point_in_rings(0.1, 0.1, rings)


class TestAssignment:
    def test_unit_square_interior(self):
        index = build_spatial_index([square_tract("T1", 0, 0)])
        assert assign_tract(0.5, 0.5, index) == "T1"

    def test_point_outside(self):
        index = build_spatial_index([square_tract("T1", 0, 0)])
        assert assign_tract(2.0, 2.0, index) is None

    def test_shared_edge_is_deterministic(self):
        # two squares sharing the edge x=1: the even-odd rule puts an
        # on-edge point in exactly one of them, always the same one, and
        # the index must agree with the naive scan
        a = square_tract("A", 0, 0)
        b = square_tract("B", 1, 0)
        index = build_spatial_index([a, b])
        got = assign_tract(0.5, 1.0, index)
        assert got == oracles.assign_tract_naive(0.5, 1.0, [a, b])
        assert got in ("A", "B")
        assert assign_tract(0.5, 1.0, build_spatial_index([b, a])) == got

    def test_overlapping_tracts_smallest_id_wins(self):
        a = square_tract("A", 0, 0)
        b = square_tract("B", 0, 0)  # identical geometry
        index = build_spatial_index([b, a])
        assert assign_tract(0.5, 0.5, index) == "A"
        assert oracles.assign_tract_naive(0.5, 0.5, [a, b]) == "A"

    def test_empty_tract_set(self):
        with pytest.raises(EmptyTractSet):
            build_spatial_index([])

    def test_index_matches_naive_scan_random(self):
        rng = np.random.default_rng(7)
        tracts = [
            square_tract(f"T{i:03d}", (i % 6) * 1.0, (i // 6) * 1.0) for i in range(30)
        ]
        index = build_spatial_index(tracts)
        lons = rng.uniform(-1.0, 7.0, size=3000)
        lats = rng.uniform(-1.0, 6.0, size=3000)
        batch = index.assign_batch(np.asarray(lats), np.asarray(lons))
        for lat, lon, bi in zip(lats, lons, batch):
            want = oracles.assign_tract_naive(lat, lon, tracts)
            got_scalar = index.assign(lat, lon)
            got_batch = index.tract_ids[bi] if bi >= 0 else None
            assert got_scalar == want
            assert got_batch == want

    def test_insertion_order_irrelevant(self):
        rng = np.random.default_rng(3)
        tracts = [square_tract(f"T{i:02d}", float(i % 4), float(i // 4)) for i in range(16)]
        shuffled = list(tracts)
        rng.shuffle(shuffled)
        i1 = build_spatial_index(tracts)
        i2 = build_spatial_index(shuffled)
        pts = rng.uniform(-0.5, 4.5, size=(500, 2))
        for lon, lat in pts:
            assert i1.assign(lat, lon) == i2.assign(lat, lon)

    def test_candidates_superset(self):
        tracts = [square_tract(f"T{i}", float(i), 0.0) for i in range(5)]
        index = build_spatial_index(tracts)
        cands = index.candidates(0.5, 2.5)
        assert any(index.tract_ids[i] == "T2" for i in cands)

    def test_batch_empty(self):
        index = build_spatial_index([square_tract("T1", 0, 0)])
        out = index.assign_batch(np.array([]), np.array([]))
        assert out.size == 0

    def test_holes_in_assignment(self):
        feat = parse_tracts(
            feature_collection(
                [
                    square_feature(
                        "H1", 0, 0,
                        holes=[[[0.4, 0.4], [0.6, 0.4], [0.6, 0.6], [0.4, 0.6], [0.4, 0.4]]],
                    )
                ]
            )
        )[0]
        index = build_spatial_index([tract_from_feature(feat)])
        assert index.assign(0.5, 0.5) is None  # inside the hole
        assert index.assign(0.2, 0.2) == "H1"

    @given(st.lists(st.tuples(st.floats(-2, 8), st.floats(-2, 8)), max_size=40))
    def test_scalar_equals_batch(self, points):
        tracts = [square_tract(f"T{i}", float(i % 3) * 2, float(i // 3) * 2) for i in range(9)]
        index = build_spatial_index(tracts)
        if not points:
            return
        lats = np.array([p[1] for p in points])
        lons = np.array([p[0] for p in points])
        batch = index.assign_batch(lats, lons)
        for (lon, lat), bi in zip(points, batch):
            want = index.assign(lat, lon)
            got = index.tract_ids[bi] if bi >= 0 else None
            assert got == want
