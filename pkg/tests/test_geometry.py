import math
import random

import pytest

from slidescore.geometry import (
    CollisionEvent,
    GeometryConfig,
    NoContentError,
    aspect_compliance,
    collision_score,
    detect_collisions,
    extract_visual_units,
    geometry_report,
    imbalance_distance,
    visual_centroid,
)
from slidescore.snapshot import BBox

from geometry_oracle import brute_force_events
from snapshot_factory import node, random_snapshot, simple_snapshot

CFG = GeometryConfig()


def units_of(snap):
    return extract_visual_units(snap, CFG)


class TestExtractVisualUnits:
    def test_single_div(self):
        snap = simple_snapshot([node(0, None, "div", 0, 0, 200, 100)])
        units = units_of(snap)
        assert len(units) == 1
        assert units[0].kind == "container"

    def test_svg_collapse(self):
        nodes = [node(0, None, "body", 0, 0, 1280, 720),
                 node(1, 0, "svg", 100, 100, 300, 300)]
        nodes += [node(i, 1, "path", 110 + i, 110, 50, 50, is_svg_primitive=True)
                  for i in range(2, 42)]
        units = units_of(simple_snapshot(nodes))
        assert [u.kind for u in units] == ["container", "vector"]

    def test_hidden_and_watermark_fixture(self):
        nodes = [node(0, None, "body", 0, 0, 1280, 720)]
        for i in range(1, 7):
            nodes.append(node(i, 0, "p", 50 * i, 100, 120, 40, has_visible_text=True))
        nodes.append(node(7, 0, "div", 0, 0, 100, 100, visible=False))
        nodes.append(node(8, 0, "div", 0, 0, 100, 100, opacity=0.0, visible=False))
        nodes.append(node(9, 0, "div", 400, 300, 200, 80, class_hint="brand watermark"))
        units = units_of(simple_snapshot(nodes))
        assert len(units) == 8  # body + 6 paragraphs + watermark
        assert sum(u.exempt for u in units) == 1

    def test_drops_tiny_and_nonsemantic(self):
        nodes = [node(0, None, "body", 0, 0, 1280, 720),
                 node(1, 0, "script", 0, 0, 500, 500),
                 node(2, 0, "div", 10, 10, 3, 3)]
        assert len(units_of(simple_snapshot(nodes))) == 1

    def test_empty_snapshot(self):
        assert units_of(simple_snapshot([])) == []


class TestDetectCollisions:
    def test_disjoint_siblings(self):
        snap = simple_snapshot([
            node(0, None, "body", 0, 0, 1280, 720),
            node(1, 0, "div", 0, 0, 100, 100),
            node(2, 0, "div", 200, 0, 100, 100),
        ])
        units = units_of(snap)
        assert detect_collisions(units, 1280, 720, CFG) == []

    def test_parent_escape_geometry(self):
        snap = simple_snapshot([
            node(0, None, "div", 0, 0, 100, 100),
            node(1, 0, "p", 50, 50, 100, 100, has_visible_text=True),
        ], canvas=(1280, 720))
        events = detect_collisions(units_of(snap), 1280, 720, CFG)
        kinds = [e.kind for e in events]
        assert kinds.count("parent_escape") == 1
        escape = next(e for e in events if e.kind == "parent_escape")
        assert escape.overlap_area_px2 == pytest.approx(100 * 100 - 50 * 50)

    def test_ancestor_overlap_not_reported(self):
        snap = simple_snapshot([
            node(0, None, "div", 0, 0, 500, 500),
            node(1, 0, "p", 10, 10, 400, 400, has_visible_text=True),
        ])
        events = detect_collisions(units_of(snap), 1280, 720, CFG)
        assert all(e.kind != "overlap" for e in events)

    def test_canvas_overflow(self):
        snap = simple_snapshot([node(0, None, "div", 1200, 0, 200, 100)])
        events = detect_collisions(units_of(snap), 1280, 720, CFG)
        assert [e.kind for e in events] == ["canvas_overflow"]
        assert events[0].overlap_area_px2 == pytest.approx(120 * 100)

    def test_matches_brute_force_on_random_snapshots(self):
        rng = random.Random(2024)
        for _ in range(200):
            snap = random_snapshot(rng)
            units = units_of(snap)
            got = [(e.kind, e.unit_a, e.unit_b,
                    pytest.approx(e.overlap_area_px2), pytest.approx(e.reference_area_px2))
                   for e in detect_collisions(units, 1280, 720, CFG)]
            expected = brute_force_events(units, 1280, 720, CFG)
            assert sorted(got, key=str) == sorted(expected, key=str)

    def test_permutation_invariance(self):
        rng = random.Random(7)
        snap = random_snapshot(rng)
        units = units_of(snap)
        events = detect_collisions(units, 1280, 720, CFG)
        shuffled = units[:]
        rng.shuffle(shuffled)
        events2 = detect_collisions(shuffled, 1280, 720, CFG)
        key = lambda e: (e.kind, e.unit_a, e.unit_b)
        assert sorted(map(key, events)) == sorted(map(key, events2))


class TestCollisionScore:
    def test_no_events(self):
        assert collision_score([]) == 0.0

    def test_full_containment_saturates(self):
        e = CollisionEvent("overlap", 0, 1, 400.0, 400.0, 1.0)
        assert collision_score([e]) == 1.0

    def test_weighted_sum(self):
        events = [
            CollisionEvent("overlap", 0, 1, 200.0, 400.0, 1.0),
            CollisionEvent("overlap", 2, 3, 50.0, 100.0, 1.0),
            CollisionEvent("canvas_overflow", 4, None, 25.0, 100.0, 1.5),
        ]
        assert collision_score(events) == pytest.approx(1.375)

    def test_additive_over_disjoint_sets(self):
        a = [CollisionEvent("overlap", 0, 1, 100.0, 400.0, 1.0)]
        b = [CollisionEvent("parent_escape", 2, 0, 30.0, 90.0, 0.5)]
        assert collision_score(a + b) == pytest.approx(
            collision_score(a) + collision_score(b))


class TestCentroidAndImbalance:
    def test_centered_unit(self):
        snap = simple_snapshot([node(0, None, "div", 540, 310, 200, 100)])
        assert visual_centroid(units_of(snap), 1280, 720) == pytest.approx((0.5, 0.5))

    def test_symmetric_pair(self):
        snap = simple_snapshot([
            node(0, None, "body", 0, 0, 1280, 720),
            node(1, 0, "p", 220, 200, 200, 100, has_visible_text=True),
            node(2, 0, "p", 860, 200, 200, 100, has_visible_text=True),
        ])
        x, _ = visual_centroid(units_of(snap), 1280, 720)
        assert x == pytest.approx(0.5)

    def test_area_weighted_mean(self):
        # areas 100/200/300 at x-centers 0.2/0.5/0.8 -> x = 0.6
        snap = simple_snapshot([
            node(0, None, "p", 195, 355, 10, 10, has_visible_text=True),
            node(1, None, "p", 490, 355, 20, 10, has_visible_text=True),
            node(2, None, "p", 790, 352.5, 20, 15, has_visible_text=True),
        ], canvas=(1000, 720))
        x, y = visual_centroid(units_of(simple_snapshot(snap.nodes, (1000, 720))), 1000, 720)
        assert x == pytest.approx(0.6)

    def test_scale_invariance(self):
        nodes = [node(0, None, "body", 0, 0, 1000, 500),
                 node(1, 0, "p", 100, 50, 300, 100, has_visible_text=True)]
        c1 = visual_centroid(units_of(simple_snapshot(nodes, (1000, 500))), 1000, 500)
        scaled = [node(0, None, "body", 0, 0, 2000, 1000),
                  node(1, 0, "p", 200, 100, 600, 200, has_visible_text=True)]
        c2 = visual_centroid(units_of(simple_snapshot(scaled, (2000, 1000))), 2000, 1000)
        assert c1 == pytest.approx(c2)

    def test_no_content(self):
        with pytest.raises(NoContentError):
            visual_centroid([], 1280, 720)

    @pytest.mark.parametrize("centroid,expected", [
        ((0.5, 0.5), 0.0),
        ((0.55, 0.5), 1.0),
        ((0.55, 0.65), math.sqrt(2)),
    ])
    def test_imbalance_values(self, centroid, expected):
        assert imbalance_distance(centroid) == pytest.approx(expected, abs=1e-12)

    def test_imbalance_monotone(self):
        base = imbalance_distance((0.52, 0.5))
        assert imbalance_distance((0.56, 0.5)) > base
        assert imbalance_distance((0.52, 0.6)) > imbalance_distance((0.52, 0.55))


class TestAspectCompliance:
    @pytest.mark.parametrize("w,h,tol,expected", [
        (1280, 720, 0.01, True),
        (1280, 760, 0.05, False),
        (1280, 760, 0.06, True),
        (1280, 726, 0.01, True),
    ])
    def test_cases(self, w, h, tol, expected):
        assert aspect_compliance(w, h, tol) is expected

    def test_invalid(self):
        with pytest.raises(ValueError):
            aspect_compliance(0, 720, 0.01)


class TestGeometryReport:
    def test_report_shape(self):
        snap = random_snapshot(random.Random(1))
        rep = geometry_report(snap)
        assert set(rep) == {"collision_score", "events", "centroid",
                            "imbalance_d", "unit_count", "exempt_count"}
        assert rep["collision_score"] >= 0
