import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import BASE, element, point, random_store
from oracles import brute_force_query, direct_score, naive_augment
from pctree.augment import (
    AugmentConfig,
    AugmentedPoint,
    augment_trajectory,
    candidate_elements,
    filter_point,
    load_augmented,
    save_augmented,
    score_element,
)
from pctree.geo import Trajectory, offset
from pctree.ingest import LandUsageStore


def buf(*rows):
    """rows of (t, acc, ids) -> scoring buffer."""
    return [(point(t, 0, 0, acc), frozenset(ids)) for t, acc, ids in rows]


class TestConfig:
    @pytest.mark.parametrize("kw", [{"n": 0}, {"maxradius": 0}, {"delta": -1}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            AugmentConfig(**kw)


class TestScore:
    def test_unit_case(self):
        assert score_element("A", buf((0, 1.0, "A")), point(0, 0, 0), 10) == pytest.approx(1.0, abs=1e-9)

    def test_two_points(self):
        b = buf((0, 2.0, "A"), (5, 4.0, "A"))
        # (1/2 * 1 + 1/4 * 1/2) * 2
        assert score_element("A", b, point(0, 0, 0), 10) == pytest.approx(1.25, abs=1e-9)

    def test_boundary_point_contributes_nothing(self):
        assert score_element("A", buf((5, 1.0, "A")), point(0, 0, 0), 5) == pytest.approx(0.0, abs=1e-9)

    def test_absent_element_scores_zero(self):
        assert score_element("Z", buf((0, 1.0, "A")), point(0, 0, 0), 5) == 0.0

    @settings(max_examples=300)
    @given(st.lists(st.tuples(st.integers(-300, 300), st.floats(0.5, 100), st.sets(st.sampled_from("ABC"))),
                    max_size=15),
           st.floats(1, 600))
    def test_matches_direct_sum(self, rows, delta):
        rows = [r for r in rows if abs(r[0]) <= delta]
        b = buf(*rows)
        for e in "ABC":
            got = score_element(e, b, point(0, 0, 0), delta)
            assert got >= 0
            assert got == pytest.approx(direct_score(e, [(t, a, ids) for t, a, ids in rows], 0, delta),
                                        rel=1e-12, abs=1e-12)

    @given(st.lists(st.tuples(st.integers(-100, 100), st.floats(0.5, 100)), min_size=1, max_size=10),
           st.integers(-99, 99), st.floats(0.5, 100))
    def test_monotone_in_supporting_points(self, rows, t_new, acc):
        base = buf(*[(t, a, "A") for t, a in rows])
        more = base + buf((t_new, acc, "A"))
        p = point(0, 0, 0)
        assert score_element("A", more, p, 100) >= score_element("A", base, p, 100)

    @given(st.lists(st.tuples(st.integers(-100, 100), st.integers(1, 64), st.sets(st.sampled_from("ABCD"), min_size=1)),
                    min_size=1, max_size=10))
    def test_doubling_accuracy_halves_score_and_keeps_selection(self, rows):
        store = LandUsageStore([element(e, 0, 0) for e in "ABCD"])
        b1 = buf(*[(t, float(a), ids) for t, a, ids in rows])
        b2 = buf(*[(t, 2.0 * a, ids) for t, a, ids in rows])
        pc = point(0, 0, 0)
        for e in "ABCD":
            assert score_element(e, b2, pc, 100) == pytest.approx(score_element(e, b1, pc, 100) / 2, rel=1e-12)
        own = frozenset("ABCD")
        for n in (1, 2, 3):
            cfg = AugmentConfig(n=n, delta=100)
            assert filter_point(pc, own, b1, cfg, store) == filter_point(pc, own, b2, cfg, store)


class TestFilter:
    def test_highest_score_wins(self):
        store = LandUsageStore([element(e, 0, 0) for e in "ABC"])
        # A supported by 3 points, B by 2, C by 1
        b = buf((0, 1.0, "ABC"), (1, 1.0, "AB"), (2, 1.0, "A"))
        assert filter_point(point(0, 0, 0), frozenset("ABC"), b, AugmentConfig(n=1), store) == ("A",)
        assert filter_point(point(0, 0, 0), frozenset("ABC"), b, AugmentConfig(n=2), store) == ("A", "B")

    def test_tie_goes_to_closer_element(self):
        # "far" sorts first by id but is 8 m away; "near" contains the point
        store = LandUsageStore([element("near", 0, 0, 10, 10), element("afar", 23, 0, 20, 20)])
        b = buf((0, 1.0, ["near", "afar"]))
        assert filter_point(point(0, 0, 0), frozenset(["near", "afar"]), b, AugmentConfig(n=1), store) == ("near",)

    def test_full_tie_goes_to_smaller_id(self):
        store = LandUsageStore([element("b", 0, 0), element("a", 0, 0)])
        b = buf((0, 1.0, "ab"))
        assert filter_point(point(0, 0, 0), frozenset("ab"), b, AugmentConfig(n=1), store) == ("a",)

    def test_fewer_candidates_than_n(self):
        store = LandUsageStore([element(e, 0, 0) for e in "AB"])
        b = buf((0, 1.0, "AB"))
        out = filter_point(point(0, 0, 0), frozenset("AB"), b, AugmentConfig(n=5), store)
        assert sorted(out) == ["A", "B"]


class TestCandidates:
    def test_small_accuracy_far_element(self):
        store = LandUsageStore([element("a", 50, 0, 10, 10)])
        assert candidate_elements(point(0, 0, 0, acc=5), store, 50) == frozenset()

    def test_point_inside_small_element(self):
        store = LandUsageStore([element("a", 0, 0, 10, 10)])
        assert candidate_elements(point(0, 0, 0, acc=1), store, 50) == {"a"}

    def test_matches_scan_on_200_points(self):
        store = random_store(2, count=100, extent=500)
        rnd = random.Random(1)
        for _ in range(200):
            p = point(0, rnd.uniform(-600, 600), rnd.uniform(-600, 600), acc=rnd.uniform(1, 80))
            assert candidate_elements(p, store, 50) == brute_force_query(store, p.pos, p.acc, 50)


def wander(seed, n_points, extent=250.0):
    """Random walk with pauses over a small dense area; repeated timestamps allowed."""
    rnd = random.Random(seed)
    t = 0
    x = y = 0.0
    pts = []
    for _ in range(n_points):
        t += rnd.choice([0, 10, 30, 60, 60, 60, 120])
        if rnd.random() < 0.3:
            x = max(-extent, min(extent, x + rnd.gauss(0, 40)))
            y = max(-extent, min(extent, y + rnd.gauss(0, 40)))
        pts.append(point(t, x + rnd.gauss(0, 3), y + rnd.gauss(0, 3), acc=round(rnd.uniform(3, 60), 1)))
    return Trajectory(tuple(pts))


class TestAugmentTrajectory:
    def test_empty(self):
        assert augment_trajectory(Trajectory(()), LandUsageStore([element("a", 0, 0)]), AugmentConfig()) == []

    def test_single_point_single_element(self):
        store = LandUsageStore([element("a", 0, 0)])
        out = augment_trajectory(Trajectory((point(0, 0, 0),)), store, AugmentConfig())
        assert out == [AugmentedPoint(point(0, 0, 0), ("a",))]

    @pytest.mark.parametrize("n,delta", [(1, 300.0), (2, 120.0), (3, 600.0)])
    def test_matches_naive_rescan_on_1000_points(self, n, delta):
        store = random_store(4, count=70, extent=300, big=0.1)
        traj = wander(n, 1000)
        cfg = AugmentConfig(n=n, maxradius=100.0, delta=delta)
        got = augment_trajectory(traj, store, cfg)
        expected = naive_augment(list(traj), store, n, 100.0, delta)
        assert [a.point for a in got] == list(traj)
        assert [a.elements for a in got] == expected
        assert any(len(e) > 1 for e in expected) or n == 1

    def test_output_size_bounded_by_n(self):
        store = random_store(4, count=70, extent=300)
        for n in (1, 2):
            out = augment_trajectory(wander(9, 300), store, AugmentConfig(n=n, maxradius=1000.0))
            assert all(len(a.elements) <= n for a in out)
            assert all(e in store for a in out for e in a.elements)

    def test_file_round_trip(self, tmp_path):
        store = random_store(4, count=70, extent=300)
        out = augment_trajectory(wander(3, 200), store, AugmentConfig(n=2))
        save_augmented(out, tmp_path / "a.csv")
        assert load_augmented(tmp_path / "a.csv") == out
