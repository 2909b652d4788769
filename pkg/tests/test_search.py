import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dijkstra, flood_fill, octile_ref, random_blocked
from srtplan.errors import InvalidStart
from srtplan.grid_model import SQRT2, CellIndex, GridMap, neighbors
from srtplan.search import Outcome, astar, jps, jump, octile, path_cost


def wall_grid():
    blocked = np.zeros((5, 5), dtype=bool)
    blocked[:, 2] = True
    return GridMap.from_blocked(blocked)


def assert_valid_path(grid, res, start, goal):
    assert res.path[0] == tuple(start) and res.path[-1] == tuple(goal)
    for a, b in zip(res.path, res.path[1:]):
        assert b in {n for n, _ in neighbors(grid, a)}
    assert res.cost == pytest.approx(path_cost(res.path), abs=1e-9)


def test_octile_examples():
    assert octile((0, 0), (0, 0)) == 0
    assert octile((0, 0), (3, 1)) == pytest.approx(2 + SQRT2)
    assert octile((2, 2), (5, 5)) == pytest.approx(3 * SQRT2)


@settings(max_examples=200, deadline=None)
@given(st.tuples(st.integers(0, 50), st.integers(0, 50)), st.tuples(st.integers(0, 50), st.integers(0, 50)))
def test_octile_consistent(a, b):
    assert octile(a, b) == pytest.approx(octile_ref(a, b))
    for dc in (-1, 0, 1):
        for dr in (-1, 0, 1):
            c = (a[0] + dc, a[1] + dr)
            step = SQRT2 if dc and dr else (1.0 if dc or dr else 0.0)
            assert octile(a, b) <= step + octile(c, b) + 1e-12


@pytest.mark.parametrize("search", [astar, jps])
def test_empty_three_by_three(search):
    g = GridMap(np.full((3, 3), -1))
    res = search(g, (0, 0), (2, 2))
    assert res.found and res.cost == pytest.approx(2 * SQRT2)
    assert_valid_path(g, res, (0, 0), (2, 2))


def test_jps_expands_no_more_than_astar_on_open_grid():
    g = GridMap(np.full((3, 3), -1))
    assert jps(g, (0, 0), (2, 2)).expanded <= astar(g, (0, 0), (2, 2)).expanded


def test_column_wall_no_path_and_closed_region():
    g = wall_grid()
    res = astar(g, (0, 0), (4, 0), keep_closed=True)
    assert res.outcome is Outcome.NO_PATH and res.path == []
    assert set(res.closed) == {CellIndex(c, r) for c in (0, 1) for r in range(5)}
    assert res.closed[CellIndex(1, 0)] == 3
    assert jps(g, (0, 0), (4, 0)).outcome is Outcome.NO_PATH


def test_blocked_start_raises_blocked_goal_does_not():
    g = wall_grid()
    for search in (astar, jps):
        with pytest.raises(InvalidStart):
            search(g, (2, 0), (4, 0))
        assert not search(g, (0, 0), (2, 4)).found


def test_start_equals_goal():
    g = GridMap(np.full((4, 4), -1))
    for search in (astar, jps):
        res = search(g, (1, 1), (1, 1))
        assert res.found and res.cost == 0 and res.path == [(1, 1)]


def test_astar_matches_dijkstra_on_random_grids():
    rng = np.random.default_rng(11)
    for _ in range(100):
        blocked = random_blocked(rng, 32, 32, 0.2)
        blocked[0, 0] = blocked[31, 31] = False
        g = GridMap.from_blocked(blocked)
        ref = dijkstra(blocked, (0, 0), (31, 31))
        res = astar(g, (0, 0), (31, 31))
        assert res.found == (ref is not None)
        if ref is not None:
            assert abs(res.cost - ref) <= 1e-9
            assert_valid_path(g, res, (0, 0), (31, 31))


def test_jps_matches_astar_on_random_grids():
    rng = np.random.default_rng(12)
    jps_exp, astar_exp = [], []
    for _ in range(100):
        blocked = random_blocked(rng, 64, 64, 0.25)
        free = np.argwhere(~blocked)
        (r0, c0), (r1, c1) = free[rng.choice(len(free), 2, replace=False)]
        g = GridMap.from_blocked(blocked)
        a = astar(g, (c0, r0), (c1, r1))
        j = jps(g, (c0, r0), (c1, r1))
        assert a.found == j.found
        if a.found:
            assert abs(a.cost - j.cost) <= 1e-9
            assert_valid_path(g, j, (c0, r0), (c1, r1))
            jps_exp.append(j.expanded)
            astar_exp.append(a.expanded)
    assert np.mean(jps_exp) < np.mean(astar_exp)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 0.45))
def test_closed_set_is_flood_fill_on_failure(seed, p):
    rng = np.random.default_rng(seed)
    blocked = random_blocked(rng, 20, 16, p)
    blocked[0, 0] = False
    blocked[:, 10] = True  # guarantees the right half is cut off
    g = GridMap.from_blocked(blocked)
    res = astar(g, (0, 0), (19, 15), keep_closed=True)
    assert not res.found
    assert set(res.closed) == flood_fill(blocked, (0, 0))
    for cell, h in res.closed.items():
        assert h == pytest.approx(octile((19, 15), cell))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_three_way_agreement_property(seed):
    rng = np.random.default_rng(seed)
    w, h = int(rng.integers(2, 24)), int(rng.integers(2, 24))
    blocked = random_blocked(rng, w, h, float(rng.uniform(0, 0.5)))
    start = (int(rng.integers(w)), int(rng.integers(h)))
    goal = (int(rng.integers(w)), int(rng.integers(h)))
    blocked[start[1], start[0]] = False
    g = GridMap.from_blocked(blocked)
    ref = dijkstra(blocked, start, goal)
    for search in (astar, jps):
        res = search(g, start, goal)
        assert res.found == (ref is not None)
        if ref is not None:
            assert abs(res.cost - ref) <= 1e-9
            assert_valid_path(g, res, start, goal)


def test_jump_examples():
    g = GridMap(np.full((1, 8), -1))
    assert jump(g, (0, 0), (1, 0), (5, 0)) == (5, 0)
    blocked = np.zeros((3, 6), dtype=bool)
    blocked[1, 3] = True
    g2 = GridMap.from_blocked(blocked)
    assert jump(g2, (0, 1), (1, 0), (5, 2)) is None  # runs into the wall
    # a wall above a scan line creates a forced neighbour once the scan passes it
    blocked = np.zeros((3, 8), dtype=bool)
    blocked[0, 2] = True
    g3 = GridMap.from_blocked(blocked)
    assert jump(g3, (0, 1), (1, 0), (7, 2)) == (3, 1)


def test_jump_points_preserve_optimality_on_many_grids():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        blocked = random_blocked(rng, 12, 12, 0.3)
        blocked[0, 0] = blocked[11, 11] = False
        g = GridMap.from_blocked(blocked)
        a, j = astar(g, (0, 0), (11, 11)), jps(g, (0, 0), (11, 11))
        assert a.found == j.found
        if a.found:
            assert math.isclose(a.cost, j.cost, abs_tol=1e-9)


def test_keep_closed_off_by_default():
    g = wall_grid()
    assert astar(g, (0, 0), (4, 0)).closed is None
