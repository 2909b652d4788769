"""Blocking-obstacle identification after a failed search.

The pipeline is: lowest-h cell of A*'s CLOSED set (the seed), a wall-following
walk from the seed that marks the obstacle's CONTOUR, and a destroyability
verdict over the obstacles the contour wraps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import ndimage

from .errors import NoClosedSet, NotASeed
from .grid_model import CellIndex, GridMap

# counter-clockwise: +col, +row, -col, -row
_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))
_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass
class ContourReport:
    seed: CellIndex
    contour: set[CellIndex]
    obstacle_ids: set[int]
    destroyable: bool
    reachable_contour: set[CellIndex] = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "seed": list(self.seed),
            "contour": sorted([list(c) for c in self.contour]),
            "reachable_contour": sorted([list(c) for c in self.reachable_contour]),
            "obstacle_ids": sorted(self.obstacle_ids),
            "destroyable": self.destroyable,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ContourReport":
        return cls(
            CellIndex(*data["seed"]),
            {CellIndex(*c) for c in data["contour"]},
            set(data["obstacle_ids"]),
            bool(data["destroyable"]),
            {CellIndex(*c) for c in data.get("reachable_contour", [])},
        )


def find_seed_cell(closed, goal=None) -> CellIndex:
    """CLOSED cell with the lowest h-value; ties go to the smallest cell index.

    ``closed`` is a mapping cell -> h or an iterable of (cell, h) pairs.
    """
    if isinstance(closed, Mapping):
        if not closed:
            raise NoClosedSet("CLOSED set is empty")
        h_min = min(closed.values())
        return CellIndex(*min(c for c, h in closed.items() if h == h_min))
    best_key = None
    for cell, h in closed:
        key = (h, tuple(cell))
        if best_key is None or key < best_key:
            best_key = key
    if best_key is None:
        raise NoClosedSet("CLOSED set is empty")
    return CellIndex(*best_key[1])


def _touching_components(grid: GridMap, seed) -> tuple[np.ndarray, set[int]]:
    blocked = grid.owner >= 0
    labels, _ = ndimage.label(blocked, structure=_EIGHT)
    c, r = seed
    touched = set()
    for dc in (-1, 0, 1):
        for dr in (-1, 0, 1):
            n = (c + dc, r + dr)
            if (dc or dr) and grid.in_bounds(n) and labels[n[1], n[0]]:
                touched.add(int(labels[n[1], n[0]]))
    return labels, touched


def trace_contour(grid: GridMap, seed) -> set[CellIndex]:
    """CONTOUR of the blocked component(s) touching ``seed``, by wall following.

    The walk moves over free cells that are 8-adjacent to the component and
    treats everything else (other cells, the grid border) as wall.  It keeps the
    wall on its right hand and stops when it is back in its starting pose.
    """
    seed = CellIndex(*seed)
    if not grid.is_free(seed):
        raise NotASeed(f"seed {tuple(seed)} is not traversable")
    labels, touched = _touching_components(grid, seed)
    if not touched:
        raise NotASeed(f"seed {tuple(seed)} is not adjacent to a blocked cell")
    contour, _ = _walk(grid, labels, touched, seed)
    return contour


def _walk(grid: GridMap, labels: np.ndarray, touched: set[int], seed: CellIndex):
    w, h = grid.width, grid.height
    owner = grid.owner
    member: dict[tuple[int, int], bool] = {}

    def inside(cell) -> bool:
        v = member.get(cell)
        if v is None:
            c, r = cell
            v = False
            if 0 <= c < w and 0 <= r < h and owner[r, c] < 0:
                for dc in (-1, 0, 1):
                    for dr in (-1, 0, 1):
                        cc, rr = c + dc, r + dr
                        if 0 <= cc < w and 0 <= rr < h and labels[rr, cc] in touched:
                            v = True
                            break
                    if v:
                        break
            member[cell] = v
        return v

    def in_component(c, r) -> bool:
        return 0 <= c < w and 0 <= r < h and labels[r, c] in touched

    # starting poses: a cell of the component directly on the right hand,
    # either at the seed or at the side cells of a diagonal neighbour
    s = tuple(seed)
    starts = []
    for d, (dc, dr) in enumerate(_DIRS):
        if in_component(s[0] + dc, s[1] + dr):
            starts.append((s, (d + 1) % 4))
    for dc, dr in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
        cc, rr = s[0] + dc, s[1] + dr
        if in_component(cc, rr):
            for side, wall in (((cc, s[1]), (0, dr)), ((s[0], rr), (dc, 0))):
                if inside(side):
                    starts.append((side, (_DIRS.index(wall) + 1) % 4))

    visited: set[tuple[int, int]] = {s}
    seen_poses: set[tuple] = set()
    steps = 0
    for pose in starts:
        if pose in seen_poses:
            continue
        cur = pose
        while True:
            seen_poses.add(cur)
            (c, r), hd = cur
            visited.add((c, r))
            dc, dr = _DIRS[hd]
            ahead = (c + dc, r + dr)
            if not inside(ahead):
                cur = ((c, r), (hd + 1) % 4)
            else:
                rc, rr = _DIRS[(hd - 1) % 4]
                corner = (ahead[0] + rc, ahead[1] + rr)
                if not inside(corner):
                    cur = (ahead, hd)
                else:
                    visited.add(ahead)
                    cur = (corner, (hd - 1) % 4)
            steps += 1
            if cur == pose:
                break
    return {CellIndex(*c) for c in visited}, steps


def classify(
    grid: GridMap,
    contour: Iterable,
    closed,
    seed=None,
) -> ContourReport:
    """Collect the obstacles wrapped by ``contour`` and decide destroyability.

    Only blocked cells of the 8-connected component(s) touching ``seed`` count;
    without a seed every blocked cell next to the contour counts.
    """
    contour = {CellIndex(*c) for c in contour}
    if seed is None:
        comp_mask = grid.owner >= 0
    else:
        labels, touched = _touching_components(grid, CellIndex(*seed))
        comp_mask = np.isin(labels, list(touched))
    return _classify(grid, contour, closed, seed, comp_mask)


def _classify(grid: GridMap, contour: set, closed, seed, comp_mask: np.ndarray) -> ContourReport:
    on_contour = np.zeros(grid.owner.shape, dtype=bool)
    if contour:
        cols, rows = np.array(sorted(contour)).T
        on_contour[rows, cols] = True
    near = ndimage.binary_dilation(on_contour, structure=_EIGHT) & comp_mask
    ids = {int(i) for i in np.unique(grid.owner[near]) if i >= 0}
    destroyable = bool(ids) and all(grid.destroyable.get(i, False) for i in ids)
    closed_cells = closed.keys() if isinstance(closed, Mapping) else {CellIndex(*c) for c in closed}
    reachable = contour & closed_cells
    seed = CellIndex(*seed) if seed is not None else min(contour)
    return ContourReport(seed, contour, ids, destroyable, set(reachable))


def detect_blockage(grid: GridMap, closed, goal=None) -> ContourReport:
    """Seed selection, contour tracing and classification in one call."""
    seed = find_seed_cell(closed, goal)
    if not grid.is_free(seed):
        raise NotASeed(f"seed {tuple(seed)} is not traversable")
    labels, touched = _touching_components(grid, seed)
    if not touched:
        raise NotASeed(f"seed {tuple(seed)} is not adjacent to a blocked cell")
    contour, _ = _walk(grid, labels, touched, seed)
    return _classify(grid, contour, closed, seed, np.isin(labels, list(touched)))
