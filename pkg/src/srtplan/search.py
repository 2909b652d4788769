"""A* and Jump Point Search on a :class:`GridMap` with the no-corner-cut move rule.

Both searches run on the padded flat occupancy array of the grid (see
``GridMap.padded``); cells outside the grid read as blocked, which removes all
bounds checks from the inner loops.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np

from .errors import InvalidStart
from .grid_model import SQRT2, CellIndex, GridMap

_K = SQRT2 - 1.0
_INF = math.inf


class Outcome(enum.Enum):
    FOUND = "found"
    NO_PATH = "no_path"


@dataclass
class SearchNode:
    cell: CellIndex
    g: float
    h: float
    parent: CellIndex | None = None

    @property
    def f(self) -> float:
        return self.g + self.h


@dataclass
class SearchResult:
    outcome: Outcome
    path: list[CellIndex] = field(default_factory=list)
    cost: float = math.inf
    expanded: int = 0
    closed: dict[CellIndex, float] | None = None
    elapsed: float = 0.0

    @property
    def found(self) -> bool:
        return self.outcome is Outcome.FOUND


def octile(a, b) -> float:
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    if dx > dy:
        return dx + _K * dy
    return dy + _K * dx


def path_cost(path) -> float:
    total = 0.0
    for (c0, r0), (c1, r1) in zip(path, path[1:]):
        total += SQRT2 if (c0 != c1 and r0 != r1) else 1.0
    return total


def _check_endpoints(grid: GridMap, start, goal):
    if not grid.is_free(start):
        raise InvalidStart(f"start cell {tuple(start)} is not traversable")
    if not grid.in_bounds(goal):
        raise ValueError(f"goal cell {tuple(goal)} is outside the grid")


def _closed_dict(grid: GridMap, cells, goal) -> dict[CellIndex, float]:
    S = grid.stride
    gc, gr = goal
    out = {}
    for i in cells:
        c, r = divmod(i, S)
        c -= 1
        r -= 1
        dx = c - gc if c > gc else gc - c
        dy = r - gr if r > gr else gr - r
        out[CellIndex(c, r)] = dx + _K * dy if dx > dy else dy + _K * dx
    return out


def _unwind(grid: GridMap, parent: dict, end: int) -> list[int]:
    seq = [end]
    while seq[-1] in parent:
        seq.append(parent[seq[-1]])
    seq.reverse()
    return seq


def astar(grid: GridMap, start, goal, keep_closed: bool = False) -> SearchResult:
    """Optimal 8-connected A* with the octile heuristic.

    Ties on f go to the larger g, then to the smaller cell index.  A blocked
    goal is not an error: the search then exhausts the start region, which is
    what blockage analysis needs.
    """
    _check_endpoints(grid, start, goal)
    t0 = time.perf_counter()
    free = grid.padded()
    S = grid.stride
    s = grid.flat(start)
    t = grid.flat(goal)
    tc, tr = divmod(t, S)
    K = _K

    gs = {s: 0.0}
    parent = {}
    closed = bytearray(len(free))
    order = [] if keep_closed else None
    heap = [(octile(start, goal), -0.0, s)]
    expanded = 0
    found = False

    while heap:
        _, ng, i = heappop(heap)
        if closed[i]:
            continue
        closed[i] = 1
        expanded += 1
        if order is not None:
            order.append(i)
        if i == t:
            found = True
            break
        g = -ng
        fe = free[i + S]
        fw = free[i - S]
        fn = free[i + 1]
        fs = free[i - 1]
        cand = []
        if fe:
            cand.append((i + S, 1.0))
        if fw:
            cand.append((i - S, 1.0))
        if fn:
            cand.append((i + 1, 1.0))
        if fs:
            cand.append((i - 1, 1.0))
        if fe and fn and free[i + S + 1]:
            cand.append((i + S + 1, SQRT2))
        if fw and fn and free[i - S + 1]:
            cand.append((i - S + 1, SQRT2))
        if fw and fs and free[i - S - 1]:
            cand.append((i - S - 1, SQRT2))
        if fe and fs and free[i + S - 1]:
            cand.append((i + S - 1, SQRT2))
        for j, cost in cand:
            if closed[j]:
                continue
            g2 = g + cost
            if g2 < gs.get(j, _INF):
                gs[j] = g2
                parent[j] = i
                c, r = divmod(j, S)
                dx = c - tc if c > tc else tc - c
                dy = r - tr if r > tr else tr - r
                h = dx + K * dy if dx > dy else dy + K * dx
                heappush(heap, (g2 + h, -g2, j))

    if found:
        path = [grid.unflat(i) for i in _unwind(grid, parent, t)]
        res = SearchResult(Outcome.FOUND, path, gs[t], expanded)
    else:
        res = SearchResult(Outcome.NO_PATH, [], math.inf, expanded)
    if order is not None:
        res.closed = _closed_dict(grid, order, goal)
    res.elapsed = time.perf_counter() - t0
    return res


# --- Jump Point Search -----------------------------------------------------
#
# Straight scans are done a whole row or column at a time on Python integers
# used as bitsets (block-based scanning).  For a row r:
#   free bit c  -> cell (c, r) traversable
#   forced bit c (moving +col) -> (c, r±1) free while (c-1, r±1) blocked
# so the first interesting cell of a scan is the lowest/highest set bit of
# blocked | forced | goal past the scan origin.


class _JumpTables:
    __slots__ = ("w", "h", "rows", "cols", "row_fwd", "row_bwd", "col_fwd", "col_bwd", "row_blk", "col_blk")

    def __init__(self, grid: GridMap):
        w, h = grid.width, grid.height
        self.w, self.h = w, h
        free = grid.traversable
        self.rows = [int.from_bytes(b, "little") for b in np.packbits(free, axis=1, bitorder="little")]
        self.cols = [int.from_bytes(b, "little") for b in np.packbits(free.T, axis=1, bitorder="little")]
        self.row_fwd, self.row_bwd, self.row_blk = self._masks(self.rows, w)
        self.col_fwd, self.col_bwd, self.col_blk = self._masks(self.cols, h)

    @staticmethod
    def _masks(lines, n):
        full = (1 << n) - 1
        fwd, bwd, blk = [], [], []
        for k, line in enumerate(lines):
            a = lines[k + 1] if k + 1 < len(lines) else 0
            b = lines[k - 1] if k > 0 else 0
            fwd.append(((a & ~(a << 1)) | (b & ~(b << 1))) & full)
            bwd.append(((a & ~(a >> 1)) | (b & ~(b >> 1))) & full)
            # bit n marks the far border so a forward scan always terminates
            blk.append((~line & full) | (1 << n))
        return fwd, bwd, blk


def _tables(grid: GridMap) -> _JumpTables:
    tab = getattr(grid, "_jump_tables", None)
    if tab is None:
        tab = _JumpTables(grid)
        grid._jump_tables = tab
    return tab


def _line_scan(pos, step, blk, fwd, bwd, goal_pos) -> int:
    """First jump position along one line from ``pos`` (exclusive), or -1."""
    if step > 0:
        m = (blk | fwd) >> (pos + 1)
        p = pos + (m & -m).bit_length()
        if 0 <= goal_pos < p and goal_pos > pos:
            return goal_pos
        return -1 if (blk >> p) & 1 else p
    m = (blk | bwd) & ((1 << pos) - 1)
    p = m.bit_length() - 1  # -1 when only the near border remains
    if goal_pos > p and goal_pos < pos:
        return goal_pos
    if p < 0 or (blk >> p) & 1:
        return -1
    return p


def _scan_col_dir(tab, c, r, dc, goal) -> int:
    """Scan along a row (changing col) from (c, r); returns column or -1."""
    gp = goal[0] if goal[1] == r else -1
    return _line_scan(c, dc, tab.row_blk[r], tab.row_fwd[r], tab.row_bwd[r], gp)


def _scan_row_dir(tab, c, r, dr, goal) -> int:
    gp = goal[1] if goal[0] == c else -1
    return _line_scan(r, dr, tab.col_blk[c], tab.col_fwd[c], tab.col_bwd[c], gp)


def _free_at(tab, c, r) -> bool:
    return 0 <= c < tab.w and 0 <= r < tab.h and (tab.rows[r] >> c) & 1 == 1


def _jump_cells(tab, c, r, dc, dr, goal):
    if dc and dr:
        rows = tab.rows
        w, h = tab.w, tab.h
        while True:
            c += dc
            r += dr
            if not (0 <= c < w and 0 <= r < h and (rows[r] >> c) & 1):
                return None
            if c == goal[0] and r == goal[1]:
                return (c, r)
            if _scan_col_dir(tab, c, r, dc, goal) >= 0 or _scan_row_dir(tab, c, r, dr, goal) >= 0:
                return (c, r)
            if not (_free_at(tab, c + dc, r) and _free_at(tab, c, r + dr)):
                return None
    if dc:
        if not (0 <= r < tab.h):
            return None
        p = _scan_col_dir(tab, c, r, dc, goal)
        return None if p < 0 else (p, r)
    if not (0 <= c < tab.w):
        return None
    p = _scan_row_dir(tab, c, r, dr, goal)
    return None if p < 0 else (c, p)


def jump(grid: GridMap, frm, direction, goal) -> CellIndex | None:
    """Next jump point from ``frm`` along one of the 8 unit moves, or None."""
    dc, dr = direction
    if (dc, dr) == (0, 0) or abs(dc) > 1 or abs(dr) > 1:
        raise ValueError(f"not a unit move: {direction}")
    j = _jump_cells(_tables(grid), int(frm[0]), int(frm[1]), dc, dr, (int(goal[0]), int(goal[1])))
    return None if j is None else CellIndex(*j)


def _successor_dirs(tab, c, r, dc, dr):
    """Pruned directions for a node entered with move (dc, dr); (0, 0) means start."""
    f = _free_at
    out = []
    if dc == 0 and dr == 0:
        fe, fw, fn, fs = f(tab, c + 1, r), f(tab, c - 1, r), f(tab, c, r + 1), f(tab, c, r - 1)
        if fe:
            out.append((1, 0))
        if fw:
            out.append((-1, 0))
        if fn:
            out.append((0, 1))
        if fs:
            out.append((0, -1))
        if fe and fn:
            out.append((1, 1))
        if fw and fn:
            out.append((-1, 1))
        if fw and fs:
            out.append((-1, -1))
        if fe and fs:
            out.append((1, -1))
        return out
    if dc and dr:
        wc = f(tab, c + dc, r)
        wr = f(tab, c, r + dr)
        if wc:
            out.append((dc, 0))
        if wr:
            out.append((0, dr))
        if wc and wr:
            out.append((dc, dr))
        return out
    if dc:
        ahead = f(tab, c + dc, r)
        up = f(tab, c, r + 1)
        down = f(tab, c, r - 1)
        if ahead:
            out.append((dc, 0))
            if up:
                out.append((dc, 1))
            if down:
                out.append((dc, -1))
        if up:
            out.append((0, 1))
        if down:
            out.append((0, -1))
        return out
    ahead = f(tab, c, r + dr)
    right = f(tab, c + 1, r)
    left = f(tab, c - 1, r)
    if ahead:
        out.append((0, dr))
        if right:
            out.append((1, dr))
        if left:
            out.append((-1, dr))
    if right:
        out.append((1, 0))
    if left:
        out.append((-1, 0))
    return out


def _interpolate(points) -> list[CellIndex]:
    cells = [CellIndex(*points[0])]
    for (c0, r0), (c1, r1) in zip(points, points[1:]):
        sc = (c1 > c0) - (c1 < c0)
        sr = (r1 > r0) - (r1 < r0)
        c, r = c0, r0
        while (c, r) != (c1, r1):
            c += sc
            r += sr
            cells.append(CellIndex(c, r))
    return cells


def jps(grid: GridMap, start, goal, keep_closed: bool = False) -> SearchResult:
    """Jump Point Search adapted to the no-corner-cut neighbourhood.

    The returned path is cell-by-cell (jump segments interpolated).  ``closed``
    holds expanded jump points only.
    """
    _check_endpoints(grid, start, goal)
    t0 = time.perf_counter()
    tab = _tables(grid)
    s = (int(start[0]), int(start[1]))
    t = (int(goal[0]), int(goal[1]))
    tc, tr = t
    K = _K

    gs = {s: 0.0}
    parent = {}
    closed = set()
    order = [] if keep_closed else None
    heap = [(octile(s, t), -0.0, s)]
    expanded = 0
    found = False

    while heap:
        _, ng, node = heappop(heap)
        if node in closed:
            continue
        closed.add(node)
        expanded += 1
        if order is not None:
            order.append(node)
        if node == t:
            found = True
            break
        g = -ng
        ic, ir = node
        p = parent.get(node)
        if p is None:
            dc = dr = 0
        else:
            dc = (ic > p[0]) - (ic < p[0])
            dr = (ir > p[1]) - (ir < p[1])
        for ddc, ddr in _successor_dirs(tab, ic, ir, dc, dr):
            j = _jump_cells(tab, ic, ir, ddc, ddr, t)
            if j is None or j in closed:
                continue
            jc, jr = j
            dx = jc - ic if jc > ic else ic - jc
            dy = jr - ir if jr > ir else ir - jr
            g2 = g + (dx + K * dy if dx > dy else dy + K * dx)
            if g2 < gs.get(j, _INF):
                gs[j] = g2
                parent[j] = node
                dx = jc - tc if jc > tc else tc - jc
                dy = jr - tr if jr > tr else tr - jr
                heappush(heap, (g2 + (dx + K * dy if dx > dy else dy + K * dx), -g2, j))

    if found:
        pts = [t]
        while pts[-1] in parent:
            pts.append(parent[pts[-1]])
        pts.reverse()
        path = _interpolate(pts)
        res = SearchResult(Outcome.FOUND, path, path_cost(path), expanded)
    else:
        res = SearchResult(Outcome.NO_PATH, [], math.inf, expanded)
    if order is not None:
        res.closed = {CellIndex(*n): octile(n, t) for n in order}
    res.elapsed = time.perf_counter() - t0
    return res
