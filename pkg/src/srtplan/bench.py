"""Blockage benchmarks on city-like grids, and plain-text / PPM rendering.

A trial places start and goal in opposite border bands, walls the goal off
with one of the blockage shapes, then times the three phases of the failure
pipeline: jump point search (which must fail), A* with CLOSED kept, and
blockage detection.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .blockage import detect_blockage
from .errors import GeometryError, RenderError
from .grid_model import CellIndex, GridMap, load_grid
from .search import astar, jps, octile

# --- blockage kinds --------------------------------------------------------------


@dataclass(frozen=True)
class BlockageKind:
    name: str  # "half" | "quarter" | "bagel"
    side: int | None = None

    def __post_init__(self):
        if self.name not in ("half", "quarter", "bagel"):
            raise ValueError(f"unknown blockage kind {self.name!r}")
        if self.name == "bagel" and (self.side is None or self.side < 3):
            raise ValueError("a bagel ring needs side >= 3")

    def __str__(self):
        return f"bagel-{self.side}" if self.name == "bagel" else self.name

    @classmethod
    def parse(cls, text: str) -> "BlockageKind":
        text = text.strip().lower()
        if text.startswith("bagel"):
            return cls("bagel", int(text.split("-", 1)[1]))
        return cls(text)

    def scaled(self, width: int, reference: int = 500) -> "BlockageKind":
        """Same blockage for a grid ``width`` wide, keeping the side/width ratio."""
        if self.name != "bagel":
            return self
        return BlockageKind("bagel", max(3, round(self.side * width / reference)))


HALF = BlockageKind("half")
QUARTER = BlockageKind("quarter")


def Bagel(side: int) -> BlockageKind:
    return BlockageKind("bagel", side)


PAPER_KINDS = (HALF, QUARTER, Bagel(100), Bagel(50), Bagel(10))


def _components(grid: GridMap) -> np.ndarray:
    # under the no-corner-cutting rule reachability is 4-connectivity
    labels, _ = ndimage.label(grid.traversable)
    return labels


def generate_blockage(
    grid: GridMap, kind: BlockageKind, start, goal, destroyable: bool = False
) -> GridMap:
    """Wall ``goal`` off from ``start``; the added cells form one new obstacle."""
    start, goal = CellIndex(*start), CellIndex(*goal)
    w, h = grid.width, grid.height
    mask = np.zeros((h, w), dtype=bool)
    if kind.name == "half":
        if abs(goal.col - start.col) >= abs(goal.row - start.row):
            lo, hi = sorted((start.col, goal.col))
            m = min(max(w // 2, lo + 1), hi - 1)
            if not lo < m < hi:
                raise GeometryError("start and goal are too close for a dividing line")
            mask[:, m] = True
        else:
            lo, hi = sorted((start.row, goal.row))
            m = min(max(h // 2, lo + 1), hi - 1)
            if not lo < m < hi:
                raise GeometryError("start and goal are too close for a dividing line")
            mask[m, :] = True
    elif kind.name == "quarter":
        mc, mr = w // 2, h // 2
        right, top = goal.col > mc, goal.row > mr
        if goal.col == mc or goal.row == mr:
            raise GeometryError("goal lies on a quarter boundary line")
        cols = slice(mc + 1, w) if right else slice(0, mc)
        rows = slice(mr + 1, h) if top else slice(0, mr)
        mask[rows, mc] = True
        mask[mr, cols] = True
        mask[mr, mc] = True
        in_start = (start.col > mc) == right and (start.row > mr) == top
        if in_start and start.col != mc and start.row != mr:
            raise GeometryError("start lies in the goal's quarter")
    else:
        s = kind.side
        c0, r0 = goal.col - (s - 1) // 2, goal.row - (s - 1) // 2
        c1, r1 = c0 + s - 1, r0 + s - 1
        if c0 < 0 or r0 < 0 or c1 >= w or r1 >= h:
            raise GeometryError(f"bagel of side {s} around {tuple(goal)} leaves the grid")
        if c0 <= start.col <= c1 and r0 <= start.row <= r1:
            raise GeometryError("start lies inside the bagel ring")
        mask[r0 : r1 + 1, c0] = mask[r0 : r1 + 1, c1] = True
        mask[r0, c0 : c1 + 1] = mask[r1, c0 : c1 + 1] = True
    if mask[start.row, start.col] or mask[goal.row, goal.col]:
        raise GeometryError("blockage covers start or goal")

    new_id = max(grid.destroyable, default=-1) + 1
    new_id = max(new_id, int(grid.owner.max()) + 1)
    owner = grid.owner.copy()
    owner[mask] = new_id
    destr = dict(grid.destroyable)
    destr[new_id] = bool(destroyable)
    blocked = grid.with_owner(owner, destr)
    blocked.start, blocked.goal = start, goal
    labels = _components(blocked)
    if labels[start.row, start.col] == labels[goal.row, goal.col]:
        raise GeometryError("blockage leaves a path from start to goal")
    return blocked


# --- synthetic city maps -------------------------------------------------------------


def generate_city(
    width: int = 500,
    height: int | None = None,
    seed: int = 0,
    lot: tuple[int, int] = (12, 40),
    street: tuple[int, int] = (2, 5),
    building_share: float = 0.8,
) -> GridMap:
    """Street lattice with rectangular buildings; each building is one obstacle."""
    height = width if height is None else height
    rng = np.random.default_rng(seed)
    blocked = np.zeros((height, width), dtype=bool)

    def cuts(n):
        out, pos = [], 0
        while pos < n:
            lot_len = int(rng.integers(lot[0], lot[1] + 1))
            gap = int(rng.integers(street[0], street[1] + 1))
            out.append((pos + gap, min(pos + gap + lot_len, n)))
            pos += gap + lot_len
        return [(a, b) for a, b in out if b - a >= 3]

    for c0, c1 in cuts(width):
        for r0, r1 in cuts(height):
            if rng.random() > building_share:
                continue
            # one or two buildings per lot, split along the longer side
            if rng.random() < 0.4 and max(c1 - c0, r1 - r0) >= 10:
                if c1 - c0 >= r1 - r0:
                    m = int(rng.integers(c0 + 4, c1 - 3))
                    parts = [(c0, m - 1, r0, r1), (m + 1, c1, r0, r1)]
                else:
                    m = int(rng.integers(r0 + 4, r1 - 3))
                    parts = [(c0, c1, r0, m - 1), (c0, c1, m + 1, r1)]
            else:
                parts = [(c0, c1, r0, r1)]
            for a0, a1, b0, b1 in parts:
                blocked[b0:b1, a0:a1] = True
    return GridMap.from_blocked(blocked)


# --- start / goal placement --------------------------------------------------------


def place_endpoints(grid: GridMap, rng: np.random.Generator, kind: BlockageKind | None = None, max_tries=2000):
    """Start and goal in opposite 5% border bands, connected, octile distance > 0.8 width.

    For bagels the goal band is moved inward so the ring fits on the grid.
    """
    w, h = grid.width, grid.height
    band_w, band_h = max(1, round(0.05 * w)), max(1, round(0.05 * h))
    inset = 0 if kind is None or kind.name != "bagel" else kind.side // 2 + 1
    labels = _components(grid)
    for _ in range(max_tries):
        if rng.random() < 0.5:
            axis_len, band, other = w, band_w, h
            horizontal = True
        else:
            axis_len, band, other = h, band_h, w
            horizontal = False
        a = int(rng.integers(0, band))
        b = int(rng.integers(axis_len - inset - band, axis_len - inset))
        if rng.random() < 0.5:
            a, b = axis_len - 1 - a, axis_len - 1 - b
        lo, hi = (inset, other - inset) if inset else (0, other)
        if hi <= lo:
            raise GeometryError("grid too small for this blockage")
        sa = int(rng.integers(0, other))
        gb = int(rng.integers(lo, hi))
        start = CellIndex(a, sa) if horizontal else CellIndex(sa, a)
        goal = CellIndex(b, gb) if horizontal else CellIndex(gb, b)
        if not (grid.is_free(start) and grid.is_free(goal)):
            continue
        if labels[start.row, start.col] != labels[goal.row, goal.col]:
            continue
        if octile(start, goal) <= 0.8 * w:
            continue
        return start, goal
    raise GeometryError("could not place start and goal")


# --- scenario runner -------------------------------------------------------------------


@dataclass
class MetricsRecord:
    trial: int
    map_id: str
    kind: str
    start: tuple[int, int]
    goal: tuple[int, int]
    outcome: str
    jps_expanded: int
    astar_expanded: int
    closed_cells: int
    free_cells: int
    component_cells: int
    visited_fraction: float  # CLOSED over free cells of the start's original component
    visited_fraction_all: float  # CLOSED over all free cells
    contour_cells: int
    blocker_ids: tuple[int, ...]
    jps_time_us: float = 0.0
    astar_time_us: float = 0.0
    detect_time_us: float = 0.0
    baseline_jps_time_us: float = 0.0  # JPS on the same map without the blockage
    phase_shares: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    @property
    def smart_time_us(self) -> float:
        return self.jps_time_us + self.astar_time_us + self.detect_time_us


CSV_COLUMNS = (
    "trial", "map_id", "kind", "start_col", "start_row", "goal_col", "goal_row", "outcome",
    "jps_expanded", "astar_expanded", "closed_cells", "free_cells", "component_cells",
    "visited_fraction", "visited_fraction_all", "contour_cells", "blocker_ids",
)
TIMING_COLUMNS = (
    "jps_time_us", "astar_time_us", "detect_time_us", "baseline_jps_time_us",
    "share_jps", "share_astar", "share_detect",
)


def _us(t0: int, t1: int) -> float:
    return (t1 - t0) / 1000.0


def _fresh(grid: GridMap) -> GridMap:
    # drop cached jump tables so every timed run pays for its own preprocessing
    if hasattr(grid, "_jump_tables"):
        del grid._jump_tables
    return grid


def run_trial(grid: GridMap, kind: BlockageKind, rng, trial: int = 0, map_id: str = "map") -> MetricsRecord:
    kind = kind.scaled(grid.width)
    for _ in range(100):
        start, goal = place_endpoints(grid, rng, kind)
        try:
            blocked = generate_blockage(grid, kind, start, goal)
            break
        except GeometryError:
            continue  # e.g. goal on a quarter line; draw again
    else:
        raise GeometryError(f"no valid {kind} placement on {map_id} after 100 draws")

    base = _fresh(grid)
    t0 = time.perf_counter_ns()
    jps(base, start, goal)
    t1 = time.perf_counter_ns()
    baseline = _us(t0, t1)

    t0 = time.perf_counter_ns()
    r_jps = jps(blocked, start, goal)
    t1 = time.perf_counter_ns()
    r_astar = astar(blocked, start, goal, keep_closed=True)
    t2 = time.perf_counter_ns()
    report = detect_blockage(blocked, r_astar.closed, goal)
    t3 = time.perf_counter_ns()

    labels = _components(grid)
    comp = labels == labels[start.row, start.col]
    comp_cells = int((comp & blocked.traversable).sum())
    free = int(blocked.traversable.sum())
    closed = len(r_astar.closed)
    times = (_us(t0, t1), _us(t1, t2), _us(t2, t3))
    total = sum(times)
    return MetricsRecord(
        trial=trial,
        map_id=map_id,
        kind=str(kind),
        start=tuple(start),
        goal=tuple(goal),
        outcome="NoPath" if not r_jps.found else "Found",
        jps_expanded=r_jps.expanded,
        astar_expanded=r_astar.expanded,
        closed_cells=closed,
        free_cells=free,
        component_cells=comp_cells,
        visited_fraction=closed / comp_cells if comp_cells else 0.0,
        visited_fraction_all=closed / free if free else 0.0,
        contour_cells=len(report.contour),
        blocker_ids=tuple(sorted(report.obstacle_ids)),
        jps_time_us=times[0],
        astar_time_us=times[1],
        detect_time_us=times[2],
        baseline_jps_time_us=baseline,
        phase_shares=tuple(t / total for t in times) if total else (0.0, 0.0, 0.0),
    )


def load_maps(sources: Sequence) -> list[tuple[str, GridMap]]:
    """Grids from paths or ready GridMaps; parse failures name the file."""
    out = []
    for i, src in enumerate(sources):
        if isinstance(src, GridMap):
            out.append((f"map{i}", src))
            continue
        try:
            out.append((os.path.basename(str(src)), load_grid(src)))
        except (OSError, ValueError) as exc:
            raise type(exc)(f"{src}: {exc}") from exc
    return out


def run_scenario(maps: Sequence, kind: BlockageKind, trials: int, seed: int = 0) -> list[MetricsRecord]:
    """``trials`` blocked runs cycling over ``maps``; trial k draws from seed (seed, k)."""
    loaded = load_maps(maps)
    if not loaded:
        raise ValueError("no maps given")
    records = []
    for k in range(trials):
        map_id, grid = loaded[k % len(loaded)]
        rng = np.random.default_rng([seed, k])
        records.append(run_trial(grid, kind, rng, k, map_id))
    return sorted(records, key=lambda r: (r.kind, r.trial))


def aggregate(records: Sequence[MetricsRecord]) -> dict:
    """Per-kind means; phase shares are total phase time over total pipeline time."""
    out = {}
    kinds = sorted({r.kind for r in records})
    for kind in kinds:
        rs = [r for r in records if r.kind == kind]
        t = np.array([[r.jps_time_us, r.astar_time_us, r.detect_time_us] for r in rs])
        tot = t.sum(axis=0)
        shares = (tot / tot.sum()).tolist() if tot.sum() > 0 else [0.0, 0.0, 0.0]
        out[kind] = {
            "trials": len(rs),
            "visited_fraction": float(np.mean([r.visited_fraction for r in rs])),
            "visited_fraction_all": float(np.mean([r.visited_fraction_all for r in rs])),
            "jps_time_us": float(t[:, 0].mean()),
            "astar_time_us": float(t[:, 1].mean()),
            "detect_time_us": float(t[:, 2].mean()),
            "baseline_jps_time_us": float(np.mean([r.baseline_jps_time_us for r in rs])),
            "phase_shares": {"jps": shares[0], "astar": shares[1], "detect": shares[2]},
            "all_no_path": all(r.outcome == "NoPath" for r in rs),
        }
    return out


def _row(r: MetricsRecord, timings: bool) -> list:
    row = [
        r.trial, r.map_id, r.kind, r.start[0], r.start[1], r.goal[0], r.goal[1], r.outcome,
        r.jps_expanded, r.astar_expanded, r.closed_cells, r.free_cells, r.component_cells,
        f"{r.visited_fraction:.6f}", f"{r.visited_fraction_all:.6f}", r.contour_cells,
        " ".join(map(str, r.blocker_ids)),
    ]
    if timings:
        row += [f"{v:.1f}" for v in (r.jps_time_us, r.astar_time_us, r.detect_time_us, r.baseline_jps_time_us)]
        row += [f"{v:.6f}" for v in r.phase_shares]
    return row


def records_to_csv(records: Sequence[MetricsRecord], timings: bool = False) -> str:
    """CSV with a fixed column order.  Timing columns are opt-in because they vary run to run."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS + (TIMING_COLUMNS if timings else ()))
    for r in sorted(records, key=lambda r: (r.kind, r.trial)):
        wr.writerow(_row(r, timings))
    return buf.getvalue()


def records_to_json(records: Sequence[MetricsRecord]) -> str:
    return json.dumps(
        {"summary": aggregate(records), "records": [asdict(r) for r in records]}, indent=1
    )


# --- rendering -------------------------------------------------------------------------

_COLORS = {
    ".": (255, 255, 255),
    "@": (40, 40, 40),
    "D": (200, 120, 40),
    "*": (30, 90, 220),
    "c": (220, 40, 40),
    "x": (200, 220, 200),
}


def _char_grid(grid: GridMap, path=None, contour=None, closed=None) -> np.ndarray:
    chars = np.full(grid.owner.shape, ".", dtype="<U1")
    blocked = grid.owner >= 0
    chars[blocked] = "@"
    for oid, flag in grid.destroyable.items():
        if flag:
            chars[grid.owner == oid] = "D"
    for layer, ch in ((closed, "x"), (contour, "c"), (path, "*")):
        for cell in layer or ():
            if not grid.in_bounds(cell):
                raise RenderError(f"overlay cell {tuple(cell)} is outside the grid")
            chars[cell[1], cell[0]] = ch
    return chars


def render_ascii(grid: GridMap, path=None, contour=None, closed=None) -> str:
    """One text line per row; overlays win over the base map, path over contour over closed."""
    chars = _char_grid(grid, path, contour, closed)
    return "".join("".join(row) + "\n" for row in chars)


def render_ppm(grid: GridMap, path=None, contour=None, closed=None, scale: int = 1) -> bytes:
    chars = _char_grid(grid, path, contour, closed)
    img = np.zeros(chars.shape + (3,), dtype=np.uint8)
    for ch, rgb in _COLORS.items():
        img[chars == ch] = rgb
    if scale > 1:
        img = img.repeat(scale, axis=0).repeat(scale, axis=1)
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode() + img.tobytes()
