"""Continuous world description and its rasterization into a regular grid.

Cells are addressed as ``CellIndex(col, row)``.  ``col`` grows with x and
``row`` grows with y, so cell ``(0, 0)`` is the one whose lower-left corner is
the grid origin.  In the text map format, line ``k`` after the ``map`` header
holds row ``k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import shapely
from scipy import ndimage
from shapely.geometry import Polygon, box

from .errors import (
    InvalidGoal,
    InvalidStart,
    InvalidWorld,
    NotDestroyable,
    NotFound,
)

SQRT2 = math.sqrt(2.0)

# (dcol, drow, cost); cardinals first.
MOVES = (
    (1, 0, 1.0),
    (0, 1, 1.0),
    (-1, 0, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT2),
    (-1, 1, SQRT2),
    (-1, -1, SQRT2),
    (1, -1, SQRT2),
)

Point = tuple[float, float]


class CellIndex(NamedTuple):
    col: int
    row: int


@dataclass(frozen=True)
class CellState:
    traversable: bool
    obstacle_id: int | None = None


@dataclass(frozen=True)
class Obstacle:
    id: int
    vertices: tuple[Point, ...]
    destroyable: bool = False

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise InvalidWorld(f"obstacle {self.id}: needs at least 3 vertices")
        if not isinstance(self.id, (int, np.integer)) or self.id < 0:
            raise InvalidWorld(f"obstacle ids must be non-negative integers, got {self.id!r}")
        poly = Polygon(verts)
        if not poly.exterior.is_simple or poly.area <= 0:
            raise InvalidWorld(f"obstacle {self.id}: polygon is not simple")

    @property
    def polygon(self) -> Polygon:
        return Polygon(self.vertices)


@dataclass(frozen=True)
class WorldDescription:
    """The agent's world in meters: bounds, obstacles, agent disc and goal square."""

    bounds: tuple[float, float, float, float]  # x_min, x_max, y_min, y_max
    obstacles: tuple[Obstacle, ...]
    agent_radius: float
    agent_position: Point
    goal_square: tuple[Point, Point, Point, Point]

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple(float(v) for v in self.bounds))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "agent_position", tuple(float(v) for v in self.agent_position))
        object.__setattr__(
            self, "goal_square", tuple((float(x), float(y)) for x, y in self.goal_square)
        )
        x_min, x_max, y_min, y_max = self.bounds
        if not (x_min < x_max and y_min < y_max):
            raise InvalidWorld("bounds must satisfy x_min < x_max and y_min < y_max")
        if self.agent_radius <= 0:
            raise InvalidWorld("agent_radius must be positive")
        ids = [o.id for o in self.obstacles]
        if len(set(ids)) != len(ids):
            raise InvalidWorld("duplicate obstacle ids")
        for obs in self.obstacles:
            for x, y in obs.vertices:
                if not (x_min <= x <= x_max and y_min <= y <= y_max):
                    raise InvalidWorld(f"obstacle {obs.id}: vertex ({x}, {y}) outside bounds")
        if len(self.goal_square) != 4:
            raise InvalidWorld("goal_square needs exactly 4 corners")
        xs = [p[0] for p in self.goal_square]
        ys = [p[1] for p in self.goal_square]
        w, h = max(xs) - min(xs), max(ys) - min(ys)
        if w <= 0 or not math.isclose(w, h, rel_tol=1e-6):
            raise InvalidWorld("goal_square must be a non-degenerate axis-aligned square")
        if w <= 2 * self.agent_radius:
            raise InvalidWorld("goal square side must exceed the agent diameter 2R")

    @property
    def goal_side(self) -> float:
        xs = [p[0] for p in self.goal_square]
        return max(xs) - min(xs)

    @property
    def goal_center(self) -> Point:
        xs = [p[0] for p in self.goal_square]
        ys = [p[1] for p in self.goal_square]
        return ((max(xs) + min(xs)) / 2.0, (max(ys) + min(ys)) / 2.0)

    def obstacle(self, obstacle_id: int) -> Obstacle:
        for obs in self.obstacles:
            if obs.id == obstacle_id:
                return obs
        raise NotFound(obstacle_id)

    def without(self, obstacle_id: int) -> "WorldDescription":
        self.obstacle(obstacle_id)
        return replace(self, obstacles=tuple(o for o in self.obstacles if o.id != obstacle_id))


def square_corners(center: Point, side: float) -> tuple[Point, Point, Point, Point]:
    cx, cy = center
    h = side / 2.0
    return ((cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h))


@dataclass(eq=False)
class GridMap:
    """Dense cell table.  ``owner[row, col]`` is the obstacle id, -1 when free."""

    owner: np.ndarray
    destroyable: dict[int, bool] = field(default_factory=dict)
    cell_size: float = 1.0
    origin: Point = (0.0, 0.0)
    start: CellIndex | None = None
    goal: CellIndex | None = None
    revision: int = 0

    def __post_init__(self):
        self.owner = np.asarray(self.owner, dtype=np.int64)
        if self.owner.ndim != 2:
            raise ValueError("owner table must be 2-D")
        self.owner.setflags(write=False)
        self._padded: bytearray | None = None

    @classmethod
    def from_blocked(cls, blocked, destroyable: bool = False, **kw) -> "GridMap":
        """Grid whose blocked cells (4-connected groups) become obstacles 0, 1, ..."""
        blocked = np.asarray(blocked, dtype=bool)
        labels, n = ndimage.label(blocked)
        owner = labels.astype(np.int64) - 1
        return cls(owner, {i: destroyable for i in range(n)}, **kw)

    @property
    def width(self) -> int:
        return self.owner.shape[1]

    @property
    def height(self) -> int:
        return self.owner.shape[0]

    @property
    def traversable(self) -> np.ndarray:
        return self.owner < 0

    def in_bounds(self, cell) -> bool:
        c, r = cell
        return 0 <= c < self.width and 0 <= r < self.height

    def is_free(self, cell) -> bool:
        c, r = cell
        return 0 <= c < self.width and 0 <= r < self.height and self.owner[r, c] < 0

    def cell_state(self, cell) -> CellState:
        c, r = cell
        oid = int(self.owner[r, c])
        return CellState(oid < 0, None if oid < 0 else oid)

    def obstacle_ids(self) -> set[int]:
        return {int(v) for v in np.unique(self.owner) if v >= 0}

    def cell_of(self, point: Point) -> CellIndex:
        x, y = point
        c = int(math.floor((x - self.origin[0]) / self.cell_size))
        r = int(math.floor((y - self.origin[1]) / self.cell_size))
        # points on the max boundary belong to the last cell
        return CellIndex(min(max(c, 0), self.width - 1), min(max(r, 0), self.height - 1))

    def cell_center(self, cell) -> Point:
        c, r = cell
        return (
            self.origin[0] + (c + 0.5) * self.cell_size,
            self.origin[1] + (r + 0.5) * self.cell_size,
        )

    def free_cells(self) -> list[CellIndex]:
        rows, cols = np.nonzero(self.owner < 0)
        return sorted(CellIndex(int(c), int(r)) for r, c in zip(rows, cols))

    def with_owner(self, owner: np.ndarray, destroyable: dict[int, bool] | None = None) -> "GridMap":
        """A new revision of this grid with a different cell table."""
        return GridMap(
            owner,
            dict(self.destroyable if destroyable is None else destroyable),
            self.cell_size,
            self.origin,
            self.start,
            self.goal,
            self.revision + 1,
        )

    # Flat, border-padded, column-major occupancy used by the searches.
    # Index of (col, row) is (col + 1) * stride + row + 1 with stride = height + 2,
    # so the flat order matches CellIndex tuple order.
    @property
    def stride(self) -> int:
        return self.height + 2

    def padded(self) -> bytearray:
        if self._padded is None:
            pad = np.zeros((self.width + 2, self.height + 2), dtype=np.uint8)
            pad[1:-1, 1:-1] = (self.owner < 0).T
            self._padded = bytearray(pad.ravel().tobytes())
        return self._padded

    def flat(self, cell) -> int:
        return (int(cell[0]) + 1) * (self.height + 2) + int(cell[1]) + 1

    def unflat(self, idx: int) -> CellIndex:
        c, r = divmod(idx, self.height + 2)
        return CellIndex(c - 1, r - 1)

    def __eq__(self, other):
        if not isinstance(other, GridMap):
            return NotImplemented
        return (
            np.array_equal(self.owner, other.owner)
            and self.destroyable == other.destroyable
            and self.cell_size == other.cell_size
            and tuple(self.origin) == tuple(other.origin)
        )

    __hash__ = None

    def __repr__(self):
        return f"GridMap({self.width}x{self.height}, obstacles={len(self.obstacle_ids())}, rev={self.revision})"


def neighbors(grid: GridMap, cell) -> list[tuple[CellIndex, float]]:
    """Traversable 8-neighbors of ``cell`` with their move costs.

    A diagonal step needs both cardinal cells it passes between to be free.
    """
    if not grid.is_free(cell):
        return []
    c, r = cell
    out = []
    for dc, dr, cost in MOVES:
        n = (c + dc, r + dr)
        if not grid.is_free(n):
            continue
        if dc and dr and not (grid.is_free((c + dc, r)) and grid.is_free((c, r + dr))):
            continue
        out.append((CellIndex(*n), cost))
    return out


def rasterize(world: WorldDescription, check_endpoints: bool = True) -> GridMap:
    x_min, x_max, y_min, y_max = world.bounds
    cs = world.goal_side
    width = math.ceil(round((x_max - x_min) / cs, 9))
    height = math.ceil(round((y_max - y_min) / cs, 9))
    owner = np.full((height, width), -1, dtype=np.int64)
    R = world.agent_radius

    for obs in sorted(world.obstacles, key=lambda o: o.id):
        poly = obs.polygon
        bx0, by0, bx1, by1 = poly.bounds
        c0 = max(int(math.floor((bx0 - R - x_min) / cs)), 0)
        c1 = min(int(math.floor((bx1 + R - x_min) / cs)), width - 1)
        r0 = max(int(math.floor((by0 - R - y_min) / cs)), 0)
        r1 = min(int(math.floor((by1 + R - y_min) / cs)), height - 1)
        if c0 > c1 or r0 > r1:
            continue
        cols, rows = np.meshgrid(np.arange(c0, c1 + 1), np.arange(r0, r1 + 1))
        cx0 = x_min + cols * cs - R
        cy0 = y_min + rows * cs - R
        cells = shapely.box(cx0, cy0, cx0 + cs + 2 * R, cy0 + cs + 2 * R)
        hit = shapely.intersects(poly, cells)
        sub = owner[r0 : r1 + 1, c0 : c1 + 1]
        sub[hit & (sub < 0)] = obs.id

    grid = GridMap(
        owner,
        {o.id: bool(o.destroyable) for o in world.obstacles},
        cs,
        (x_min, y_min),
    )
    grid.start = grid.cell_of(world.agent_position)
    grid.goal = grid.cell_of(world.goal_center)
    if check_endpoints:
        if not grid.is_free(grid.start):
            raise InvalidStart(f"agent cell {tuple(grid.start)} is blocked after inflation")
        gid = grid.cell_state(grid.goal).obstacle_id
        if gid is not None:
            gc, gr = grid.goal
            rect = box(x_min + gc * cs, y_min + gr * cs, x_min + (gc + 1) * cs, y_min + (gr + 1) * cs)
            for obs in world.obstacles:
                if not obs.destroyable and obs.polygon.covers(rect):
                    raise InvalidGoal(f"goal cell covered by indestructible obstacle {obs.id}")
    return grid


def destroy_obstacle(
    grid: GridMap, world: WorldDescription | None, obstacle_id: int
) -> tuple[GridMap, WorldDescription | None]:
    """Remove a destroyable obstacle; returns the new grid revision and world.

    With a world the remaining obstacles are re-rasterized, so cells shared with
    another obstacle stay blocked.  Without one (text maps) the obstacle's cells
    are simply freed.
    """
    if obstacle_id not in grid.destroyable:
        raise NotFound(obstacle_id)
    if not grid.destroyable[obstacle_id]:
        raise NotDestroyable(obstacle_id)
    destroyable = {k: v for k, v in grid.destroyable.items() if k != obstacle_id}
    if world is not None:
        new_world = world.without(obstacle_id)
        fresh = rasterize(new_world, check_endpoints=False)
        new = grid.with_owner(fresh.owner, destroyable)
        return new, new_world
    owner = grid.owner.copy()
    owner[owner == obstacle_id] = -1
    return grid.with_owner(owner, destroyable), None


# --- interchange formats ---------------------------------------------------

_BLOCKED_CHARS = set("@TOW")
_FREE_CHARS = set(".GS")


def parse_grid_text(text: str) -> GridMap:
    lines = text.splitlines()
    header = {}
    i = 0
    while i < len(lines) and lines[i].strip() != "map":
        parts = lines[i].split()
        if len(parts) == 2:
            header[parts[0]] = parts[1]
        elif parts:
            raise ValueError(f"line {i + 1}: malformed header {lines[i]!r}")
        i += 1
    if i == len(lines):
        raise ValueError("missing 'map' line")
    try:
        height, width = int(header["height"]), int(header["width"])
    except (KeyError, ValueError) as exc:
        raise ValueError("header needs integer 'height' and 'width'") from exc
    rows = lines[i + 1 : i + 1 + height]
    if len(rows) != height:
        raise ValueError(f"expected {height} map rows, got {len(rows)}")
    blocked = np.zeros((height, width), dtype=bool)
    destr = np.zeros((height, width), dtype=bool)
    for r, line in enumerate(rows):
        if len(line) < width:
            raise ValueError(f"map row {r} shorter than width {width}")
        for c, ch in enumerate(line[:width]):
            if ch == "D":
                destr[r, c] = True
            elif ch in _BLOCKED_CHARS:
                blocked[r, c] = True
            elif ch not in _FREE_CHARS:
                raise ValueError(f"map row {r}, column {c}: unknown cell character {ch!r}")
    lab_b, nb = ndimage.label(blocked)
    lab_d, nd = ndimage.label(destr)
    # number components in row-major order of their first cell
    firsts = []
    for lab, n, flag in ((lab_b, nb, False), (lab_d, nd, True)):
        if n:
            flat = lab.ravel()
            pos = ndimage.minimum(np.arange(flat.size), flat, index=np.arange(1, n + 1))
            firsts.extend((int(p), k + 1, flag, lab) for k, p in enumerate(pos))
    firsts.sort(key=lambda t: t[0])
    owner = np.full((height, width), -1, dtype=np.int64)
    flags = {}
    for new_id, (_, k, flag, lab) in enumerate(firsts):
        owner[lab == k] = new_id
        flags[new_id] = flag
    return GridMap(owner, flags)


def format_grid_text(grid: GridMap) -> str:
    chars = np.full(grid.owner.shape, ".", dtype="<U1")
    for oid, flag in grid.destroyable.items():
        chars[grid.owner == oid] = "D" if flag else "@"
    chars[(grid.owner >= 0) & ~np.isin(grid.owner, list(grid.destroyable))] = "@"
    body = "\n".join("".join(row) for row in chars)
    return f"type octile\nheight {grid.height}\nwidth {grid.width}\nmap\n{body}\n"


def load_grid(path) -> GridMap:
    with open(path) as fh:
        return parse_grid_text(fh.read())


def save_grid(grid: GridMap, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_grid_text(grid))


def world_to_dict(world: WorldDescription) -> dict:
    x_min, x_max, y_min, y_max = world.bounds
    return {
        "bounds": {"x_min": x_min, "x_max": x_max, "y_min": y_min, "y_max": y_max},
        "agent": {"position": list(world.agent_position), "radius": world.agent_radius},
        "goal_square": [list(p) for p in world.goal_square],
        "obstacles": [
            {"id": o.id, "vertices": [list(v) for v in o.vertices], "destroyable": o.destroyable}
            for o in world.obstacles
        ],
    }


def world_from_dict(data: dict) -> WorldDescription:
    b = data["bounds"]
    if isinstance(b, dict):
        bounds = (b["x_min"], b["x_max"], b["y_min"], b["y_max"])
    else:
        bounds = tuple(b)
    obstacles = tuple(
        Obstacle(int(o["id"]), tuple(tuple(v) for v in o["vertices"]), bool(o.get("destroyable", False)))
        for o in data.get("obstacles", [])
    )
    return WorldDescription(
        bounds=bounds,
        obstacles=obstacles,
        agent_radius=float(data["agent"]["radius"]),
        agent_position=tuple(data["agent"]["position"]),
        goal_square=tuple(tuple(p) for p in data["goal_square"]),
    )


def load_world(path) -> WorldDescription:
    with open(path) as fh:
        return world_from_dict(json.load(fh))


def save_world(world: WorldDescription, path) -> None:
    with open(path, "w") as fh:
        json.dump(world_to_dict(world), fh, indent=2)


def rectangle(obstacle_id: int, x0: float, y0: float, x1: float, y1: float, destroyable=False) -> Obstacle:
    return Obstacle(obstacle_id, ((x0, y0), (x1, y0), (x1, y1), (x0, y1)), destroyable)


def ring(
    obstacle_id: int,
    center: Point,
    half_side: float,
    thickness: float,
    destroyable: bool = True,
    slit: float = 0.02,
) -> Obstacle:
    """Square ring as one simple polygon.

    A ring with a hole is not a simple polygon, so the ring is cut by a slit of
    width ``slit``; with ``slit < 2R`` inflation closes it in the grid.
    """
    cx, cy = center
    a, b = half_side, half_side - thickness
    s = slit / 2.0
    verts = (
        (cx + s, cy - a),
        (cx + a, cy - a),
        (cx + a, cy + a),
        (cx - a, cy + a),
        (cx - a, cy - a),
        (cx - s, cy - a),
        (cx - s, cy - b),
        (cx - b, cy - b),
        (cx - b, cy + b),
        (cx + b, cy + b),
        (cx + b, cy - b),
        (cx + s, cy - b),
    )
    return Obstacle(obstacle_id, verts, destroyable)


def iter_cells(grid: GridMap) -> Iterable[CellIndex]:
    for c in range(grid.width):
        for r in range(grid.height):
            yield CellIndex(c, r)


def cells_to_list(cells: Sequence) -> list[list[int]]:
    return [[int(c), int(r)] for c, r in cells]
