"""The relocation loop joining grid search, blockage detection and symbolic planning.

One round: jump point search toward the goal; on failure, A* with its CLOSED
set kept, blockage detection, and a symbolic plan over the detected blocker
(approach it, destroy it, move on).  Plans are rebuilt from scratch every
round.  The loop ends when a grid path reaches the goal cell, when the blocker
cannot be destroyed, or when the round budget runs out.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .blockage import ContourReport, detect_blockage
from .errors import AgentInsideRegion, EmptyRegion, ResourceExhausted, Unsolvable
from .grid_model import (
    CellIndex,
    GridMap,
    Obstacle,
    WorldDescription,
    destroy_obstacle,
    neighbors,
    rasterize,
    rectangle,
    ring,
    square_corners,
)
from .search import astar, jps, octile
from .signworld import build_sign_network, fixture_text, map_plan, parse_pddl
from .signworld.network import SignNetwork
from .signworld.planner import PlanLimits

TWO_PI = 2.0 * math.pi

# --- agent-centred polar frame ----------------------------------------------------


@dataclass(frozen=True)
class PolarRegion:
    """Annular sector given by four (r, phi) corners; phi is relative to the heading."""

    corners: tuple[tuple[float, float], ...]

    def __post_init__(self):
        corners = tuple((float(r), float(p) % TWO_PI) for r, p in self.corners)
        if len(corners) != 4:
            raise EmptyRegion("a polar region needs 4 corners")
        for r, p in corners:
            if not (math.isfinite(r) and math.isfinite(p)) or r < 0:
                raise EmptyRegion(f"corner ({r}, {p}) does not bound a sector")
        object.__setattr__(self, "corners", corners)

    @classmethod
    def sector(cls, r_min, r_max, phi_start, phi_end) -> "PolarRegion":
        """Sector from ``phi_start`` counter-clockwise to ``phi_end``."""
        if r_min > r_max:
            raise EmptyRegion("r_min > r_max")
        return cls(((r_min, phi_start), (r_min, phi_end), (r_max, phi_end), (r_max, phi_start)))

    @property
    def r_min(self) -> float:
        return min(r for r, _ in self.corners)

    @property
    def r_max(self) -> float:
        return max(r for r, _ in self.corners)

    @property
    def arc(self) -> tuple[float, float]:
        """(start, span): the shortest counter-clockwise arc covering every corner bearing."""
        return covering_arc([p for _, p in self.corners])

    def contains(self, r: float, phi: float, tol: float = 1e-9) -> bool:
        start, span = self.arc
        if not (self.r_min - tol <= r <= self.r_max + tol):
            return False
        d = (phi - start) % TWO_PI
        return d <= span + tol or d >= TWO_PI - tol


def covering_arc(bearings) -> tuple[float, float]:
    angles = sorted(b % TWO_PI for b in bearings)
    if len(angles) == 1:
        return angles[0], 0.0
    gaps = [(angles[(i + 1) % len(angles)] - a) % TWO_PI for i, a in enumerate(angles)]
    i = int(np.argmax(gaps))
    start = angles[(i + 1) % len(angles)]
    return start, TWO_PI - gaps[i] if gaps[i] > 0 else 0.0


AgentPose = tuple[float, float, float]  # x, y, heading in radians


def polar_to_square(region: PolarRegion, agent_pose: AgentPose, min_side: float = 1.0):
    """Smallest axis-aligned square (4 corners, meters) containing the sector."""
    x0, y0, heading = agent_pose
    start, span = region.arc
    start += heading  # world bearings from here on
    bearings = [start, start + span]
    k = math.ceil(start / (math.pi / 2))
    while k * math.pi / 2 <= start + span:
        bearings.append(k * math.pi / 2)
        k += 1
    xs, ys = [], []
    for r in (region.r_min, region.r_max):
        for b in bearings:
            xs.append(x0 + r * math.cos(b))
            ys.append(y0 + r * math.sin(b))
    side = max(max(xs) - min(xs), max(ys) - min(ys), min_side)
    center = ((max(xs) + min(xs)) / 2.0, (max(ys) + min(ys)) / 2.0)
    return square_corners(center, side)


def square_to_polar(square, agent_pose: AgentPose) -> PolarRegion:
    """Tightest annular sector around the square, in the agent frame.

    r_min is the distance from the agent to the square, r_max to its farthest
    corner, and the arc spans the corner bearings.
    """
    x0, y0, heading = agent_pose
    xs = [p[0] for p in square]
    ys = [p[1] for p in square]
    lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
    if lo_x < x0 < hi_x and lo_y < y0 < hi_y:
        raise AgentInsideRegion("agent lies inside the goal square")
    dx = max(lo_x - x0, 0.0, x0 - hi_x)
    dy = max(lo_y - y0, 0.0, y0 - hi_y)
    r_min = math.hypot(dx, dy)
    rel = [(x - x0, y - y0) for x, y in square]
    r_max = max(math.hypot(u, v) for u, v in rel)
    bearings = [math.atan2(v, u) - heading for u, v in rel if math.hypot(u, v) > 1e-12]
    start, span = covering_arc(bearings)
    return PolarRegion.sector(r_min, r_max, start, start + span)


# Crisp stand-ins for the linguistic terms: distance bands in meters and
# bearing intervals in radians (counter-clockwise from the heading).
DISTANCE_TERMS = {
    "near": (1.0, 5.0),
    "midway": (5.0, 15.0),
    "afar": (15.0, 40.0),
}
DIRECTION_TERMS = {
    "ahead": (-math.pi / 8, math.pi / 8),
    "leftward": (3 * math.pi / 8, 5 * math.pi / 8),
    "rightward": (-5 * math.pi / 8, -3 * math.pi / 8),
    "behind": (7 * math.pi / 8, 9 * math.pi / 8),
    "ahead-left": (math.pi / 8, 3 * math.pi / 8),
    "ahead-right": (-3 * math.pi / 8, -math.pi / 8),
}


def region_from_terms(distance: str, direction: str, distances=None, directions=None) -> PolarRegion:
    distances = DISTANCE_TERMS if distances is None else distances
    directions = DIRECTION_TERMS if directions is None else directions
    try:
        r0, r1 = distances[distance]
        p0, p1 = directions[direction]
    except KeyError as e:
        raise EmptyRegion(f"unknown term {e.args[0]!r}") from None
    return PolarRegion.sector(r0, r1, p0, p1)


# --- trace -------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolicAction:
    name: str
    args: tuple[str, ...]
    revision: int

    def to_dict(self):
        return {"type": "SymbolicAction", "name": self.name, "args": list(self.args), "revision": self.revision}


@dataclass(frozen=True)
class GridPath:
    cells: tuple[CellIndex, ...]
    cost: float
    revision: int

    def to_dict(self):
        return {
            "type": "GridPath",
            "cells": [list(c) for c in self.cells],
            "cost": self.cost,
            "revision": self.revision,
        }


@dataclass(frozen=True)
class Detection:
    report: ContourReport
    revision: int

    def to_dict(self):
        return {"type": "Detection", "report": self.report.to_dict(), "revision": self.revision}


@dataclass(frozen=True)
class Destroy:
    obstacle_id: int
    revision: int  # grid revision the obstacle was removed from

    def to_dict(self):
        return {"type": "Destroy", "obstacle_id": self.obstacle_id, "revision": self.revision}


GOAL_REACHED = "GoalReached"
UNSOLVABLE = "Unsolvable"


@dataclass
class ExecutionTrace:
    start_cell: CellIndex
    goal_cell: CellIndex
    events: list = field(default_factory=list)
    status: str | None = None
    reason: str | None = None
    grids: dict[int, GridMap] = field(default_factory=dict, repr=False)

    def of_type(self, kind) -> list:
        return [e for e in self.events if isinstance(e, kind)]

    def to_dict(self) -> dict:
        return {
            "start_cell": list(self.start_cell),
            "goal_cell": list(self.goal_cell),
            "status": self.status,
            "reason": self.reason,
            "events": [e.to_dict() for e in self.events],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "ExecutionTrace":
        events = []
        for e in data["events"]:
            kind = e["type"]
            if kind == "SymbolicAction":
                events.append(SymbolicAction(e["name"], tuple(e["args"]), e["revision"]))
            elif kind == "GridPath":
                events.append(GridPath(tuple(CellIndex(*c) for c in e["cells"]), e["cost"], e["revision"]))
            elif kind == "Detection":
                events.append(Detection(ContourReport.from_dict(e["report"]), e["revision"]))
            elif kind == "Destroy":
                events.append(Destroy(e["obstacle_id"], e["revision"]))
            else:
                raise ValueError(f"unknown event type {kind!r}")
        return cls(
            CellIndex(*data["start_cell"]),
            CellIndex(*data["goal_cell"]),
            events,
            data["status"],
            data.get("reason"),
        )


def replay(trace: ExecutionTrace) -> CellIndex:
    """Walk every GridPath over the grid revision it was planned on.

    Raises ValueError on a broken chain or an illegal move; returns the final
    agent cell.  Needs ``trace.grids``, which only live traces carry.
    """
    at = trace.start_cell
    for e in trace.events:
        if isinstance(e, Destroy):
            grid = trace.grids[e.revision]
            if not grid.destroyable.get(e.obstacle_id, False):
                raise ValueError(f"destroyed obstacle {e.obstacle_id} was not destroyable")
        if not isinstance(e, GridPath):
            continue
        grid = trace.grids[e.revision]
        if tuple(e.cells[0]) != tuple(at):
            raise ValueError(f"path starts at {e.cells[0]}, agent is at {at}")
        for a, b in zip(e.cells, e.cells[1:]):
            if b not in {n for n, _ in neighbors(grid, a)}:
                raise ValueError(f"illegal move {a} -> {b} on revision {e.revision}")
        at = e.cells[-1]
    if trace.status == GOAL_REACHED and tuple(at) != tuple(trace.goal_cell):
        raise ValueError("goal reported but the replay ends elsewhere")
    return CellIndex(*at)


# --- the loop ------------------------------------------------------------------------


@dataclass(frozen=True)
class SrtLimits:
    max_rounds: int | None = None  # default: number of obstacles + 1
    plan: PlanLimits = PlanLimits()


@dataclass
class SrtState:
    world: WorldDescription | None
    grid: GridMap
    agent_cell: CellIndex
    goal_cell: CellIndex
    network: SignNetwork | None = None
    situation: frozenset = frozenset()
    round: int = 0


def _symbol(ids) -> str:
    return "o" + "_".join(str(i) for i in sorted(ids))


def _round_task(blocker: str, meanings: dict):
    problem = (
        "(define (problem srt-round) (:domain srt)\n"
        f"  (:objects here goal - region {blocker} - obstacle)\n"
        f"  (:init (at here) (blocking {blocker}) (destroyable {blocker}) (adjacent_region {blocker}))\n"
        "  (:goal (and (at goal))))\n"
    )
    task = parse_pddl(fixture_text("srt-domain.pddl"), problem)
    net = build_sign_network(task)
    net.meanings.update(meanings)
    return task, net


def _goal_square(world: WorldDescription, goal, heading: float):
    if goal is None:
        return world.goal_square
    if isinstance(goal, PolarRegion):
        x, y = world.agent_position
        return polar_to_square(goal, (x, y, heading), min_side=world.goal_side)
    return tuple(tuple(p) for p in goal)


def solve_srt(
    world: WorldDescription | GridMap,
    goal=None,
    limits: SrtLimits | None = None,
    heading: float = 0.0,
) -> ExecutionTrace:
    """Run the relocation loop until the goal cell is reached or the task is shown unsolvable.

    ``world`` is a world description, or an already rasterized grid whose
    ``start`` and ``goal`` are set.  ``goal`` optionally replaces the world's
    goal square, either as a polar region around the agent or as 4 corners.
    Raises ResourceExhausted (with the partial trace on ``.trace``) when the
    round budget runs out.
    """
    limits = limits or SrtLimits()
    if isinstance(world, GridMap):
        grid, world = world, None
    else:
        world = replace(world, goal_square=_goal_square(world, goal, heading))
        grid = rasterize(world)
    state = SrtState(world, grid, CellIndex(*grid.start), CellIndex(*grid.goal))
    max_rounds = limits.max_rounds
    if max_rounds is None:
        max_rounds = len(grid.obstacle_ids()) + 1
    trace = ExecutionTrace(state.agent_cell, state.goal_cell)
    trace.grids[grid.revision] = grid
    meanings: dict = {}

    while True:
        res = jps(state.grid, state.agent_cell, state.goal_cell)
        if res.found:
            trace.events.append(GridPath(tuple(res.path), res.cost, state.grid.revision))
            state.agent_cell = res.path[-1]
            trace.status = GOAL_REACHED
            return trace
        if state.round >= max_rounds:
            err = ResourceExhausted(f"no path after {state.round} rounds")
            err.trace = trace
            raise err
        state.round += 1

        search = astar(state.grid, state.agent_cell, state.goal_cell, keep_closed=True)
        report = detect_blockage(state.grid, search.closed, state.goal_cell)
        trace.events.append(Detection(report, state.grid.revision))
        if not report.destroyable:
            trace.status, trace.reason = UNSOLVABLE, "BlockedByIndestructible"
            return trace

        blocker = _symbol(report.obstacle_ids)
        task, state.network = _round_task(blocker, meanings)
        state.situation = task.init
        try:
            plan = map_plan(state.network, task.init, task.goal, limits.plan)
        except Unsolvable:
            trace.status, trace.reason = UNSOLVABLE, "NoSymbolicPlan"
            return trace

        for step in plan.steps:
            trace.events.append(SymbolicAction(step.name, step.args, state.grid.revision))
            state.situation = step.apply(state.situation)
            if step.name == "approach-obstacle":
                target = min(
                    report.reachable_contour,
                    key=lambda c: (octile(state.agent_cell, c), tuple(c)),
                )
                leg = jps(state.grid, state.agent_cell, target)
                if not leg.found:
                    raise AssertionError("contour cell in CLOSED must be reachable")
                trace.events.append(GridPath(tuple(leg.path), leg.cost, state.grid.revision))
                state.agent_cell = leg.path[-1]
            elif step.name == "destroy-obstacle":
                for oid in sorted(report.obstacle_ids):
                    trace.events.append(Destroy(oid, state.grid.revision))
                    state.grid, state.world = destroy_obstacle(state.grid, state.world, oid)
                    trace.grids[state.grid.revision] = state.grid
            # move-to-region is carried out by the search at the top of the loop
        state.network.reinforce(plan)
        meanings = dict(state.network.meanings)


# --- test worlds --------------------------------------------------------------------


def ring_world(
    rng: np.random.Generator,
    n_rings: int,
    destroyable: bool = True,
    n_clutter: int = 3,
    clutter_destroyable: float = 0.5,
) -> WorldDescription:
    """Square world with 1..3 nested rings around the goal plus scattered boxes.

    Cells are 1 m, the agent radius 0.3 m.  Rings are 3+ cells apart and boxes
    keep 3+ cells of clearance from the outer ring, so every ring is its own
    blocker.
    """
    size = 44.0
    R = 0.3
    half_sides = []
    h = float(rng.uniform(2.5, 3.5))
    for _ in range(n_rings):
        half_sides.append(h)
        h += float(rng.uniform(3.5, 5.0))
    outer = half_sides[-1]
    margin = outer + 2.0
    gx = float(rng.uniform(margin, size - margin))
    gy = float(rng.uniform(margin, size - margin))
    gx, gy = math.floor(gx) + 0.5, math.floor(gy) + 0.5
    obstacles: list[Obstacle] = [
        ring(i, (gx, gy), hs, 0.6, destroyable=destroyable) for i, hs in enumerate(half_sides)
    ]

    def clear_of_rings(x, y, pad):
        return max(abs(x - gx), abs(y - gy)) > outer + pad

    while True:
        ax, ay = (float(v) for v in rng.uniform(1.0, size - 1.0, 2))
        if clear_of_rings(ax, ay, 2.0):
            break
    nid = len(obstacles)
    tries = 0
    while nid < n_rings + n_clutter and tries < 200:
        tries += 1
        w, hgt = (float(v) for v in rng.uniform(1.0, 4.0, 2))
        x0, y0 = float(rng.uniform(0.5, size - 0.5 - w)), float(rng.uniform(0.5, size - 0.5 - hgt))
        pad = 3.5
        if (x0 - pad < gx + outer and x0 + w + pad > gx - outer
                and y0 - pad < gy + outer and y0 + hgt + pad > gy - outer):
            continue
        if x0 - 1.5 < ax < x0 + w + 1.5 and y0 - 1.5 < ay < y0 + hgt + 1.5:
            continue
        obstacles.append(rectangle(nid, x0, y0, x0 + w, y0 + hgt, bool(rng.random() < clutter_destroyable)))
        nid += 1
    return WorldDescription(
        (0.0, size, 0.0, size),
        tuple(obstacles),
        R,
        (ax, ay),
        square_corners((gx, gy), 1.0),
    )
