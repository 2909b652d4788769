"""An agent that breaks through nested rings to reach a goal it cannot see a way to.

    python3 demos/smart_relocation.py [--rings 3] [--seed 1]

Each round the grid search fails, the detector names the ring in the way, the
symbolic planner turns that into approach / destroy / move, and the loop runs
again on the changed map.  The same world with solid rings ends early with
an explanation instead of a path.
"""

import argparse
import math

import numpy as np

from srtplan.grid_model import rasterize
from srtplan.srt_loop import (
    Destroy,
    Detection,
    GridPath,
    PolarRegion,
    SymbolicAction,
    ring_world,
    solve_srt,
    square_to_polar,
)


def narrate(trace):
    for e in trace.events:
        if isinstance(e, Detection):
            r = e.report
            kind = "destroyable" if r.destroyable else "solid"
            print(f"  blocked: obstacle {sorted(r.obstacle_ids)} is {kind}, contour of {len(r.contour)} cells")
        elif isinstance(e, SymbolicAction):
            print(f"  plan step ({e.name} {' '.join(e.args)})")
        elif isinstance(e, GridPath):
            print(f"  walk {len(e.cells) - 1} moves to {tuple(e.cells[-1])}, cost {e.cost:.1f}")
        elif isinstance(e, Destroy):
            print(f"  destroyed obstacle {e.obstacle_id}")
    print(f"  status: {trace.status}" + (f" ({trace.reason})" if trace.reason else ""))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rings", type=int, default=3, choices=(1, 2, 3))
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    world = ring_world(np.random.default_rng(args.seed), args.rings)
    grid = rasterize(world)
    print(f"agent at {tuple(grid.start)}, goal at {tuple(grid.goal)}, {len(world.obstacles)} obstacles")

    ax, ay = world.agent_position
    sector = square_to_polar(world.goal_square, (ax, ay, 0.0))
    start, span = sector.arc
    print(f"goal seen from the agent: {sector.r_min:.1f}-{sector.r_max:.1f} m, "
          f"bearing {math.degrees(start):.0f} deg over {math.degrees(span):.1f} deg")

    # the square around this sector is a little larger than the original goal,
    # and cells are sized to the goal square, so the grid gets coarser
    trace = solve_srt(world, PolarRegion.sector(sector.r_min, sector.r_max, start, start + span))
    cell = trace.grids[0].cell_size
    print(f"\ndestroyable rings, goal given as that sector ({cell:.2f} m cells, goal cell {tuple(trace.goal_cell)}):")
    narrate(trace)

    solid = ring_world(np.random.default_rng(args.seed), args.rings, destroyable=False)
    print("\nthe same rings, solid:")
    narrate(solve_srt(solid))


if __name__ == "__main__":
    main()
