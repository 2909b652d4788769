"""Wall a goal off in a synthetic city and watch the failure pipeline explain why.

    python3 demos/blocked_city.py [--size 160] [--seed 4]

JPS fails first, then A* keeps its CLOSED set, and the blockage detector walks
the wall facing the goal.  The script prints what each stage saw for every
blockage shape and an ASCII crop around the goal of the largest ring.
"""

import argparse

import numpy as np

from srtplan.bench import PAPER_KINDS, generate_blockage, generate_city, place_endpoints, render_ascii
from srtplan.blockage import detect_blockage
from srtplan.search import astar, jps


def crop(text, center, radius):
    rows = text.splitlines()
    c, r = center
    top, left = max(r - radius, 0), max(c - radius, 0)
    return "\n".join(row[left : c + radius + 1] for row in rows[top : r + radius + 1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=160)
    ap.add_argument("--seed", type=int, default=4)
    args = ap.parse_args()

    city = generate_city(args.size, seed=args.seed)
    print(f"city {args.size}x{args.size}: {len(city.obstacle_ids())} buildings, "
          f"{city.traversable.mean():.0%} of cells free")
    rng = np.random.default_rng(args.seed)

    shown = None
    for kind in PAPER_KINDS:
        kind = kind.scaled(city.width)
        start, goal = place_endpoints(city, rng, kind)
        blocked = generate_blockage(city, kind, start, goal)
        first = jps(blocked, start, goal)
        search = astar(blocked, start, goal, keep_closed=True)
        report = detect_blockage(blocked, search.closed, goal)
        print(f"\n{kind}: start {tuple(start)} goal {tuple(goal)}")
        print(f"  jps found a path: {first.found}, A* closed {len(search.closed)} cells")
        print(f"  seed cell {tuple(report.seed)}, contour {len(report.contour)} cells, "
              f"blocker ids {sorted(report.obstacle_ids)}")
        if shown is None and kind.name == "bagel":
            shown = (render_ascii(blocked, contour=report.contour, closed=search.closed), goal, kind.side)

    picture, goal, side = shown
    print(f"\naround the goal of the bagel-{side} run (x closed, c contour, @ walls, . never reached):")
    print(crop(picture, goal, side // 2 + 3))


if __name__ == "__main__":
    main()
