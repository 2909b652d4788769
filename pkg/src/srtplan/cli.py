"""Command line entry point: ``srtplan <command> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import bench
from .blockage import ContourReport, detect_blockage
from .errors import SrtError
from .grid_model import (
    CellIndex,
    GridMap,
    format_grid_text,
    load_grid,
    load_world,
    rasterize,
    save_grid,
    square_corners,
)
from .search import astar, jps
from .srt_loop import PolarRegion, region_from_terms, solve_srt


def _emit(text, out, binary=False):
    if out in (None, "-"):
        if binary:
            sys.stdout.buffer.write(text)
        else:
            sys.stdout.write(text)
        return
    with open(out, "wb" if binary else "w") as fh:
        fh.write(text)


def _grid_and_endpoints(args) -> tuple[GridMap, CellIndex, CellIndex]:
    if args.world:
        grid = rasterize(load_world(args.world))
        start, goal = grid.start, grid.goal
    else:
        grid = load_grid(args.grid)
        start = goal = None
    if args.start:
        start = CellIndex(*args.start)
    if args.goal:
        goal = CellIndex(*args.goal)
    if start is None or goal is None:
        raise SystemExit("a grid map needs --start COL ROW and --goal COL ROW")
    return grid, start, goal


def _add_map_args(p, need_map=True):
    src = p.add_mutually_exclusive_group(required=need_map)
    src.add_argument("--world", help="world description JSON")
    src.add_argument("--grid", help="grid map in text format")
    p.add_argument("--start", type=int, nargs=2, metavar=("COL", "ROW"))
    p.add_argument("--goal", type=int, nargs=2, metavar=("COL", "ROW"))


def cmd_plan(args) -> int:
    grid, start, goal = _grid_and_endpoints(args)
    search = jps if args.algo == "jps" else astar
    res = search(grid, start, goal)
    if args.format == "json":
        out = {
            "outcome": "Found" if res.found else "NoPath",
            "cost": res.cost if res.found else None,
            "expanded": res.expanded,
            "path": [list(c) for c in res.path],
        }
        _emit(json.dumps(out) + "\n", args.out)
    elif res.found:
        _emit("".join(f"{c} {r}\n" for c, r in res.path), args.out)
    else:
        _emit("NoPath\n", args.out)
    return 0


def cmd_detect(args) -> int:
    grid, start, goal = _grid_and_endpoints(args)
    res = astar(grid, start, goal, keep_closed=True)
    if res.found:
        print("a path exists; nothing blocks the goal", file=sys.stderr)
        return 1
    report = detect_blockage(grid, res.closed, goal)
    _emit(report.to_json() + "\n", args.out)
    return 0


def cmd_srt(args) -> int:
    world = load_world(args.world)
    goal = None
    if args.goal_square:
        x, y, side = args.goal_square
        goal = square_corners((x, y), side)
    elif args.polar:
        r0, r1, p0, p1 = args.polar
        goal = PolarRegion.sector(r0, r1, math.radians(p0), math.radians(p1))
    elif args.terms:
        goal = region_from_terms(*args.terms)
    trace = solve_srt(world, goal, heading=math.radians(args.heading))
    _emit(trace.to_json() + "\n", args.out)
    return 0 if trace.status == "GoalReached" else 1


def cmd_bench(args) -> int:
    if args.maps:
        maps = list(args.maps)
    else:
        maps = [bench.generate_city(args.size, seed=args.seed * 1000 + i) for i in range(args.cities)]
    kinds = bench.PAPER_KINDS if args.kind == "all" else (bench.BlockageKind.parse(args.kind),)
    records = []
    for kind in kinds:
        records += bench.run_scenario(maps, kind, args.trials, args.seed)
    if args.format == "json":
        _emit(bench.records_to_json(records) + "\n", args.out)
    else:
        _emit(bench.records_to_csv(records, timings=args.timings), args.out)
    return 0


def _overlays(paths):
    path = contour = closed = None
    for name in paths or ():
        with open(name) as fh:
            data = json.load(fh)
        if "contour" in data:
            rep = ContourReport.from_dict(data)
            contour = rep.contour
        elif "path" in data:
            path = [CellIndex(*c) for c in data["path"]]
        elif "events" in data:
            path = [CellIndex(*c) for e in data["events"] if e["type"] == "GridPath" for c in e["cells"]]
        else:
            raise SystemExit(f"{name}: no path, contour or trace in this file")
    return path, contour, closed


def cmd_render(args) -> int:
    grid = load_grid(args.grid) if args.grid else rasterize(load_world(args.world))
    path, contour, closed = _overlays(args.overlay)
    if args.start and args.goal:
        start, goal = CellIndex(*args.start), CellIndex(*args.goal)
        res = astar(grid, start, goal, keep_closed=args.closed)
        if res.found:
            path = res.path
        else:
            if args.closed:
                closed = res.closed
            contour = detect_blockage(grid, res.closed, goal).contour
    if args.format == "ppm":
        _emit(bench.render_ppm(grid, path, contour, closed, scale=args.scale), args.out, binary=True)
    else:
        _emit(bench.render_ascii(grid, path, contour, closed), args.out)
    return 0


def cmd_gen_city(args) -> int:
    grid = bench.generate_city(args.size, seed=args.seed)
    if args.out in (None, "-"):
        sys.stdout.write(format_grid_text(grid))
    else:
        save_grid(grid, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="srtplan", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="grid path between two cells")
    _add_map_args(p)
    p.add_argument("--algo", choices=("astar", "jps"), default="jps")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("detect", help="blocking obstacle report as JSON")
    _add_map_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("srt", help="run the relocation loop, print the execution trace")
    p.add_argument("world", help="world description JSON")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--goal-square", type=float, nargs=3, metavar=("X", "Y", "SIDE"))
    g.add_argument("--polar", type=float, nargs=4, metavar=("R0", "R1", "PHI0", "PHI1"),
                   help="goal sector around the agent, bearings in degrees")
    g.add_argument("--terms", nargs=2, metavar=("DISTANCE", "DIRECTION"))
    p.add_argument("--heading", type=float, default=0.0, help="agent heading in degrees")
    p.add_argument("--out")
    p.set_defaults(func=cmd_srt)

    p = sub.add_parser("bench", help="blockage benchmark")
    p.add_argument("--maps", nargs="*", help="grid map files; default: generated cities")
    p.add_argument("--cities", type=int, default=4)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--kind", default="all", help="half, quarter, bagel-N or all")
    p.add_argument("--trials", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--timings", action="store_true", help="add timing columns to the CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="ASCII or PPM picture of a map with overlays")
    _add_map_args(p)
    p.add_argument("--overlay", nargs="*", help="plan, detect or srt JSON output")
    p.add_argument("--closed", action="store_true", help="show CLOSED cells of a failed search")
    p.add_argument("--format", choices=("ascii", "ppm"), default="ascii")
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("gen-city", help="write a synthetic city grid")
    p.add_argument("--size", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_city)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SrtError, OSError, ValueError) as exc:
        print(f"srtplan {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
