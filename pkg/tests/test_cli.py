import json
import subprocess
import sys

import numpy as np
import pytest

from srtplan.cli import main
from srtplan.grid_model import (
    GridMap,
    WorldDescription,
    load_grid,
    ring,
    save_grid,
    save_world,
    square_corners,
)


@pytest.fixture
def wall_grid(tmp_path):
    owner = np.full((5, 6), -1)
    owner[:, 3] = 0
    path = tmp_path / "wall.map"
    save_grid(GridMap(owner, {0: True}), path)
    return path


@pytest.fixture
def ring_world_file(tmp_path):
    world = WorldDescription(
        (0.0, 20.0, 0.0, 20.0),
        (ring(0, (15.5, 15.5), 2.5, 0.6, destroyable=True),),
        0.3,
        (2.5, 2.5),
        square_corners((15.5, 15.5), 1.0),
    )
    path = tmp_path / "world.json"
    save_world(world, path)
    return path


def test_plan_text_and_json(tmp_path, capsys):
    grid = tmp_path / "open.map"
    save_grid(GridMap(np.full((3, 4), -1)), grid)
    assert main(["plan", "--grid", str(grid), "--start", "0", "0", "--goal", "3", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "0 0" and lines[-1] == "3 2"
    out = tmp_path / "plan.json"
    assert main(["plan", "--grid", str(grid), "--start", "0", "0", "--goal", "3", "2",
                 "--algo", "astar", "--format", "json", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["outcome"] == "Found" and data["cost"] == pytest.approx(1 + 2 * 2 ** 0.5)


def test_plan_reports_no_path(wall_grid, capsys):
    assert main(["plan", "--grid", str(wall_grid), "--start", "0", "0", "--goal", "5", "0"]) == 0
    assert capsys.readouterr().out == "NoPath\n"


def test_detect_writes_report(wall_grid, capsys):
    assert main(["detect", "--grid", str(wall_grid), "--start", "0", "0", "--goal", "5", "0"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["obstacle_ids"] == [0] and rep["destroyable"] is True
    assert len(rep["contour"]) == 5


def test_detect_with_open_path_exits_one(tmp_path):
    grid = tmp_path / "open.map"
    save_grid(GridMap(np.full((3, 3), -1)), grid)
    assert main(["detect", "--grid", str(grid), "--start", "0", "0", "--goal", "2", "2"]) == 1


def test_srt_trace(ring_world_file, tmp_path):
    out = tmp_path / "trace.json"
    assert main(["srt", str(ring_world_file), "--out", str(out)]) == 0
    trace = json.loads(out.read_text())
    assert trace["status"] == "GoalReached"
    assert [e["type"] for e in trace["events"]].count("Destroy") == 1


def test_srt_with_polar_goal(ring_world_file, capsys):
    # 10 m ahead-left of the agent, outside the ring
    assert main(["srt", str(ring_world_file), "--polar", "10", "10", "45", "45"]) == 0
    trace = json.loads(capsys.readouterr().out)
    assert trace["goal_cell"] == [9, 9]
    assert main(["srt", str(ring_world_file), "--terms", "near", "ahead"]) == 0


def test_bench_csv_is_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bench", "--cities", "1", "--size", "64", "--kind", "quarter", "--trials", "2", "--seed", "3"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("trial,map_id,kind,")


def test_bench_json_on_map_files(tmp_path, capsys):
    city = tmp_path / "city.map"
    assert main(["gen-city", "--size", "64", "--seed", "2", "--out", str(city)]) == 0
    assert load_grid(city).width == 64
    assert main(["bench", "--maps", str(city), "--kind", "bagel-50", "--trials", "1", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert list(data["summary"]) == ["bagel-6"]


def test_render_ascii_and_ppm(wall_grid, tmp_path, capsys):
    assert main(["render", "--grid", str(wall_grid), "--start", "0", "0", "--goal", "5", "0", "--closed"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == "xxcD.."
    out = tmp_path / "pic.ppm"
    assert main(["render", "--grid", str(wall_grid), "--format", "ppm", "--scale", "2", "--out", str(out)]) == 0
    assert out.read_bytes().startswith(b"P6\n12 10\n255\n")


def test_render_with_overlay_file(wall_grid, tmp_path, capsys):
    rep = tmp_path / "rep.json"
    main(["detect", "--grid", str(wall_grid), "--start", "0", "0", "--goal", "5", "0", "--out", str(rep)])
    assert main(["render", "--grid", str(wall_grid), "--overlay", str(rep)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "..cD.."


def test_gen_city_to_stdout(capsys):
    assert main(["gen-city", "--size", "32", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("type octile\nheight 32\nwidth 32\nmap\n")


def test_errors_exit_two(tmp_path, capsys):
    assert main(["plan", "--grid", str(tmp_path / "missing.map"), "--start", "0", "0", "--goal", "1", "1"]) == 2
    assert "srtplan plan:" in capsys.readouterr().err
    bad = tmp_path / "bad.map"
    bad.write_text("height 1\nwidth 1\nmap\n?\n")
    assert main(["bench", "--maps", str(bad), "--trials", "1"]) == 2


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "srtplan.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("plan", "detect", "srt", "bench", "render", "gen-city"):
        assert cmd in out.stdout
