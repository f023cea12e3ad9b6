import json
import math
import re

import numpy as np
import pytest

from planar_ac.cli import main
from planar_ac.corrfile import ParseError, load, loads
from planar_ac.geometry import planar_angle

LINE = re.compile(r"alpha_deg=(\S+) t=(\S+) normal=(\S+) inliers=(\d+) iterations=(\d+) time_ms=\S+")

SOLVER = {"ground": "1ac-ground", "frontal": "1ac-frontal", "side": "1ac-side",
          "general": "1ac-vertical"}


def _parse(text):
    out = []
    for line in text.splitlines():
        m = LINE.fullmatch(line)
        assert m, line
        normal = None if m[3] == "none" else np.array([float(v) for v in m[3].split(",")])
        out.append((float(m[1]), np.array([float(v) for v in m[2].split(",")]), normal, int(m[4])))
    return out


def _simulate(tmp_path, *extra, name="c.txt"):
    path = tmp_path / name
    assert main(["simulate", "--out", str(path), *extra]) == 0
    return path, json.loads((tmp_path / (name + ".json")).read_text())


def test_bench_row_count(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", "--n", "2", "--solvers", "1ac-ground,4pc", "--out-csv", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 2 * 5
    assert main(["bench", "--n", "2", "--solvers", "1ac-ground,4pc"]) == 0
    assert capsys.readouterr().out == out.read_text()


def test_bench_is_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bench", "--experiment", "tilt", "--n", "3", "--seed", "4"]
    assert main([*args, "--out", str(a), "--out-svg", str(tmp_path / "a.svg")]) == 0
    assert main([*args, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.svg").stat().st_size > 0


@pytest.mark.parametrize("argv", [
    ["bench", "--n", "0"],
    ["bench", "--solvers", "bogus"],
    ["bench", "--experiment", "nope"],
    ["simulate", "--out", "x", "--wall-angle", "95"],
    ["simulate", "--out", "x", "--outlier-ratio", "1"],
    ["solve"],
    [],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err


def test_write_failure(tmp_path):
    assert main(["bench", "--n", "1", "--out", str(tmp_path / "missing" / "x.csv")]) == 3
    assert main(["simulate", "--out", str(tmp_path / "missing" / "c.txt")]) == 3


@pytest.mark.parametrize("plane,extra", [
    ("ground", []),
    ("frontal", []),
    ("side", []),
    ("general", ["--wall-angle", "30"]),
])
def test_simulate_then_solve(plane, extra, tmp_path):
    path, truth = _simulate(tmp_path, "--plane", plane, "--points", "40", "--seed", "3", *extra)
    out = tmp_path / "pose.txt"
    assert main(["solve", str(path), "--solver", SOLVER[plane], "--all", "--out", str(out)]) == 0
    R = np.array(truth["rotation"])
    t = np.array(truth["t_dir"])
    n = np.array(truth["normal"])
    hits = [(a, tt, nn) for a, tt, nn, inl in _parse(out.read_text())
            if abs(math.remainder(math.radians(a) - planar_angle(R), 2 * math.pi)) < 1e-6
            and np.allclose(tt, t, atol=1e-6) and inl == 40]
    assert hits
    assert any(nn is not None and np.allclose(nn, n, atol=1e-6) for _, _, nn in hits)


def test_solve_default_prints_one_line(tmp_path, capsys):
    path, truth = _simulate(tmp_path, "--points", "20", "--alpha", "7")
    assert main(["solve", str(path)]) == 0
    (rec,) = _parse(capsys.readouterr().out)
    assert rec[0] == pytest.approx(7.0, abs=1e-6)


def test_solve_with_outliers(tmp_path, capsys):
    path, truth = _simulate(tmp_path, "--points", "100", "--outlier-ratio", "0.5",
                            "--point-noise", "0.5", "--seed", "8")
    assert len(load(path).rows) == 200 and len(truth["inliers"]) == 100
    assert main(["solve", str(path), "--threshold", "2e-3"]) == 0
    alpha, t, _, inliers = _parse(capsys.readouterr().out)[0]
    assert abs(alpha - truth["alpha_deg"]) < 0.5
    assert 95 <= inliers <= 105


def test_solve_failures(tmp_path, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert main(["solve", str(empty)]) == 2
    assert main(["solve", str(tmp_path / "nothing.txt")]) == 2
    path, _ = _simulate(tmp_path, "--points", "5")
    assert main(["solve", str(path), "--solver", "8pc"]) == 4
    assert main(["solve", str(path), "--confidence", "2"]) == 2
    assert main(["solve", str(path), "--out", str(tmp_path / "no" / "x")]) == 3


def test_simulate_is_reproducible(tmp_path):
    args = ["--points", "30", "--seed", "11", "--outlier-ratio", "0.3", "--point-noise", "1"]
    a, ta = _simulate(tmp_path, *args, name="a.txt")
    b, tb = _simulate(tmp_path, *args, name="b.txt")
    assert a.read_bytes() == b.read_bytes()
    assert ta == tb


def test_corrfile_round_trip_and_errors(tmp_path):
    path, _ = _simulate(tmp_path, "--points", "4")
    text = path.read_text()
    f = loads("# header\n" + text)
    assert f.rows.shape == (4, 8)
    assert loads(f.dumps()).dumps() == f.dumps()
    for bad in ("K1 1 1 0 0\n1 2 3 4 5 6 7 8\n",
                "K1 1 1 0\nK2 1 1 0 0\n1 2 3 4 5 6 7 8\n",
                "K1 1 1 0 0\nK2 1 1 0 0\n1 2 3\n",
                "K1 1 1 0 0\nK2 1 1 0 0\n1 2 3 4 5 6 7 nan\n",
                "K1 1 1 0 0\nK2 1 1 0 0\n1 2 3 4 5 6 7 x\n",
                "K1 0 1 0 0\nK2 1 1 0 0\n1 2 3 4 5 6 7 8\n",
                "K1 1 1 0 0\nK2 1 1 0 0\n"):
        with pytest.raises(ParseError):
            loads(bad)
