import json
import math
import subprocess
import sys

import numpy as np
import pytest

from clumplab import __version__
from clumplab.cli import main
from clumplab.signal_core import gaussian, grid_from_span, read_signal_csv, sample, write_signal_csv


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def report(out: str) -> dict:
    return json.loads(out)


@pytest.fixture
def gauss_csv(tmp_path):
    p = tmp_path / "gauss.csv"
    write_signal_csv(gaussian(grid_from_span(-20, 20, 0.01)), p)
    return p


def test_transform_writes_spectrum_csv(capsys, tmp_path, gauss_csv):
    out = tmp_path / "ghat.csv"
    code, stdout, _ = run(capsys, "transform", "--in", gauss_csv, "--grid", "0,0.01,4001", "--out", out)
    assert code == 0
    assert report(stdout)["status"] == "ok"
    F = read_signal_csv(out)
    assert F.grid.count == 4001
    assert np.max(np.abs(F.values - np.exp(-F.x**2 / 2))) < 1e-10


def test_transform_inverse_round_trip(capsys, tmp_path, gauss_csv):
    fwd, back = tmp_path / "f.csv", tmp_path / "b.json"
    assert run(capsys, "transform", "--in", gauss_csv, "--grid", "-20,0.01,4001", "--out", fwd)[0] == 0
    assert run(capsys, "transform", "--in", fwd, "--grid", "-5,0.5,21", "--inverse", "--out", back, "--format", "json")[0] == 0
    d = json.loads(back.read_text())
    assert d["grid"]["count"] == 21
    x = np.arange(21) * 0.5 - 5
    vals = np.array([complex(a, b) for a, b in d["values"]])
    assert np.max(np.abs(vals - np.exp(-x * x / 2))) < 1e-8


def test_build_e_records_sums(capsys, tmp_path):
    out = tmp_path / "e.json"
    code, _, _ = run(capsys, "sparse", "build-e", "--A", 1, "--depth", 8, "--weight", "sqrt-over-log", "--out", out)
    assert code == 0
    d = json.loads(out.read_text())
    assert d["status"] == "ok" and d["config"]["depth"] == 8
    spec = d["result"]["spec"]
    assert spec["sums"]["gap_condition"] <= 0.5
    assert "budget_condition" in spec["sums"]
    assert len(spec["E"]) == 2**8


def test_subspace_sparse_from_spec(capsys, tmp_path):
    e = tmp_path / "e.json"
    assert run(capsys, "sparse", "build-e", "--depth", 6, "--geometric", "--out", e)[0] == 0
    code, out, _ = run(capsys, "subspace", "sparse", "--spec", e, "--k", "exp", "--sizes", "8,16", "--step", 2**-9)
    assert code == 0
    res = report(out)["result"]["sparse"]
    assert res["basis_size"] == [8, 16] and len(res["distance"]) == 2


def test_hypothesis_not_met_exits_two(capsys):
    code, out, err = run(capsys, "multiplier", "--in", "corpus:fat-cantor")
    assert code == 2
    d = report(out)
    assert d["status"] == "hypothesis-not-met" and d["message"]
    assert "hypothesis not met" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["clumps", "--in", "/nonexistent/file.csv"],
        ["clumps", "--in", "corpus:nope"],
        ["transform", "--in", "corpus:gauss", "--grid", "0,0.1"],
        ["sparse", "im-bound", "--weight", "sqrt", "--y", "1.5"],
        ["frobnicate"],
    ],
)
def test_errors_exit_one(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1
    assert err.strip()


def test_outputs_are_deterministic(capsys):
    outs = []
    for _ in range(2):
        outs.append(run(capsys, "clumps", "--in", "corpus:fat-cantor", "--depth", 5)[1])
    assert outs[0] == outs[1]


def test_walk_reproducible_across_runs(capsys, tmp_path):
    e = tmp_path / "e.json"
    run(capsys, "sparse", "build-e", "--depth", 2, "--geometric", "--out", e)
    a = run(capsys, "--seed", 7, "sparse", "hm", "--spec", e, "--paths", 2000, "--target", "top")[1]
    b = run(capsys, "sparse", "hm", "--spec", e, "--paths", 2000, "--target", "top", "--seed", 7)[1]
    c = run(capsys, "sparse", "hm", "--spec", e, "--paths", 2000, "--target", "top", "--seed", 8)[1]
    assert a == b and a != c
    assert report(a)["config"]["seed"] == 7


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"in": "corpus:fat-cantor", "depth": 4, "seed": 11, "slope-threshold": 0.05}))
    d = report(run(capsys, "clumps", "--config", cfg)[1])
    assert d["config"]["depth"] == 4 and d["config"]["seed"] == 11 and d["config"]["slope_threshold"] == 0.05
    d = report(run(capsys, "--seed", 3, "clumps", "--config", cfg, "--depth", 5)[1])
    assert d["config"]["depth"] == 5 and d["config"]["seed"] == 3
    assert d["config"]["input"] == "corpus:fat-cantor"


def test_bad_config_exits_one(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2")
    assert run(capsys, "clumps", "--config", cfg)[0] == 1


def test_report_embeds_resolved_config(capsys):
    d = report(run(capsys, "sparse", "im-bound", "--weight", "sqrt", "--y", "0.1")[1])
    cfg = d["config"]
    for key in ("seed", "threads", "tolerance", "weight", "y", "version", "command"):
        assert key in cfg
    assert cfg["version"] == __version__


def test_console_script_version():
    r = subprocess.run([sys.executable, "-m", "clumplab.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and __version__ in r.stdout


def test_oscillate_report(capsys):
    code, out, _ = run(capsys, "oscillate", "--n", "3..5", "--step", 2**-10)
    assert code == 0
    res = report(out)["result"]
    assert res["n_list"] == [3, 4, 5]


def test_outer_reports_values(capsys, tmp_path):
    p = tmp_path / "w.csv"
    g = grid_from_span(-1, 2, 2.0**-10)
    write_signal_csv(sample(lambda x: np.where((x >= 0) & (x <= 1), math.e, 1.0), g), p)
    code, out, _ = run(capsys, "outer", "--in", p, "--z", "0.5,1")
    assert code == 0
    # log W = 1 on [0, 1]: P(0.5 + i) = (2/pi) arctan(1/2)
    (row,) = report(out)["result"]["values"]
    # the jump is interpolated linearly across one 2^-10 cell
    assert row["modulus"] == pytest.approx(math.exp(2 * math.atan(0.5) / math.pi), rel=1e-3)
