import csv
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from tvdradmm.bench import (ConfigError, parse_config, tail_median)
from tvdradmm.bench.cli import main
from tvdradmm.bench.config import DEFAULT_CONFIG
from tvdradmm.bench.svg import line_chart

GOLDEN = Path(__file__).parent / "golden"

SMALL = """\
[graph]
n_nodes = 8
radius = 0.6
seed = 3

[cost]
seed = 2

[algo]
algorithm = {algo}
epsilon = 1e-2
rho = 20
n_pred = 2
n_corr = 2
horizon = {horizon}
alpha = 0.05
step = 0.5

[output]
dir = {out}
"""


def write_cfg(tmp_path, name="c.ini", algo="all", horizon=20, out="out",
              extra=""):
    p = tmp_path / name
    p.write_text(SMALL.format(algo=algo, horizon=horizon, out=out) + extra)
    return p


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- config ------------------------------------------------------------------

def test_default_config_parses():
    cfg = parse_config(DEFAULT_CONFIG)
    assert cfg.algo.algorithm == ("dradmm", "pc_gradient", "dual_decomp")
    assert cfg.algo.epsilon == 1e-3 and cfg.algo.rho == 1.06e4
    assert cfg.algo.t_s == 0.1 and cfg.algo.horizon == 1000
    assert cfg.graph.radius == 0.35 and cfg.cost.nu == pytest.approx(np.pi / 80)
    assert cfg.algo.alpha is None and cfg.algo.step is None


@pytest.mark.parametrize("text,msg", [
    ("[algo]\nfoo = 1\n[output]\ndir = o\n", "unknown key"),
    ("[nope]\n[output]\ndir = o\n", "unknown section"),
    ("[algo]\nhorizon = 3\n", "missing required"),
    ("[algo]\nhorizon = ten\n[output]\ndir = o\n", "cannot parse"),
    ("[algo]\nalgorithm = admm\n[output]\ndir = o\n", "algorithm"),
    ("[algo]\nn_pred = 0\nn_corr = 0\n[output]\ndir = o\n", "both"),
    ("[algo]\nrho = -1\n[output]\ndir = o\n", "rho"),
    ("no section = 1\n", "syntax"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_algorithm_list_and_auto():
    cfg = parse_config("[algo]\nalgorithm = dual_decomp, dradmm\nalpha = auto\n"
                       "step = 0.3\n[output]\ndir = o\n")
    assert cfg.algo.algorithm == ("dual_decomp", "dradmm")
    assert cfg.algo.alpha is None and cfg.algo.step == 0.3


def test_tail_median():
    assert tail_median(np.arange(10.0)) == 8.5
    assert tail_median([3.0]) == 3.0
    assert math.isnan(tail_median([]))


# -- run -------------------------------------------------------------------

def test_run_writes_three_csvs(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["run", str(cfg)]) == 0
    out = tmp_path / "out"
    golden = (GOLDEN / "metrics_header.csv").read_bytes()
    for algo in ("dradmm", "pc_gradient", "dual_decomp"):
        data = (out / f"metrics_{algo}.csv").read_bytes()
        assert data.startswith(golden)
        assert b"\r" not in data
        rows = read_rows(out / f"metrics_{algo}.csv")
        assert len(rows) == 21
        assert all(float(r[2]) >= 0 for r in rows[1:])
    meta = (out / "run_meta.txt").read_text()
    assert "graph.seed_used = 3" in meta and "algo.rho = 20.0" in meta


def test_run_comm_counts(tmp_path):
    cfg = write_cfg(tmp_path, algo="dradmm", horizon=5)
    assert main(["run", str(cfg)]) == 0
    meta = dict(l.split(" = ", 1) for l in
                (tmp_path / "out" / "run_meta.txt").read_text().splitlines())
    n_edges = int(meta["graph.n_edges"])
    rows = read_rows(tmp_path / "out" / "metrics_dradmm.csv")[1:]
    assert all(int(r[5]) == (2 + 2) * 2 * n_edges for r in rows)
    assert all(r[4] == "" for r in rows)  # no exact dual for logistic costs


def test_run_quadratic_reports_dual_distance(tmp_path):
    cfg = write_cfg(tmp_path, algo="dradmm", horizon=5)
    text = cfg.read_text().replace("seed = 2", "seed = 2\nkind = quadratic")
    cfg.write_text(text)
    assert main(["run", str(cfg)]) == 0
    rows = read_rows(tmp_path / "out" / "metrics_dradmm.csv")[1:]
    assert all(float(r[4]) >= 0 for r in rows)


def test_run_horizon_zero(tmp_path):
    cfg = write_cfg(tmp_path, horizon=0)
    assert main(["run", str(cfg)]) == 0
    for algo in ("dradmm", "pc_gradient", "dual_decomp"):
        assert (tmp_path / "out" / f"metrics_{algo}.csv").read_bytes() == \
            (GOLDEN / "metrics_header.csv").read_bytes()


def test_run_is_deterministic_across_workers(tmp_path, monkeypatch):
    cfg1 = write_cfg(tmp_path, "a.ini", out="a")
    cfg2 = write_cfg(tmp_path, "b.ini", out="b")
    text = cfg1.read_text().replace("alpha = 0.05\nstep = 0.5\n",
                                    "alpha = auto\nstep = auto\n")
    cfg1.write_text(text)
    cfg2.write_text(text.replace("dir = a", "dir = b"))
    monkeypatch.setenv("TVDRADMM_THREADS", "1")
    assert main(["run", str(cfg1)]) == 0
    monkeypatch.setenv("TVDRADMM_THREADS", "4")
    assert main(["run", str(cfg2)]) == 0
    for f in ("metrics_dradmm.csv", "metrics_pc_gradient.csv",
              "metrics_dual_decomp.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[algo]\nwhat = 1\n[output]\ndir = o\n")
    assert main(["run", str(bad)]) == 2
    assert main(["run", str(tmp_path / "missing.ini")]) == 4
    # a diverging step size is a solver error
    cfg = write_cfg(tmp_path, algo="dual_decomp", horizon=200)
    cfg.write_text(cfg.read_text().replace("step = 0.5", "step = 500"))
    assert main(["run", str(cfg)]) == 3
    # output directory that cannot be created
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = write_cfg(tmp_path, "d.ini", out="file/sub")
    assert main(["run", str(cfg)]) == 4
    assert main(["bogus"]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "tvdradmm.bench", "bounds",
                        "--epsilon", "1", "--d-max", "4", "--n-pred", "0",
                        "--n-corr", "0"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "eta1 = 1\n" in r.stdout and "feasible = infeasible" in r.stdout


# -- bounds ------------------------------------------------------------------

def report(capsys, argv):
    assert main(argv) == 0
    out = capsys.readouterr().out
    return dict(l.split(" = ") for l in out.strip().splitlines())


def test_bounds_optimal_rho(capsys):
    r = report(capsys, ["bounds", "--epsilon", "1", "--d-max", "3"])
    assert float(r["kappa_bar"]) == 4
    assert float(r["lambda"]) == pytest.approx(1 / 3, abs=1e-9)
    assert float(r["omega"]) == pytest.approx(2.0)


def test_bounds_rejects_nonpositive_eps(capsys):
    assert main(["bounds", "--epsilon", "0", "--d-max", "3"]) == 2
    assert main(["bounds", "--epsilon", "1"]) == 2


# regression anchors: experiment graph (seed 1, d_max = 10), mu = 1,
# c0 = 2.5 |pi/80 - 1|, eps = 1e-3, optimal rho, N_P = N_C = 5, T_s = 0.1
EXPERIMENT_BOUNDS = {"d_max": 10.0, "kappa_bar": 10001.0,
                     "rho": 9.999500037, "lambda": 0.980199,
                     "eta1": 165597584.9, "c0_bar": 7.595238267}


def test_bounds_experiment_regression(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    cfg.write_text(DEFAULT_CONFIG)
    r = report(capsys, ["bounds", "--epsilon", "1e-3", "--config", str(cfg)])
    for k, v in EXPERIMENT_BOUNDS.items():
        assert float(r[k]) == pytest.approx(v, rel=1e-9)
    assert r["feasible"] == "infeasible"


# -- compare, sweep, tune ------------------------------------------------------

def test_compare_outputs(tmp_path):
    cfg = write_cfg(tmp_path, horizon=15)
    assert main(["compare", str(cfg)]) == 0
    out = tmp_path / "out"
    for name in ("compare_error", "compare_consensus"):
        rows = read_rows(out / f"{name}.csv")
        assert rows[0] == ["k", "t_k", "dradmm", "pc_gradient", "dual_decomp"]
        assert len(rows) == 16
        svg = (out / f"{name}.svg").read_text()
        assert svg.startswith("<svg") and svg.count("<polyline") >= 3
        assert ">k</text>" in svg and "log10" in svg
    # the compare table repeats the per-algorithm metrics exactly
    m = read_rows(out / "metrics_pc_gradient.csv")
    c = read_rows(out / "compare_error.csv")
    assert [r[2] for r in m[1:]] == [r[3] for r in c[1:]]


def test_sweep_single_value_matches_run(tmp_path, capsys):
    cfg = write_cfg(tmp_path, algo="dradmm", horizon=30)
    assert main(["run", str(cfg)]) == 0
    meta = dict(l.split(" = ", 1) for l in
                (tmp_path / "out" / "run_meta.txt").read_text().splitlines())
    assert main(["sweep", "--param", "epsilon", "--values", "1e-2",
                 str(cfg)]) == 0
    path = tmp_path / "out" / "sweep_epsilon.csv"
    assert path.read_bytes().startswith((GOLDEN / "sweep_header.csv").read_bytes())
    rows = read_rows(path)
    assert len(rows) == 2
    assert float(rows[1][1]) == float(meta["dradmm.tail_tracking_error"])
    assert float(rows[1][2]) == float(meta["dradmm.tail_consensus"])


def test_sweep_epsilon_theory_column(tmp_path):
    cfg = write_cfg(tmp_path, algo="dradmm", horizon=10)
    assert main(["sweep", "--param", "epsilon", "--values",
                 "1e-3,1e-2,1e-1,1", str(cfg)]) == 0
    rows = read_rows(tmp_path / "out" / "sweep_epsilon.csv")[1:]
    eta1 = [float(r[3]) for r in rows]
    assert all(b <= a for a, b in zip(eta1, eta1[1:]))


def test_sweep_rejects_bad_values(tmp_path):
    cfg = write_cfg(tmp_path, algo="dradmm", horizon=5)
    assert main(["sweep", "--param", "n_corr", "--values", "two",
                 str(cfg)]) == 2
    assert main(["sweep", "--param", "rho", "--values", "-1", str(cfg)]) == 2
    assert main(["sweep", "--param", "horizon", "--values", "1",
                 str(cfg)]) == 2


def test_tune_writes_grid(tmp_path, capsys):
    cfg = write_cfg(tmp_path, horizon=10)
    assert main(["tune", str(cfg)]) == 0
    rows = read_rows(tmp_path / "out" / "tune.csv")
    assert rows[0] == ["algorithm", "value", "tail_tracking_error",
                       "tail_consensus", "status"]
    assert len(rows) == 1 + 2 * 7
    assert "best alpha" in capsys.readouterr().out


def test_svg_handles_nonpositive_values():
    svg = line_chart([1, 2, 3, 4], {"a": [1.0, 0.0, 1e-3, 2.0]})
    assert svg.count("<polyline") == 2
    assert line_chart([], {"a": []}).startswith("<svg")
