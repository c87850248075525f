"""
Command line interface.

    tvdradmm-bench run <config>
    tvdradmm-bench compare <config>
    tvdradmm-bench bounds --epsilon E [--rho R] [--d-max D | --config C] ...
    tvdradmm-bench sweep --param P --values v1,v2,... <config>
    tvdradmm-bench tune <config>

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..baselines import ParameterError
from ..bounds import dual_constants, optimal_rho, prs_rate, tracking_radius
from ..dradmm import SolverError
from ..graph import TopologyError
from .config import ALGORITHMS, ConfigError, load_config
from .experiment import (METRIC_FIELDS, TUNE_GRID, build_problem,
                         run_algorithm, sweep, tune_baseline)
from .svg import line_chart

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("tvdradmm.bench")


class SolverFailure(RuntimeError):
    pass


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else
                                                 "-inf" if v < 0 else "nan")
    return str(v)


def write_csv(path, header, rows):
    """Comma separated, LF line endings, ``repr`` floats (round-trip exact)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            vals = [r[h] for h in header] if isinstance(r, dict) else r
            w.writerow([_cell(v) for v in vals])


def write_meta(path, cfg, problem, results):
    g = problem.graph
    lines = [f"version = {__version__}"]
    lines += [f"{k} = {_cell(v)}" for k, v in cfg.items()]
    lines += [f"graph.seed_used = {g.seed}", f"graph.n_edges = {g.n_edges}",
              f"graph.max_degree = {g.max_degree}",
              f"cost.mu = {_cell(problem.mu)}", f"cost.ell = {_cell(problem.ell)}",
              f"cost.c0 = {_cell(problem.c0)}"]
    for r in results:
        for k, v in r.params.items():
            lines.append(f"{r.name}.{k} = {_cell(v)}")
        lines.append(f"{r.name}.steps = {len(r.rows)}")
        lines.append(f"{r.name}.tail_tracking_error = {_cell(r.tail_error)}")
        lines.append(f"{r.name}.tail_consensus = {_cell(r.tail_consensus)}")
        lines.append(f"{r.name}.error = {r.error or ''}")
    Path(path).write_text("\n".join(lines) + "\n")


def _execute(cfg, names):
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(cfg)
    results = []
    for name in names:
        res = run_algorithm(problem, cfg, name)
        log.info("%s: tail error %.4g, tail consensus %.4g", name,
                 res.tail_error, res.tail_consensus)
        write_csv(out / f"metrics_{name}.csv", METRIC_FIELDS, res.rows)
        results.append(res)
    write_meta(out / "run_meta.txt", cfg, problem, results)
    return out, problem, results


def _check(results):
    failed = [r for r in results if r.error]
    if failed:
        raise SolverFailure("; ".join(f"{r.name}: {r.error}" for r in failed))


def cmd_run(args):
    cfg = load_config(args.config)
    _, _, results = _execute(cfg, cfg.algo.algorithm)
    for r in results:
        print(f"{r.name}: steps={len(r.rows)} "
              f"tail_tracking_error={_cell(r.tail_error)} "
              f"tail_consensus={_cell(r.tail_consensus)}")
    _check(results)


def cmd_compare(args):
    cfg = load_config(args.config)
    out, problem, results = _execute(cfg, ALGORITHMS)
    k = [r["k"] for r in results[0].rows]
    for metric, fname, label in (
            ("tracking_error", "compare_error", "log10 error"),
            ("consensus_distance", "compare_consensus",
             "log10 consensus distance")):
        header = ["k", "t_k"] + [r.name for r in results]
        rows = []
        for i, t in enumerate(problem.times):
            rows.append([i + 1, float(t)] + [
                r.rows[i][metric] if i < len(r.rows) else None
                for r in results])
        write_csv(out / f"{fname}.csv", header, rows)
        series = {r.name: [row[metric] for row in r.rows] for r in results}
        n = min(len(v) for v in series.values())
        chart = line_chart(k[:n] if len(k) >= n else list(range(1, n + 1)),
                           {s: v[:n] for s, v in series.items()},
                           xlabel="k", ylabel=label)
        Path(out / f"{fname}.svg").write_text(chart)
    for r in results:
        print(f"{r.name}: tail_tracking_error={_cell(r.tail_error)} "
              f"tail_consensus={_cell(r.tail_consensus)}")
    _check(results)


def cmd_bounds(args):
    if not args.epsilon > 0:
        raise ConfigError("bounds: epsilon must be positive")
    if args.config:
        cfg = load_config(args.config)
        problem = build_problem(cfg.replace_algo(horizon=0))
        d_max = problem.graph.max_degree
        mu = problem.mu if args.mu is None else args.mu
        c0 = problem.c0 if args.c0 is None else args.c0
    else:
        if args.d_max is None:
            raise ConfigError("bounds: give --d-max or --config")
        d_max = args.d_max
        mu = 1.0 if args.mu is None else args.mu
        c0 = 0.0 if args.c0 is None else args.c0
    if args.n_pred < 0 or args.n_corr < 0 or args.t_s < 0:
        raise ConfigError("bounds: n_pred, n_corr, t_s must be non-negative")
    dc = dual_constants(d_max, mu, c0, args.epsilon)
    rho = optimal_rho(dc) if args.rho is None else args.rho
    if rho <= 0:
        raise ConfigError("bounds: rho must be positive")
    lam, omega = prs_rate(rho, dc)
    rc = tracking_radius(args.n_pred, args.n_corr, args.t_s, dc, rho)
    report = [
        ("d_max", d_max), ("mu", mu), ("c0", c0), ("epsilon", args.epsilon),
        ("mu_bar", dc.mu_bar), ("ell_bar", dc.ell_bar),
        ("kappa_bar", dc.kappa_bar), ("c0_bar", dc.c0_bar),
        ("norm_A", dc.norm_A), ("rho", rho), ("lambda", lam), ("omega", omega),
        ("n_pred", args.n_pred), ("n_corr", args.n_corr), ("t_s", args.t_s),
        ("zeta_pred", rc.zeta_p), ("zeta_corr", rc.zeta_c),
        ("xi_pred", rc.xi_p), ("eta0", rc.eta0), ("eta1", rc.eta1),
        ("feasible", "feasible" if rc.feasible else "infeasible"),
        ("radius", rc.radius),
        ("primal_radius", dc.norm_A / mu * rc.radius),
    ]
    for k, v in report:
        print(f"{k} = {v:.10g}" if isinstance(v, float) else f"{k} = {v}")


def cmd_sweep(args):
    cfg = load_config(args.config)
    try:
        values = [v.strip() for v in args.values.split(",") if v.strip()]
        rows, error = sweep(cfg, args.param, values)
    except ValueError as e:
        raise ConfigError(f"sweep: {e}") from None
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ["value", "tail_tracking_error", "tail_consensus", "eta1",
              "theory_radius"]
    write_csv(out / f"sweep_{args.param}.csv", header, rows)
    for r in rows:
        print(", ".join(f"{h}={_cell(r[h])}" for h in header))
    if error:
        raise SolverFailure(error)


def cmd_tune(args):
    cfg = load_config(args.config)
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(cfg)
    records = []
    for name in ("pc_gradient", "dual_decomp"):
        best, recs = tune_baseline(problem, cfg.algo, name, TUNE_GRID)
        records += recs
        key = "alpha" if name == "pc_gradient" else "step"
        print(f"{name}: best {key} = {best!r}")
    write_csv(out / "tune.csv", ["algorithm", "value", "tail_tracking_error",
                                 "tail_consensus", "status"], records)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="tvdradmm-bench",
        description="Time-varying distributed optimization benchmarks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (
            ("run", cmd_run, "run the configured algorithm(s)"),
            ("compare", cmd_compare, "run all algorithms and chart them"),
            ("tune", cmd_tune, "grid-search the baseline parameters")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config")
        p.set_defaults(func=fn)

    p = sub.add_parser("bounds", help="print theoretical constants")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--rho", type=float)
    p.add_argument("--n-pred", type=int, default=5)
    p.add_argument("--n-corr", type=int, default=5)
    p.add_argument("--t-s", type=float, default=0.1)
    p.add_argument("--d-max", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--c0", type=float)
    p.add_argument("--config", help="take d_max, mu and c0 from a run config")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", help="tail metrics against one parameter")
    p.add_argument("--param", required=True,
                   choices=("epsilon", "rho", "n_pred", "n_corr", "t_s"))
    p.add_argument("--values", required=True, help="comma separated list")
    p.add_argument("config")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigError, TopologyError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, SolverError, ParameterError) as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK
