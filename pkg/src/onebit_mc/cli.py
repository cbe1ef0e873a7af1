"""Command line entry point: ``onebit-mc {simulate,solve,experiment,bench,check}``.

Exit codes: 0 on success, 2 when some grid rows (or monitor checks) failed,
1 on configuration errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import analysis, io
from .experiments import (
    BENCH_COLUMNS,
    SOLVERS,
    ConfigError,
    ExperimentConfig,
    bench,
    build_problem,
    make_instance,
    run_experiment,
    run_solver,
    solver_config,
    write_csv,
)
from .plots import emit_plots
from .solvers import obsvt1, obsvt2, randomized_obsvt

log = logging.getLogger("onebit_mc")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2
_MONITORED = {"obsvt1": (obsvt1, "obsvt1"), "obsvt2": (obsvt2, "obsvt2"),
              "rand-obsvt": (randomized_obsvt, "randomized")}


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    raw = cfg.to_dict()
    if args.seed is not None:
        raw["seed"] = args.seed
    if getattr(args, "solver", None):
        raw["solvers"] = [args.solver]
    if args.out:
        raw["output"] = str(args.out)
    return ExperimentConfig.from_dict(raw)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    inst = make_instance(cfg, cfg.seed)
    p = build_problem(inst)
    out = Path(cfg.output)
    io.save_problem(out, p)
    io.write_matrix_csv(out / "x_true.csv", inst.x_true)
    if inst.z is not None:
        io.write_matrix_csv(out / "noise.csv", inst.z)
    print(f"wrote problem with m={p.m}, m'={p.m_prime}, dims={p.dims} to {out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _config(args)
    p = io.load_problem(args.problem)
    name = args.solver or cfg.solvers[0]
    x, tr, extra = run_solver(name, cfg, p, seed=cfg.seed)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    io.write_matrix_csv(out / "x_hat.csv", x)
    summary = {"solver": name, **extra}
    if tr is not None:
        tr.to_csv(out / "trace.csv")
        summary.update(iterations=len(tr), stop_reason=tr.stop_reason, converged=tr.converged)
    consistent, h = analysis.consistency_check(x, p)
    summary.update(consistent=consistent, hamming=h)
    truth = Path(args.problem) / "x_true.csv"
    if truth.exists():
        summary["rel_error"] = analysis.relative_error(x, io.read_matrix_csv(truth))
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=str))
    print(json.dumps(summary, default=str))
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _config(args)
    rows, _ = run_experiment(cfg)
    ok = [r for r in rows if r["status"] == "ok"]
    if ok and not args.no_plots:
        emit_plots(ok, cfg.output)
    failed = sum(r["status"] == "failed" for r in rows)
    print(f"{len(rows)} rows, {failed} failed -> {cfg.output}")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    rows, ratios = bench(cfg, args.target, sizes=tuple(args.sizes), budget_s=args.budget)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "bench.csv", rows, BENCH_COLUMNS)
    for n, r in ratios.items():
        print(f"n={n}: median time ratio mle/obsvt2 = {r:.3g}")
    return EXIT_PARTIAL if any(not r["reached"] for r in rows) else EXIT_OK


def cmd_check(args) -> int:
    """Rerun a solver with iterates recorded and check its contraction inequality."""
    cfg = _config(args)
    name = args.solver or "obsvt2"
    if name not in _MONITORED:
        raise ConfigError(f"check supports {sorted(_MONITORED)}, not {name!r}")
    solver, variant = _MONITORED[name]
    p = io.load_problem(args.problem)
    extra = {}
    if name == "rand-obsvt":
        extra = {"sketch_size": max(1, int(round(cfg.solver.betas[0] * p.m_prime))),
                 "seed": cfg.seed}
    sc = solver_config(cfg, p, **extra)
    x_ref, y_ref = analysis.reference_run(solver, p, sc)
    _, tr = solver(p, replace(sc, record_iterates=True))
    rep = analysis.convergence_monitor(tr, x_ref, y_ref, p.m, sc.delta, variant)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    rep.to_csv(out / "monitor.csv")
    print(f"{variant}: {len(rep.lhs)} iterations, {len(rep.violations)} contraction violations, "
          f"{len(rep.lemma_violations)} lemma violations ({rep.note})")
    return EXIT_PARTIAL if rep.flagged and variant != "randomized" else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="onebit-mc", description="One-bit dithered matrix completion experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, solver=False):
        sp.add_argument("--config", type=Path, help="YAML experiment config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", type=Path, help="output directory (overrides config)")
        if solver:
            sp.add_argument("--solver", choices=SOLVERS)
        return sp

    common(sub.add_parser("simulate", help="draw an instance and write its one-bit problem"))
    sp = common(sub.add_parser("solve", help="run one solver on a saved problem"), solver=True)
    sp.add_argument("--problem", type=Path, required=True)
    sp = common(sub.add_parser("experiment", help="run a config grid"), solver=True)
    sp.add_argument("--no-plots", action="store_true")
    sp = common(sub.add_parser("bench", help="time obsvt2 and mle to an error target"))
    sp.add_argument("--target", type=float, default=math.sqrt(0.8),
                    help="relative error target (default sqrt(0.8), i.e. NMSE <= 0.8)")
    sp.add_argument("--sizes", type=int, nargs="+", default=[100, 300, 500])
    sp.add_argument("--budget", type=float, default=120.0, help="seconds per run")
    sp = common(sub.add_parser("check", help="convergence monitor on a saved problem"), solver=True)
    sp.add_argument("--problem", type=Path, required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"simulate": cmd_simulate, "solve": cmd_solve, "experiment": cmd_experiment,
               "bench": cmd_bench, "check": cmd_check}[args.command]
    try:
        return handler(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
