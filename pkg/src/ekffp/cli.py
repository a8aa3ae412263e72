"""Command-line front end: ``ekffp {run,sweep,nash,verify}``.

Exit codes: 0 success, 1 experiment failure (failed replications or checks),
2 usage or configuration error. Output goes to ``--out``, else the
``EKFFP_OUT`` environment variable, else ``./ekffp-out``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import absorption_departures, increment_violations, jacobian_error
from .config import bundled_configs, load_config, sweep_specs
from .exceptions import ConfigurationError, NumericError
from .game import enumerate_pure_nash, verify_exact_potential
from .harness import (
    METRICS_COLUMNS,
    SWEEP_COLUMNS,
    TRACES_COLUMNS,
    convergence_stats,
    metric_rows,
    parameter_sweep,
    run_experiment,
    stream,
    timing_report,
    trace_rows,
    write_csv_atomic,
)

OUT_ENV = "EKFFP_OUT"
DEFAULT_OUT = "ekffp-out"
DEFAULT_SWEEP_GRID = [0.005, 0.01, 0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("ekffp")


def output_dir(flag) -> Path:
    out = Path(flag or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def print_table(rows, header):
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    for r in [header, *rows]:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())


def _fmt(x) -> str:
    return f"{x:.4g}" if isinstance(x, float) else str(x)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if cfg.run is None:
        raise ConfigurationError(f"{cfg.source} has no [scenario] to run")
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    jobs = args.jobs or cfg.jobs
    traces = run_experiment(cfg.run, jobs=jobs)
    failed = [t for t in traces if t.failed]
    label = cfg.run.label
    out = output_dir(args.out)
    write_csv_atomic(out / "traces.csv", TRACES_COLUMNS, trace_rows(traces))
    if len(failed) == len(traces):
        for t in failed:
            print(f"replication {t.replication} failed: {t.failure}", file=sys.stderr)
        return EXIT_FAILED
    stats = convergence_stats(traces)
    timing = timing_report(traces)
    write_csv_atomic(out / "metrics.csv", METRICS_COLUMNS, metric_rows(stats, cfg.scenario_kind, label, timing))

    n = stats.n_replications + stats.n_failed
    rows = [
        ("converged", f"{round(stats.percent_converged * stats.n_replications / 100)}/{n}"),
        ("mean iterations to consensus", _fmt(stats.mean_iterations_to_consensus)),
        ("final score", _fmt(stats.final_score)),
    ]
    if stats.percent_success is not None:
        rows.append(("success", f"{round(stats.percent_success * stats.n_replications / 100)}/{n}"))
    rows.append(("mean agent seconds", _fmt(float(np.mean(timing)))))
    rows.append(("failed replications", str(stats.n_failed)))
    print(f"{cfg.scenario_kind} / {label}")
    print_table(rows, ("metric", "value"))
    print(f"wrote {out / 'traces.csv'} and {out / 'metrics.csv'}")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    sweep = cfg.sweep
    xi = sweep.get("xi", DEFAULT_SWEEP_GRID)
    zeta = sweep.get("zeta", DEFAULT_SWEEP_GRID + ["1/t"])
    if not xi or not zeta:
        raise ConfigurationError("sweep grid is empty")
    seeds = sweep.get("seeds", [0])
    if args.seed is not None:
        seeds = [args.seed + s for s in range(len(seeds))]
    result = parameter_sweep(xi, zeta, seeds=seeds, specs=sweep_specs(sweep), tau=float(sweep.get("tau", 1.0)))
    out = output_dir(args.out)
    write_csv_atomic(out / "sweep.csv", SWEEP_COLUMNS, result.rows())
    bx, bz = result.argmin
    print(f"argmin: xi={bx} zeta={bz} mse={float(result.mse.min()):.6g}")
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


def _label(game, joint):
    if game.action_labels is None:
        return "(" + ",".join(str(a) for a in joint) + ")"
    return "(" + ",".join(game.action_labels[i][a] for i, a in enumerate(joint)) + ")"


def cmd_nash(args) -> int:
    cfg = load_config(args.config)
    if cfg.run is None:
        raise ConfigurationError(f"{cfg.source} has no [scenario]")
    seed = cfg.run.seed if args.seed is None else args.seed
    inst = cfg.run.scenario.instance(stream(seed, 0, 0))
    for k, game in enumerate(inst.stages):
        if game.joint_space_size > cfg.nash_cap:
            raise ConfigurationError(
                f"{game.name}: joint action space {game.joint_space_size} exceeds the cap {cfg.nash_cap}"
            )
        nash = enumerate_pure_nash(game, cap=cfg.nash_cap)
        shown = ", ".join(_label(game, s) for s in nash) if nash else "none"
        line = f"{game.name}: {shown}"
        if game.potential is not None:
            ok = verify_exact_potential(game, game.potential, cap=cfg.nash_cap)
            line += f"  [potential verified: {str(ok).lower()}]"
        print(line)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = 0 if args.seed is None else args.seed
    rows = []
    violations = increment_violations(rng=seed)
    for k, v in violations.items():
        rows.append((f"observed-action increment is largest ({k} actions)", str(v), "pass" if v == 0 else "FAIL"))
    err = jacobian_error(rng=seed)
    rows.append(("softmax Jacobian vs central differences", f"{err:.2e}", "pass" if err <= 1e-6 else "FAIL"))
    if args.config:
        cfg = load_config(args.config)
        if cfg.run is not None:
            inst = cfg.run.scenario.instance(stream(cfg.run.seed, 0, 0))
            game = inst.stages[0]
            if game.joint_space_size <= cfg.nash_cap and game.potential is not None:
                ok = verify_exact_potential(game, game.potential, cap=cfg.nash_cap)
                rows.append((f"{game.name} exact potential", str(ok).lower(), "pass" if ok else "FAIL"))
                strict = [s for s in enumerate_pure_nash(game, cap=cfg.nash_cap)]
                if strict:
                    d = absorption_departures(game, strict[0], seed=seed)
                    rows.append((f"{game.name} absorption at {_label(game, strict[0])}", str(d), "pass" if d == 0 else "FAIL"))
    print_table(rows, ("check", "value", "result"))
    return EXIT_OK if all(r[2] == "pass" for r in rows) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ekffp", description="EKF fictitious play experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    bundled = ", ".join(bundled_configs())

    def common(p, config_required=True):
        p.add_argument(
            "--config", required=config_required,
            help=f"TOML config path or bundled name ({bundled})",
        )
        p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--jobs", type=_positive_int, help="parallel worker processes")

    common(sub.add_parser("run", help="run replications and write traces.csv and metrics.csv"))
    common(sub.add_parser("sweep", help="xi/zeta tracking sweep, writes sweep.csv"))
    common(sub.add_parser("nash", help="print pure Nash equilibria and the potential check"))
    common(sub.add_parser("verify", help="run filter self-checks and the scenario's game checks"), config_required=False)
    return parser


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "nash": cmd_nash, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
