"""Command-line surface: simulate, estimate, bounds, figure, counterexample.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 when the fraction
of cap-exhausted consensus trials exceeds the configured threshold. Data
goes to stdout or the requested output file; logs go to stderr only.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from .bounds import BoundName, evaluate_bound
from .dynamics import counterexample_config, run_trajectory
from .graph import build_profile, is_connected
from .model import Configuration, ScalarMode, update_step
from .montecarlo import EventKind, McRequest, estimate_consensus, estimate_event
from .sweep import SweepSpec, Row, emit_csv, emit_jsonl, run_figure_sweep, _write_atomically

logger = logging.getLogger("hkbounds")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_CAP = 4

_FIGURE_DEFAULTS = {
    "d": 1,
    "trials": 100_000,
    "master_seed": 0,
    "cap": None,
    "tol": 1e-12,
    "format": "csv",
    "workers": 1,
    "plot": True,
    "plot_dir": None,
    "cap_frac": 0.0,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.quiet)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def _configure_logging(quiet: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.handlers = [handler]
    logger.setLevel(logging.WARNING if quiet else logging.INFO)


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hkbounds",
        description="Bounded-confidence opinion dynamics: simulation, "
        "consensus-probability bounds, Monte Carlo cross-validation.",
    )
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress progress logs")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one trajectory")
    sim.add_argument("--input", help="JSON configuration file to run")
    sim.add_argument("--n", type=int, help="agent count (sampled initial)")
    sim.add_argument("--d", type=int, default=1, help="opinion dimension (default 1)")
    sim.add_argument("--eps", type=float, help="confidence bound")
    sim.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sim.add_argument("--trial", type=int, default=0, help="trial index to sample (default 0)")
    sim.add_argument("--cap", type=int, help="step cap (default max(1000, n^3))")
    sim.add_argument("--tol", type=float, default=1e-12, help="fixed-point tolerance")
    sim.add_argument("--mode", choices=["float", "rational"], default="float")
    sim.add_argument("--record", action="store_true", help="retain visited states")
    sim.add_argument("--dump", help="write the state sequence as JSON lines to this path")
    sim.set_defaults(func=_cmd_simulate)

    est = sub.add_parser("estimate", help="Monte Carlo estimate of one event probability")
    est.add_argument("--event", required=True, help=_choices_help(EventKind))
    est.add_argument("--n", type=int, required=True)
    est.add_argument("--d", type=int, default=1)
    est.add_argument("--eps", type=float, required=True)
    est.add_argument("--trials", type=int, default=100_000)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--cap", type=int, help="step cap for consensus trials")
    est.add_argument("--tol", type=float, default=1e-12)
    est.add_argument("--workers", type=int, default=1)
    est.add_argument("--cap-frac", type=float, default=0.0,
                     help="max tolerated fraction of cap-exhausted trials (default 0)")
    est.add_argument("--format", choices=["json", "csv"], default="json")
    est.add_argument("--out", help="output path (default stdout)")
    est.set_defaults(func=_cmd_estimate)

    bnd = sub.add_parser("bounds", help="closed-form bound table")
    bnd.add_argument("--bound", required=True, help=_choices_help(BoundName) + " (comma list)")
    bnd.add_argument("--n", required=True, help="agent count or comma list")
    bnd.add_argument("--d", type=int, default=1)
    bnd.add_argument("--eps", type=float, help="single epsilon")
    bnd.add_argument("--eps-grid", help='grid "start:stop:step" or comma list')
    bnd.add_argument("--out", help="output path (default stdout)")
    bnd.set_defaults(func=_cmd_bounds)

    fig = sub.add_parser("figure", help="sweep reproducing the bound-vs-simulation panels")
    fig.add_argument("--config", help="JSON file with sweep settings; flags override")
    fig.add_argument("--n", help="agent counts, comma list")
    fig.add_argument("--d", type=int)
    fig.add_argument("--eps-grid", help='grid "start:stop:step" or comma list')
    fig.add_argument("--trials", type=int)
    fig.add_argument("--seed", type=int)
    fig.add_argument("--event", help="events to estimate, comma list")
    fig.add_argument("--bound", help="bounds to evaluate, comma list")
    fig.add_argument("--cap", type=int)
    fig.add_argument("--tol", type=float)
    fig.add_argument("--workers", type=int)
    fig.add_argument("--cap-frac", type=float)
    fig.add_argument("--out", help="output table path")
    fig.add_argument("--format", choices=["csv", "jsonl"])
    plot = fig.add_mutually_exclusive_group()
    plot.add_argument("--plot", dest="plot", action="store_true", default=None)
    plot.add_argument("--no-plot", dest="plot", action="store_false", default=None)
    fig.add_argument("--plot-dir", help="directory for rendered panels (default: beside --out)")
    fig.set_defaults(func=_cmd_figure)

    cex = sub.add_parser("counterexample", help="emit and verify a connectivity-breaking configuration")
    cex.add_argument("--n", type=int, required=True, help="agent count, n >= 5")
    cex.add_argument("--out", help="output path (default stdout)")
    cex.set_defaults(func=_cmd_counterexample)

    return parser


def _choices_help(enum_cls) -> str:
    return "one of: " + ", ".join(e.value for e in enum_cls)


def _parse_enum(enum_cls, text: str):
    try:
        return enum_cls(text)
    except ValueError:
        valid = ", ".join(e.value for e in enum_cls)
        raise ValueError(f"unknown {enum_cls.__name__.lower()} {text!r}; valid: {valid}") from None


def _parse_enum_list(enum_cls, text: str) -> tuple:
    return tuple(_parse_enum(enum_cls, part.strip()) for part in text.split(",") if part.strip())


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from None


def _parse_eps_grid(text: str) -> tuple[float, ...]:
    """Either "start:stop:step" (inclusive endpoints up to rounding) or a
    comma-separated list of values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f'grid must be "start:stop:step", got {text!r}')
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"bad grid range {text!r}")
        count = int(round((stop - start) / step)) + 1
        values = tuple(round(start + i * step, 12) for i in range(count))
        return tuple(v for v in values if v <= stop + 1e-12)
    return tuple(float(p) for p in text.split(",") if p.strip())


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(args) -> int:
    if args.input:
        config = Configuration.loads(Path(args.input).read_text())
        if args.mode == "rational":
            config = config.as_exact()
        elif config.scalar_mode is ScalarMode.EXACT_RATIONAL and args.mode == "float":
            config = config.as_float()
    else:
        if args.n is None or args.eps is None:
            raise ValueError("simulate needs either --input or both --n and --eps")
        from .montecarlo import sample_initial

        config = sample_initial(args.n, args.d, args.trial, args.seed, args.eps)
        if args.mode == "rational":
            config = config.as_exact()
    record = args.record or args.dump is not None
    result = run_trajectory(config, cap=args.cap, tol=args.tol, record=record)
    if args.dump:
        lines = [state.dumps() for state in result.history or ()]
        _write_atomically(args.dump, "\n".join(lines) + "\n")
    payload = {
        "outcome": result.outcome.value,
        "steps": result.steps,
        "cluster_count": result.cluster_count,
        "history_len": result.history_len,
        "final": result.final.as_json(),
    }
    print(json.dumps(payload))
    return EXIT_OK


def _cmd_estimate(args) -> int:
    event = _parse_enum(EventKind, args.event)
    req = McRequest(
        n=args.n, d=args.d, eps=args.eps, trials=args.trials,
        master_seed=args.seed, event=event, cap=args.cap, tol=args.tol,
    )
    if event is EventKind.CONSENSUS:
        est = estimate_consensus(req, workers=args.workers)
    else:
        est = estimate_event(req, workers=args.workers)
    payload = {
        "event": event.value,
        "n": args.n,
        "d": args.d,
        "eps": args.eps,
        "trials": est.trials,
        "successes": est.successes,
        "p_hat": est.p_hat,
        "stderr": est.stderr,
        "ci95": [est.ci95[0], est.ci95[1]],
        "cap_reached": est.cap_reached_count,
    }
    if args.format == "json":
        text = json.dumps(payload) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["event", "n", "d", "eps", "trials", "successes",
                         "p_hat", "stderr", "ci_lo", "ci_hi", "cap_reached", "seed"])
        writer.writerow([event.value, args.n, args.d, format(args.eps, ".17g"),
                         est.trials, est.successes, format(est.p_hat, ".17g"),
                         format(est.stderr, ".17g"), format(est.ci95[0], ".17g"),
                         format(est.ci95[1], ".17g"), est.cap_reached_count, args.seed])
        text = buf.getvalue()
    _emit(text, args.out)
    if est.cap_reached_count / est.trials > args.cap_frac:
        logger.warning("cap-exhausted fraction %.4g exceeds threshold %.4g",
                       est.cap_reached_count / est.trials, args.cap_frac)
        return EXIT_CAP
    return EXIT_OK


def _cmd_bounds(args) -> int:
    names = _parse_enum_list(BoundName, args.bound)
    if not names:
        raise ValueError("no bounds requested")
    n_values = _parse_int_list(args.n)
    if args.eps is not None and args.eps_grid is not None:
        raise ValueError("give either --eps or --eps-grid, not both")
    if args.eps is not None:
        grid = (args.eps,)
    elif args.eps_grid is not None:
        grid = _parse_eps_grid(args.eps_grid)
    else:
        raise ValueError("bounds needs --eps or --eps-grid")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "n", "d", "eps", "branch", "value"])
    for n in n_values:
        for eps in grid:
            for name in names:
                bv = evaluate_bound(name, n, args.d, eps)
                writer.writerow([bv.name.value, bv.n, bv.d, format(bv.eps, ".17g"),
                                 bv.branch or "", format(bv.value, ".17g")])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _cmd_figure(args) -> int:
    settings = dict(_FIGURE_DEFAULTS)
    if args.config:
        loaded = json.loads(Path(args.config).read_text())
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object")
        settings.update(loaded)
    overrides = {
        "n_list": _parse_int_list(args.n) if args.n else None,
        "d": args.d,
        "eps_grid": _parse_eps_grid(args.eps_grid) if args.eps_grid else None,
        "trials": args.trials,
        "master_seed": args.seed,
        "events": _parse_enum_list(EventKind, args.event) if args.event else None,
        "bounds": _parse_enum_list(BoundName, args.bound) if args.bound else None,
        "cap": args.cap,
        "tol": args.tol,
        "workers": args.workers,
        "cap_frac": args.cap_frac,
        "output_path": args.out,
        "format": args.format,
        "plot": args.plot,
        "plot_dir": args.plot_dir,
    }
    settings.update({k: v for k, v in overrides.items() if v is not None})
    for key in ("n_list", "eps_grid", "output_path"):
        if not settings.get(key):
            raise ValueError(f"figure needs {key} (from --config or flags)")
    if isinstance(settings["eps_grid"], str):
        settings["eps_grid"] = _parse_eps_grid(settings["eps_grid"])
    if isinstance(settings["n_list"], str):
        settings["n_list"] = _parse_int_list(settings["n_list"])
    events = tuple(
        e if isinstance(e, EventKind) else _parse_enum(EventKind, e)
        for e in settings.get("events") or ()
    )
    bound_names = tuple(
        b if isinstance(b, BoundName) else _parse_enum(BoundName, b)
        for b in settings.get("bounds") or ()
    )
    spec = SweepSpec(
        n_list=tuple(settings["n_list"]),
        d=int(settings["d"]),
        eps_grid=tuple(float(e) for e in settings["eps_grid"]),
        trials=int(settings["trials"]),
        master_seed=int(settings["master_seed"]),
        events=events,
        bounds=bound_names,
        cap=settings["cap"],
        tol=float(settings["tol"]),
        output_path=str(settings["output_path"]),
        format=settings["format"],
    )
    rows = run_figure_sweep(spec, workers=int(settings["workers"]))
    if spec.format == "jsonl":
        emit_jsonl(rows, spec.output_path)
    else:
        emit_csv(rows, spec.output_path)
    logger.info("wrote %s (%d rows)", spec.output_path, len(rows))
    if settings["plot"]:
        from .plotting import render_sweep_figures

        base = Path(spec.output_path)
        if settings["plot_dir"]:
            base = Path(settings["plot_dir"]) / base.name
            base.parent.mkdir(parents=True, exist_ok=True)
        for path in render_sweep_figures(rows, base):
            logger.info("wrote %s", path)
    worst = _worst_cap_fraction(rows)
    if worst > float(settings["cap_frac"]):
        logger.warning("cap-exhausted fraction %.4g exceeds threshold %.4g",
                       worst, settings["cap_frac"])
        return EXIT_CAP
    return EXIT_OK


def _worst_cap_fraction(rows: list[Row]) -> float:
    fractions = [r.cap_reached / r.trials for r in rows if r.kind == "mc" and r.trials]
    return max(fractions, default=0.0)


def _cmd_counterexample(args) -> int:
    config = counterexample_config(args.n)
    stepped = update_step(config)
    payload = {
        "n": args.n,
        "config": config.as_json(),
        "after_one_step": stepped.as_json(),
        "connected_t0": is_connected(build_profile(config)),
        "disconnected_t1": not is_connected(build_profile(stepped)),
    }
    text = json.dumps(payload) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def _emit(text: str, out_path) -> None:
    if out_path:
        _write_atomically(out_path, text)
    else:
        sys.stdout.write(text)
