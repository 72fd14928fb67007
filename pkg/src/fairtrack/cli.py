"""Command line entry point: ``python -m fairtrack <command> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .data_io import (
    DataError,
    ReportWriter,
    RunConfig,
    find_compas,
    load_config,
    load_events,
    read_reports,
    write_events,
    write_window_csv,
)
from .datagen import ScenarioSpec, gen_dynamic, gen_static
from .evaluation import max_fpr_gap, moving_window_rates, realized_rates, window_series_rows
from .pipeline import FairTracker

log = logging.getLogger("fairtrack")


def _metrics_table(metrics) -> str:
    lines = [f"{'group':>5} {'n':>6} {'pos':>6} {'acc':>6} {'fnr':>6} {'fpr':>6}"]
    fmt = lambda v: "   n/a" if v is None else f"{v:6.3f}"  # noqa: E731
    for z, m in sorted(metrics.items()):
        lines.append(f"{z:>5} {m.total:>6} {m.positives:>6} {fmt(m.acc)} {fmt(m.fnr)} {fmt(m.fpr)}")
    return "\n".join(lines)


def _tracker_overrides(args) -> dict:
    out = {}
    for name in ("seed", "epsilon", "alpha", "m_theta", "m_x", "workers"):
        val = getattr(args, name, None)
        if val is not None:
            out[name] = val
    return out


def build_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    tracker = dataclasses.replace(cfg.tracker, **_tracker_overrides(args))
    changes = {"tracker": tracker}
    if getattr(args, "input", None):
        changes["input"] = args.input
    if getattr(args, "schema", None):
        changes["schema"] = args.schema
    if getattr(args, "out", None):
        changes["out_dir"] = args.out
    if getattr(args, "trim_compas", False):
        changes["trim_compas"] = True
    if getattr(args, "include_race", False):
        changes["include_race"] = True
    if getattr(args, "priors_scale", None) is not None:
        changes["priors_scale"] = args.priors_scale
    if getattr(args, "eval_start", None) is not None:
        changes["eval_start"] = args.eval_start
    if getattr(args, "granularity", None):
        changes["granularity"] = args.granularity
    return dataclasses.replace(cfg, **changes)


# --------------------------------------------------------------------------- commands


def cmd_simulate(args, dynamic: bool) -> int:
    kw = dict(n_events=args.n_events, seed=args.seed if args.seed is not None else 0,
              group_balance=args.group_balance)
    events = gen_dynamic(ScenarioSpec.dynamic(**kw)) if dynamic else gen_static(ScenarioSpec(**kw))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "events.csv"
    write_events(path, events)
    print(f"wrote {len(events)} events to {path}")
    return 0


def _load_for_run(cfg: RunConfig):
    if cfg.input is None:
        raise DataError("no input file given")
    if cfg.schema == "compas":
        events = load_events(cfg.input, "compas", trim=cfg.trim_compas,
                             include_race=cfg.include_race, priors_scale=cfg.priors_scale)
    else:
        events = load_events(cfg.input, "events")
    if not events:
        raise DataError(f"{cfg.input}: no events")
    return events


def summarize(cfg: RunConfig, reports, labels) -> dict:
    start = cfg.eval_start if cfg.eval_start is not None else 0
    metrics = realized_rates(reports, labels, start)
    deltas = np.array([r.delta for r in reports if r.delta is not None])
    return {
        "events": len(reports),
        "eval_start": start,
        "realized": {str(z): m.as_dict() for z, m in metrics.items()},
        "positive_predictions": int(sum(m.positives for m in metrics.values())),
        "delta": {
            "mean": float(deltas.mean()) if deltas.size else None,
            "max": float(deltas.max()) if deltas.size else None,
            "frac_above_epsilon": float((deltas >= cfg.tracker.epsilon).mean()) if deltas.size else None,
        },
        "fallbacks": int(sum(r.fallback_used for r in reports)),
        "filter_runs": int(sum(not r.early_exit and not r.warmup for r in reports)),
        "config": cfg.to_dict(),
    }


def cmd_track(args) -> int:
    cfg = build_run_config(args)
    events = _load_for_run(cfg)
    tracker_cfg = dataclasses.replace(cfg.tracker, n_dim=events[0].x.size)
    cfg = dataclasses.replace(cfg, tracker=tracker_cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tracker = FairTracker(tracker_cfg)
    reports = []
    with ReportWriter(out / "reports.jsonl", steps=cfg.granularity == "step") as writer:
        for i, ev in enumerate(events):
            if ev.x.size != tracker_cfg.n_dim:
                raise DataError(f"event {i}: dimension {ev.x.size} != {tracker_cfg.n_dim}")
            rep = tracker.process_event(ev)
            reports.append(rep)
            writer.write_step(rep, ev.y)
        summary = summarize(cfg, reports, [e.y for e in events])
        writer.write_summary(summary)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    start = summary["eval_start"]
    print(f"realized rates over events [{start}, {len(events)}):")
    print(_metrics_table(realized_rates(reports, [e.y for e in events], start)))
    print(f"fallbacks: {summary['fallbacks']}  filter runs: {summary['filter_runs']}")
    return 0


def cmd_eval(args) -> int:
    reports, labels, _ = read_reports(args.reports)
    if not reports:
        raise DataError(f"{args.reports}: no step records")
    if any(v is None for v in labels):
        raise DataError(f"{args.reports}: step records carry no labels")
    start = args.start or 0
    stop = args.stop
    print(_metrics_table(realized_rates(reports, labels, start, stop)))
    if args.window:
        series = moving_window_rates(reports, labels, args.window, valid_only=args.valid_only)
        out = Path(args.out or ".")
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"window_{args.window}.csv"
        write_window_csv(path, window_series_rows(series))
        print(f"wrote {len(series)} windows to {path}; max FPR gap {max_fpr_gap(series):.3f}")
    return 0


def _print_comparison(rows) -> None:
    print(f"{'setting':<14} {'metric':<6} {'group':>5} {'ours':>7} {'target':>7} {'diff':>7}")
    for setting, metric, z, ours, target in rows:
        print(f"{setting:<14} {metric:<6} {z:>5} {ours:7.3f} {target:7.2f} {ours - target:+7.3f}")


def cmd_replicate(args) -> int:
    seeds = tuple(args.seeds) if args.seeds else (args.seed if args.seed is not None else 0,)
    overrides = {k: v for k, v in _tracker_overrides(args).items() if k not in ("seed", "epsilon")}
    if args.name in ("static-3.1", "dynamic-3.2"):
        kind = "static" if args.name == "static-3.1" else "dynamic"
        print(f"{args.name}: realized rates over the final 9000 events, seeds {list(seeds)}")
        _print_comparison(experiments.comparison_rows(kind, seeds, **overrides))
        return 0
    if args.name in ("compas", "compas-trim"):
        path = Path(args.input) if args.input else find_compas()
        if path is None:
            raise DataError("COMPAS CSV not found; run scripts/fetch_compas.py or pass --input")
        trim = args.name == "compas-trim" or args.trim_compas
        for include_race in (False, True):
            for eps in (experiments.UNCONSTRAINED_EPSILON, 0.05):
                res = experiments.run_compas(path, trim, include_race, eps, seed=seeds[0],
                                             **overrides)
                metrics = res.realized(len(res.events) // 2)
                label = f"{'cons.' if eps < 1 else 'uncons.'} {'w/' if include_race else 'w/o'} race"
                print(f"{label}: {len(res.events)} events, second half")
                print(_metrics_table(metrics))
        return 0
    raise DataError(f"unknown experiment {args.name!r}")


# --------------------------------------------------------------------------- parser


def _common(p, tracker_flags: bool = True) -> None:
    p.add_argument("--config", help="JSON config file with RunConfig keys")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    if tracker_flags:
        p.add_argument("--epsilon", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--m-theta", dest="m_theta", type=int)
        p.add_argument("--m-x", dest="m_x", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--trim-compas", action="store_true")
        p.add_argument("--include-race", action="store_true")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairtrack", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("simulate-static", "simulate-dynamic"):
        p = sub.add_parser(name, help="write a synthetic event CSV")
        _common(p, tracker_flags=False)
        p.add_argument("--n-events", type=int, default=10000)
        p.add_argument("--group-balance", type=float, default=0.5)

    p = sub.add_parser("track", help="run the tracker over an event or COMPAS CSV")
    _common(p)
    p.add_argument("input", nargs="?")
    p.add_argument("--schema", choices=("events", "compas"))
    p.add_argument("--priors-scale", type=float)
    p.add_argument("--eval-start", type=int)
    p.add_argument("--granularity", choices=("step", "summary"))

    p = sub.add_parser("eval", help="realized and moving-window metrics from a report stream")
    p.add_argument("reports")
    p.add_argument("--window", type=int)
    p.add_argument("--start", type=int)
    p.add_argument("--stop", type=int)
    p.add_argument("--valid-only", action="store_true",
                   help="only windows that fit entirely inside the stream")
    p.add_argument("--out")

    p = sub.add_parser("replicate", help="run a named published experiment")
    _common(p)
    p.add_argument("name", choices=("static-3.1", "dynamic-3.2", "compas", "compas-trim"))
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--input", help="COMPAS CSV (defaults to the fetch cache)")
    return parser


def cli_main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate-static":
            return cmd_simulate(args, dynamic=False)
        if args.command == "simulate-dynamic":
            return cmd_simulate(args, dynamic=True)
        if args.command == "track":
            return cmd_track(args)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "replicate":
            return cmd_replicate(args)
    except (DataError, OSError, ValueError, FloatingPointError) as exc:
        print(f"fairtrack: error: {exc}", file=sys.stderr)
        return 1
    return 2


def main() -> None:
    sys.exit(cli_main())
