"""Experiment harness: train, evaluate, visualize, and serve policies.

Every command writes machine-readable JSON / JSON-lines artifacts into its
output directory; figure-producing commands render PNGs next to them. All
report numbers are computed from the persisted per-episode lines, never from
transient in-memory state, so reports can be regenerated offline.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .agent.td3 import PDMORLAgent
from .agent.training import resume as resume_training, train as run_training
from .config import ConfigError, dump_parameters, load_run_config
from .metrics import aggregate_summaries, episode_summary
from .plans import (ONE_HOT_PREFERENCES, DenseEvalPlan, SweepPlan,
                    load_dense_plan, load_sweep_plan)
from .plots import (QUALITATIVE_SERIES, per_meter_series, qualitative_figure,
                    sweep_figure, training_figure)
from .rollout import greedy_policy, q_probe, run_episode
from .stats import DegenerateSamplesError, welch_t_test
from .trajlog import EpisodeLog
from .world.env import DrivingWorld, WorldConfig

#: Style metrics tested across sweep endpoints.
SWEEP_METRICS = ("mean_velocity", "mean_accel", "mean_jerk")


def _write_json(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _append_jsonl(fh, payload: dict[str, Any]) -> None:
    fh.write(json.dumps(payload, sort_keys=True) + "\n")
    fh.flush()


def _read_jsonl(path: Path) -> list[dict[str, Any]]:
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if raw:
                rows.append(json.loads(raw))
    return rows


def _flatten_row(row: dict[str, Any]) -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in row.items():
        if isinstance(value, dict):
            for sub, v in value.items():
                flat[f"{key}.{sub}"] = v
        elif isinstance(value, list):
            for i, v in enumerate(value):
                flat[f"{key}.{i}"] = v
        else:
            flat[key] = value
    return flat


def _write_csv(path: Path, rows: Iterable[dict[str, Any]]) -> None:
    flats = [_flatten_row(r) for r in rows]
    if not flats:
        return
    names: list[str] = []
    for flat in flats:
        for key in flat:
            if key not in names:
                names.append(key)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=names)
        writer.writeheader()
        writer.writerows(flats)


def _format_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


# -- train ---------------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> int:
    try:
        cfg = load_run_config(args.config, seed_override=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out) if args.out else Path("runs") / f"train_seed{cfg.seed}"
    if args.resume:
        final = resume_training(cfg, out_dir)
    else:
        final = run_training(cfg, out_dir)
    log_path = out_dir / "training_log.jsonl"
    if log_path.exists():
        training_figure(log_path, out_dir / "fig_training.png")
    print(f"final checkpoint: {final}")
    return 0


# -- sweep ---------------------------------------------------------------------


def _sweep_report(rows: list[dict[str, Any]], plan: SweepPlan) -> dict[str, Any]:
    cells: dict[str, dict[str, Any]] = {}
    tests: dict[str, dict[str, Any]] = {}
    for obj in plan.objectives:
        obj_rows = [r for r in rows if r["extra"]["objective"] == obj]
        cells[obj] = {}
        for level in plan.levels:
            key = format(float(level), "g")
            level_rows = [r for r in obj_rows if r["extra"]["level"] == level]
            cells[obj][key] = {}
            for metric in SWEEP_METRICS:
                values = np.array([float(r[metric]) for r in level_rows])
                cells[obj][key][metric] = {
                    "mean": float(values.mean()) if values.size else None,
                    "std": float(values.std(ddof=0)) if values.size else None,
                    "n": int(values.size),
                }
        low = [r for r in obj_rows if r["extra"]["level"] == min(plan.levels)]
        high = [r for r in obj_rows if r["extra"]["level"] == max(plan.levels)]
        tests[obj] = {}
        for metric in SWEEP_METRICS:
            xs = [float(r[metric]) for r in high]
            ys = [float(r[metric]) for r in low]
            entry: dict[str, Any] = {
                "level_low": float(min(plan.levels)),
                "level_high": float(max(plan.levels)),
                "mean_low": float(np.mean(ys)) if ys else None,
                "mean_high": float(np.mean(xs)) if xs else None,
            }
            try:
                res = welch_t_test(xs, ys)
                entry.update(t=res.t, dof=res.dof, p=res.p, stars=res.star_label())
            except (DegenerateSamplesError, ValueError) as exc:
                entry.update(t=None, dof=None, p=None, stars="n/a",
                             note=str(exc))
            tests[obj][metric] = entry
    return {
        "plan": plan.as_dict(),
        "aggregate": aggregate_summaries(rows),
        "cells": cells,
        "tests": tests,
    }


def _sweep_report_text(report: dict[str, Any]) -> str:
    headers = ["objective", "metric", "w=low mean", "w=high mean", "t", "p", "sig"]
    rows = []
    for obj, metrics in report["tests"].items():
        for metric, entry in metrics.items():
            rows.append([
                obj, metric,
                "-" if entry["mean_low"] is None else f"{entry['mean_low']:.4f}",
                "-" if entry["mean_high"] is None else f"{entry['mean_high']:.4f}",
                "-" if entry["t"] is None else f"{entry['t']:+.3f}",
                "-" if entry["p"] is None else f"{entry['p']:.2e}",
                entry["stars"],
            ])
    table = _format_table(headers, rows)
    agg = report["aggregate"]
    tail = (f"\nepisodes: {agg['episodes']}"
            f"\nterminations: {json.dumps(agg['terminations'])}\n")
    return "high-vs-low weight endpoint tests (Welch)\n\n" + table + tail


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        plan = load_sweep_plan(args.plan)
        if args.episodes_per_level:
            plan = SweepPlan.from_dict({**plan.as_dict(),
                                        "episodes_per_level": args.episodes_per_level})
        if args.scenario:
            plan = SweepPlan.from_dict({**plan.as_dict(), "scenario": args.scenario})
    except (ValueError, OSError) as exc:
        print(f"plan error: {exc}", file=sys.stderr)
        return 2
    agent = PDMORLAgent.load(args.checkpoint)
    out_dir = Path(args.out) if args.out else Path("runs") / "sweep"
    out_dir.mkdir(parents=True, exist_ok=True)
    env = DrivingWorld(WorldConfig(scenario=plan.scenario))
    policy = greedy_policy(agent)
    episodes_path = out_dir / "episodes.jsonl"
    with episodes_path.open("w", encoding="utf-8") as fh:
        for i, ep in enumerate(plan.episodes()):
            meta = {"objective": ep.objective, "level": ep.level,
                    "repeat": ep.repeat}
            log = run_episode(env, policy, ep.lam, seed=ep.env_seed, meta=meta)
            if args.save_trajectories:
                name = f"traj_{ep.objective}_w{ep.level:g}_r{ep.repeat:02d}.jsonl"
                traj_path = out_dir / "trajectories" / name
                log.write(traj_path)
                # Summarize the persisted trajectory, not the in-memory one,
                # so the summary line is exactly recomputable from the file
                # written next to it (disk rounds steps to six decimals).
                log = EpisodeLog.read(traj_path)
            _append_jsonl(fh, episode_summary(log))
            if args.progress and (i + 1) % 20 == 0:
                print(f"  {i + 1}/{plan.total_episodes} episodes", file=sys.stderr)
    rows = _read_jsonl(episodes_path)
    report = _sweep_report(rows, plan)
    _write_json(out_dir / "report.json", report)
    (out_dir / "report.txt").write_text(_sweep_report_text(report),
                                        encoding="utf-8")
    _write_csv(out_dir / "episodes.csv", rows)
    sweep_figure(report, out_dir / "fig_sweep.png")
    print(f"sweep report: {out_dir / 'report.json'}")
    return 0


# -- dense eval ------------------------------------------------------------------


def _dense_report(rows: list[dict[str, Any]], plan: DenseEvalPlan) -> dict[str, Any]:
    by_scenario: dict[str, Any] = {}
    for scenario in sorted({r["scenario"] for r in rows}):
        scen_rows = [r for r in rows if r["scenario"] == scenario]
        by_scenario[str(scenario)] = aggregate_summaries(scen_rows)
    by_checkpoint: dict[str, Any] = {}
    names = sorted({r["extra"]["checkpoint"] for r in rows})
    for name in names:
        ckpt_rows = [r for r in rows if r["extra"]["checkpoint"] == name]
        by_checkpoint[name] = aggregate_summaries(ckpt_rows)
    return {
        "plan": plan.as_dict(),
        "aggregate": aggregate_summaries(rows),
        "by_scenario": by_scenario,
        "by_checkpoint": by_checkpoint,
    }


def _dense_report_text(report: dict[str, Any]) -> str:
    headers = ["scenario", "episodes", "DS", "RC", "LIR", "LD", "PS", "PA"]
    rows = []
    for scenario, agg in report["by_scenario"].items():
        def cell(name: str) -> str:
            if name not in agg:
                return "-"
            return f"{agg[name]['mean']:.3f}±{agg[name]['std']:.3f}"
        rows.append([scenario, str(agg["episodes"]), cell("driving_score"),
                     cell("route_completion"), cell("lane_invasion_rate"),
                     cell("lane_deviation"), cell("preference_score"),
                     cell("preference_alignment")])
    agg = report["aggregate"]
    total = [["all", str(agg["episodes"]),
              f"{agg['driving_score']['mean']:.3f}±{agg['driving_score']['std']:.3f}",
              f"{agg['route_completion']['mean']:.3f}±{agg['route_completion']['std']:.3f}",
              f"{agg['lane_invasion_rate']['mean']:.3f}±{agg['lane_invasion_rate']['std']:.3f}",
              f"{agg['lane_deviation']['mean']:.3f}±{agg['lane_deviation']['std']:.3f}",
              f"{agg['preference_score']['mean']:.3f}±{agg['preference_score']['std']:.3f}",
              (f"{agg['preference_alignment']['mean']:.3f}±{agg['preference_alignment']['std']:.3f}"
               if "preference_alignment" in agg else "-")]]
    return ("dense preference-grid evaluation\n\n"
            + _format_table(headers, rows + total))


def cmd_dense_eval(args: argparse.Namespace) -> int:
    try:
        plan = load_dense_plan(args.plan)
        if args.scenarios:
            plan = DenseEvalPlan.from_dict({**plan.as_dict(),
                                            "scenarios": args.scenarios})
    except (ValueError, OSError) as exc:
        print(f"plan error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out) if args.out else Path("runs") / "dense_eval"
    out_dir.mkdir(parents=True, exist_ok=True)
    episodes_path = out_dir / "episodes.jsonl"
    limit = args.limit if args.limit else plan.n_vectors
    with episodes_path.open("w", encoding="utf-8") as fh:
        for ckpt in args.checkpoint:
            agent = PDMORLAgent.load(ckpt)
            policy = greedy_policy(agent)
            probe = q_probe(agent)
            name = Path(ckpt).stem
            for scenario in plan.scenarios:
                env = DrivingWorld(WorldConfig(scenario=scenario))
                for vi in range(min(limit, plan.n_vectors)):
                    lam = plan.grid[vi]
                    seed = plan.env_seed_for(scenario, vi)
                    log = run_episode(env, policy, lam, seed=seed,
                                      collect_q=probe,
                                      meta={"checkpoint": name,
                                            "vector_index": vi})
                    _append_jsonl(fh, episode_summary(log))
                if args.progress:
                    print(f"  {name}: scenario {scenario} done", file=sys.stderr)
    rows = _read_jsonl(episodes_path)
    report = _dense_report(rows, plan)
    _write_json(out_dir / "report.json", report)
    (out_dir / "report.txt").write_text(_dense_report_text(report),
                                        encoding="utf-8")
    _write_csv(out_dir / "episodes.csv", rows)
    print(f"dense-eval report: {out_dir / 'report.json'}")
    return 0


# -- qualitative -----------------------------------------------------------------


def cmd_qualitative(args: argparse.Namespace) -> int:
    agent = PDMORLAgent.load(args.checkpoint)
    out_dir = Path(args.out) if args.out else Path("runs") / "qualitative"
    out_dir.mkdir(parents=True, exist_ok=True)
    env = DrivingWorld(WorldConfig(scenario=args.scenario))
    policy = greedy_policy(agent)
    logs: dict[str, EpisodeLog] = {}
    summaries: dict[str, Any] = {}
    peaks: dict[str, Any] = {}
    series: dict[str, Any] = {}
    for name, lam in ONE_HOT_PREFERENCES.items():
        log = run_episode(env, policy, lam, seed=args.seed,
                          meta={"style": name})
        traj_path = out_dir / f"traj_{name}.jsonl"
        log.write(traj_path)
        # Everything below (summaries, peaks, series, figure) is derived from
        # the persisted trajectory so the bundle is self-consistent on disk.
        log = EpisodeLog.read(traj_path)
        logs[name] = log
        summaries[name] = episode_summary(log)
        peaks[name] = {
            "v_peak": float(np.max(log.v)) if len(log) else 0.0,
            "a_lat_peak": float(np.max(np.abs(log.a_lat))) if len(log) else 0.0,
        }
        series[name] = {}
        for field, _ in QUALITATIVE_SERIES:
            grid, values = per_meter_series(log, field, beta=args.beta)
            series[name][field] = {
                "s": [round(float(v), 2) for v in grid],
                "value": [round(float(v), 6) for v in values],
            }
    route = env.route
    _write_json(out_dir / "series.json",
                {"beta": args.beta, "scenario": args.scenario,
                 "series": series})
    _write_json(out_dir / "summary.json",
                {"scenario": args.scenario, "seed": args.seed,
                 "peaks": peaks, "episodes": summaries})
    qualitative_figure(
        logs, route.center.points, route.left_barrier.points,
        route.right_barrier.points, out_dir / "fig_qualitative.png",
        beta=args.beta)
    print(f"qualitative bundle: {out_dir}")
    return 0


# -- serve / dump-params ------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    from .serve import run_server
    run_server(args.checkpoint, port=args.port, speed=args.speed,
               scenario=args.scenario, host=args.host)
    return 0


def cmd_dump_params(args: argparse.Namespace) -> int:
    try:
        text = dump_parameters(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"parameters written to {args.out}")
    else:
        print(text)
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prefdrive",
        description="preference-conditioned driving policies: train, "
                    "evaluate, and stream")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a seeded training session")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--resume", action="store_true",
                   help="continue from this directory's resume bundle")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="objective-weight sweep on a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--plan", default=None, help="YAML sweep plan")
    p.add_argument("--out", default=None)
    p.add_argument("--episodes-per-level", type=int, default=None)
    p.add_argument("--scenario", type=int, default=None)
    p.add_argument("--save-trajectories", action="store_true")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dense-eval",
                       help="dense preference-grid evaluation")
    p.add_argument("--checkpoint", required=True, nargs="+",
                   help="one or more checkpoints (e.g. per training seed)")
    p.add_argument("--plan", default=None, help="YAML dense-eval plan")
    p.add_argument("--out", default=None)
    p.add_argument("--scenarios", type=int, nargs="+", default=None)
    p.add_argument("--limit", type=int, default=None,
                   help="use only the first N grid vectors per scenario")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_dense_eval)

    p = sub.add_parser("qualitative",
                       help="one-hot style comparison on a fixed course")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--scenario", type=int, default=3)
    p.add_argument("--seed", type=int, default=77)
    p.add_argument("--beta", type=float, default=0.6,
                   help="series smoothing factor")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_qualitative)

    p = sub.add_parser("serve", help="stream a live policy over WebSocket")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--speed", default="REAL", help="REAL or xN")
    p.add_argument("--scenario", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("dump-params",
                       help="print every tunable with its effective value")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_dump_params)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
