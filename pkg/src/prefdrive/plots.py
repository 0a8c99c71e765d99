"""Matplotlib figure rendering for reports (headless Agg backend)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import exponential_smooth
from .trajlog import EpisodeLog

#: Sweep panel metrics and their axis labels.
SWEEP_PANELS = (
    ("mean_velocity", "mean velocity (m/s)"),
    ("mean_accel", "mean |accel| (m/s$^2$)"),
    ("mean_jerk", "mean |jerk| (m/s$^3$)"),
)

_OBJECTIVE_COLORS = {
    "agg": "tab:red", "comfort": "tab:blue",
    "speed": "tab:green", "eff": "tab:orange",
}


def sweep_figure(report: Mapping[str, Any], out_path: str | Path) -> Path:
    """Objective-weight sweep: one panel per style metric, one line per
    objective, with the endpoint significance label in the legend."""
    cells = report["cells"]
    tests = report.get("tests", {})
    levels_by_obj = {
        obj: sorted(float(w) for w in cells[obj]) for obj in cells
    }
    fig, axes = plt.subplots(1, len(SWEEP_PANELS), figsize=(4.2 * len(SWEEP_PANELS), 3.6))
    for ax, (metric, label) in zip(np.atleast_1d(axes), SWEEP_PANELS):
        for obj, levels in levels_by_obj.items():
            means = np.array([cells[obj][_level_key(w)][metric]["mean"] for w in levels])
            stds = np.array([cells[obj][_level_key(w)][metric]["std"] for w in levels])
            stars = tests.get(obj, {}).get(metric, {}).get("stars", "")
            color = _OBJECTIVE_COLORS.get(obj)
            name = f"{obj} [{stars}]" if stars else obj
            ax.plot(levels, means, marker="o", color=color, label=name)
            ax.fill_between(levels, means - stds, means + stds, alpha=0.15, color=color)
        ax.set_xlabel("objective weight")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    np.atleast_1d(axes)[0].legend(fontsize=8, title="objective [0 vs 1]",
                                  title_fontsize=8)
    fig.suptitle("Behavior vs. preference weight")
    fig.tight_layout()
    return _save(fig, out_path)


def _level_key(w: float) -> str:
    return format(float(w), "g")


#: Per-meter series shown in the qualitative figure.
QUALITATIVE_SERIES = (
    ("steer", "steer"),
    ("throttle", "throttle"),
    ("v", "velocity (m/s)"),
    ("a_lat", "lateral accel (m/s$^2$)"),
)


def per_meter_series(log: EpisodeLog, field: str, beta: float = 0.6,
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Resample a per-step signal onto a 1-meter arc-length grid and smooth it.

    Arc length is forced monotone (projection can momentarily regress), the
    signal is linearly interpolated at integer meters, then first-order
    smoothed with the given beta.
    """
    s = np.maximum.accumulate(np.asarray(log.s, dtype=np.float64))
    values = np.asarray(getattr(log, field), dtype=np.float64)
    if s.size == 0:
        return np.empty(0), np.empty(0)
    grid = np.arange(np.floor(s[0]), np.floor(s[-1]) + 1.0)
    resampled = np.interp(grid, s, values)
    return grid, exponential_smooth(resampled, beta)


def qualitative_figure(logs: Mapping[str, EpisodeLog],
                       route_center: np.ndarray,
                       route_left: np.ndarray,
                       route_right: np.ndarray,
                       out_path: str | Path,
                       beta: float = 0.6) -> Path:
    """Bird's-eye trajectories next to smoothed per-meter control series."""
    n_series = len(QUALITATIVE_SERIES)
    fig = plt.figure(figsize=(12, 2.1 * n_series))
    gs = fig.add_gridspec(n_series, 2, width_ratios=(1.15, 1.0))
    ax_map = fig.add_subplot(gs[:, 0])
    ax_map.plot(route_center[:, 0], route_center[:, 1], "--", color="0.6",
                lw=0.8, label="lane center")
    for boundary in (route_left, route_right):
        ax_map.plot(boundary[:, 0], boundary[:, 1], "-", color="0.3", lw=1.0)
    for name, log in logs.items():
        ax_map.plot(log.x, log.y, lw=1.4, label=name,
                    color=_OBJECTIVE_COLORS.get(name))
    ax_map.set_aspect("equal")
    ax_map.set_xlabel("x (m)")
    ax_map.set_ylabel("y (m)")
    ax_map.legend(fontsize=8, loc="best")
    ax_map.set_title("bird's-eye trajectories")

    for row, (field, label) in enumerate(QUALITATIVE_SERIES):
        ax = fig.add_subplot(gs[row, 1])
        for name, log in logs.items():
            grid, values = per_meter_series(log, field, beta)
            ax.plot(grid, values, lw=1.1, label=name,
                    color=_OBJECTIVE_COLORS.get(name))
        ax.set_ylabel(label, fontsize=8)
        ax.grid(alpha=0.3)
        if row == n_series - 1:
            ax.set_xlabel("distance along route (m)")
    fig.tight_layout()
    return _save(fig, out_path)


def training_figure(log_path: str | Path, out_path: str | Path) -> Path:
    """Loss and episode-return curves parsed from a training JSONL log."""
    losses: dict[str, list[tuple[int, float]]] = {}
    episodes: list[tuple[int, float]] = []
    evals: list[tuple[int, float]] = []
    with Path(log_path).open("r", encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw:
                continue
            rec = json.loads(raw)
            kind = rec.get("type")
            if kind == "loss":
                for key, value in rec.items():
                    if key in ("type", "step", "update") or not isinstance(value, (int, float)):
                        continue
                    losses.setdefault(key, []).append((rec["step"], float(value)))
            elif kind == "episode":
                episodes.append((rec["step"], float(rec["return_scalar"])))
            elif kind == "eval":
                evals.append((rec["step"], float(rec["return_scalar_mean"])))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.6))
    for key, rows in sorted(losses.items()):
        arr = np.asarray(rows)
        ax1.plot(arr[:, 0], arr[:, 1], lw=0.9, label=key)
    ax1.set_xlabel("environment step")
    ax1.set_ylabel("loss")
    ax1.legend(fontsize=8)
    ax1.grid(alpha=0.3)
    if episodes:
        arr = np.asarray(episodes)
        ax2.plot(arr[:, 0], exponential_smooth(arr[:, 1], 0.1), lw=0.9,
                 label="episode return (smoothed)")
    if evals:
        arr = np.asarray(evals)
        ax2.plot(arr[:, 0], arr[:, 1], "o-", ms=3, label="greedy eval return")
    ax2.set_xlabel("environment step")
    ax2.set_ylabel("scalarized return")
    ax2.legend(fontsize=8)
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, out_path)


def _save(fig, out_path: str | Path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path
