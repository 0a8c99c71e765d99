"""Evaluation metrics computed from episode logs.

Everything here consumes `trajlog.EpisodeLog` (or plain arrays), so any
reported number can be recomputed offline from the persisted JSON-lines
trajectory files.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Iterable, Mapping

import numpy as np

from .agent.preferences import augment
from .trajlog import EpisodeLog

#: Terminations that count as a timeout infraction.
TIMEOUT_TERMINATIONS = ("stagnation", "step_limit")

#: A speeding infraction begins when v exceeds limit * tolerance and ends
#: once v drops back to the limit (hysteresis, so one burst counts once).
SPEEDING_TOLERANCE = 1.05


@dataclass(frozen=True)
class PenaltyTable:
    """Multiplicative per-infraction penalties for the driving score."""

    vehicle_collision: float = 0.60
    environment_collision: float = 0.65
    speeding: float = 0.90
    lane_violation: float = 0.90
    timeout: float = 0.70

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"penalty {f.name} must be in (0, 1], got {value}")


@dataclass(frozen=True)
class InfractionCounts:
    vehicle_collision: int = 0
    environment_collision: int = 0
    speeding: int = 0
    lane_violation: int = 0
    timeout: int = 0

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _entry_count(flags: np.ndarray) -> int:
    """Number of False->True transitions (first step counts as an entry)."""
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        return 0
    return int(flags[0]) + int(np.sum(flags[1:] & ~flags[:-1]))


def count_speeding_entries(v: np.ndarray, v_limit: np.ndarray,
                           tolerance: float = SPEEDING_TOLERANCE) -> int:
    """Speeding bursts: enter above limit*tolerance, exit at the limit."""
    v = np.asarray(v, dtype=np.float64)
    v_limit = np.asarray(v_limit, dtype=np.float64)
    count = 0
    violating = False
    for speed, limit in zip(v, v_limit):
        if not violating and speed > limit * tolerance:
            count += 1
            violating = True
        elif violating and speed <= limit:
            violating = False
    return count


def count_infractions(log: EpisodeLog,
                      tolerance: float = SPEEDING_TOLERANCE) -> InfractionCounts:
    lane_flags = np.array(["lane_invasion" in ev for ev in log.events], dtype=bool)
    return InfractionCounts(
        vehicle_collision=sum("collision_vehicle" in ev for ev in log.events),
        environment_collision=sum("collision_environment" in ev for ev in log.events),
        speeding=count_speeding_entries(log.v, log.v_limit, tolerance),
        lane_violation=_entry_count(lane_flags),
        timeout=int(log.termination in TIMEOUT_TERMINATIONS),
    )


def driving_score(route_completion: float, counts: InfractionCounts,
                  penalties: PenaltyTable | None = None) -> float:
    """Percent score: route completion scaled by per-infraction penalties."""
    table = penalties or PenaltyTable()
    score = float(route_completion)
    for f in fields(InfractionCounts):
        score *= getattr(table, f.name) ** getattr(counts, f.name)
    return 100.0 * score


def collision_rate(log: EpisodeLog) -> dict[str, float]:
    """Collisions per step, split by what was hit."""
    n = max(len(log), 1)
    return {
        "vehicle": sum("collision_vehicle" in ev for ev in log.events) / n,
        "environment": sum("collision_environment" in ev for ev in log.events) / n,
    }


def lane_invasion_rate(log: EpisodeLog) -> float:
    """Oncoming-lane entries per step."""
    flags = np.array(["lane_invasion" in ev for ev in log.events], dtype=bool)
    return _entry_count(flags) / max(len(log), 1)


def lane_deviation(log: EpisodeLog) -> float:
    """Mean absolute lateral offset from the nearest lane center (meters)."""
    if len(log) == 0:
        return 0.0
    return float(np.mean(np.abs(log.d_lat)))


def preference_score(log: EpisodeLog, omega: np.ndarray | None = None) -> float:
    """Mean per-step preference-weighted reward (core excluded)."""
    if len(log) == 0:
        return 0.0
    w = np.asarray(log.lam if omega is None else omega, dtype=np.float64)
    if w.shape != (4,):
        raise ValueError(f"omega must have 4 components, got {w.shape}")
    return float(np.mean(log.reward[:, 1:5] @ w))


def scalarized_return(log: EpisodeLog, lam: np.ndarray | None = None) -> float:
    """Episode return under the augmented weighting (core weight fixed at 1)."""
    w = augment(np.asarray(log.lam if lam is None else lam, dtype=np.float64))
    return float(np.sum(log.reward @ w))


def alignment_degrees(omega: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Angle in degrees between omega and the preference part of Q vectors.

    `q` may be (..., 5) (core component dropped) or (..., 4).
    """
    omega = np.asarray(omega, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if q.shape[-1] == 5:
        q = q[..., 1:]
    if q.shape[-1] != 4 or omega.shape[-1] != 4:
        raise ValueError("expected 4 preference components")
    nq = np.linalg.norm(q, axis=-1)
    nw = np.linalg.norm(omega, axis=-1)
    denom = nq * nw
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.sum(q * omega, axis=-1) / denom
    cos = np.where(denom > 0.0, cos, np.nan)
    return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))


def preference_alignment(log: EpisodeLog) -> float:
    """Mean alignment angle (degrees) between lambda and logged Q vectors."""
    if log.q is None:
        raise ValueError("episode log has no Q values; "
                         "re-run the rollout with Q logging enabled")
    angles = alignment_degrees(log.lam, log.q)
    valid = angles[np.isfinite(angles)]
    return float(np.mean(valid)) if valid.size else float("nan")


def mean_velocity(log: EpisodeLog) -> float:
    return float(np.mean(log.v)) if len(log) else 0.0


def mean_accel_magnitude(log: EpisodeLog) -> float:
    if len(log) == 0:
        return 0.0
    return float(np.mean(np.hypot(log.a_long, log.a_lat)))


def mean_jerk_magnitude(log: EpisodeLog) -> float:
    if len(log) == 0:
        return 0.0
    return float(np.mean(np.linalg.norm(log.jerk, axis=1)))


def exponential_smooth(values, beta: float = 0.6) -> np.ndarray:
    """First-order smoothing s_t = beta*x_t + (1-beta)*s_{t-1}, s_0 = x_0."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must be in (0, 1]")
    x = np.asarray(values, dtype=np.float64)
    out = np.empty_like(x)
    if x.size == 0:
        return out
    out[0] = x[0]
    for i in range(1, x.shape[0]):
        out[i] = beta * x[i] + (1.0 - beta) * out[i - 1]
    return out


def episode_summary(log: EpisodeLog,
                    penalties: PenaltyTable | None = None) -> dict[str, Any]:
    """Flat per-episode record used by sweep/eval reports (JSON-friendly)."""
    counts = count_infractions(log)
    rates = collision_rate(log)
    summary: dict[str, Any] = {
        "scenario": log.scenario,
        "env_seed": log.env_seed,
        "lambda": [round(float(v), 6) for v in np.asarray(log.lam).ravel()],
        "steps": len(log),
        "termination": log.termination,
        "route_completion": float(log.route_completion),
        "driving_score": driving_score(log.route_completion, counts, penalties),
        "infractions": counts.as_dict(),
        "collision_rate_vehicle": rates["vehicle"],
        "collision_rate_environment": rates["environment"],
        "lane_invasion_rate": lane_invasion_rate(log),
        "lane_deviation": lane_deviation(log),
        "preference_score": preference_score(log),
        "scalarized_return": scalarized_return(log),
        "mean_velocity": mean_velocity(log),
        "mean_accel": mean_accel_magnitude(log),
        "mean_jerk": mean_jerk_magnitude(log),
    }
    if log.q is not None:
        summary["preference_alignment"] = preference_alignment(log)
    if log.meta:
        summary["extra"] = dict(log.meta)
    return summary


_AGGREGATE_FIELDS = (
    "steps", "route_completion", "driving_score",
    "collision_rate_vehicle", "collision_rate_environment",
    "lane_invasion_rate", "lane_deviation", "preference_score",
    "scalarized_return", "mean_velocity", "mean_accel", "mean_jerk",
    "preference_alignment",
)


def aggregate_summaries(summaries: Iterable[Mapping[str, Any]]) -> dict[str, Any]:
    """Mean/std over episode summaries plus termination tallies."""
    rows = list(summaries)
    if not rows:
        raise ValueError("no episode summaries to aggregate")
    out: dict[str, Any] = {"episodes": len(rows)}
    for name in _AGGREGATE_FIELDS:
        values = [float(r[name]) for r in rows
                  if name in r and np.isfinite(float(r[name]))]
        if values:
            arr = np.asarray(values, dtype=np.float64)
            out[name] = {"mean": float(arr.mean()), "std": float(arr.std(ddof=0))}
    terminations: dict[str, int] = {}
    for r in rows:
        terminations[r["termination"]] = terminations.get(r["termination"], 0) + 1
    out["terminations"] = dict(sorted(terminations.items()))
    return out
