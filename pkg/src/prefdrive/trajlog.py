"""Episode trajectory logs with a stable JSON-lines disk format.

One file holds one episode: a `meta` line, one `step` line per control step,
and an `end` line. Every report the package emits is recomputed from these
parsed logs (or from per-episode summary lines derived from them), so a log
on disk is always sufficient to reproduce the numbers printed next to it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

import numpy as np

SCHEMA_VERSION = 1

_STEP_SCALARS = (
    "x", "y", "heading", "v", "a_long", "a_lat", "yaw_rate",
    "throttle", "brake", "steer", "d_lat", "d_center", "v_limit", "s",
)


def _r6(value: float) -> float:
    return round(float(value), 6)


def _r6_list(values) -> list[float]:
    return [_r6(v) for v in np.asarray(values).ravel()]


@dataclass
class EpisodeLog:
    """In-memory episode record; arrays are (T,) or (T, k) float64."""

    lam: np.ndarray
    scenario: int | None
    env_seed: int | None
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    v: np.ndarray
    a_long: np.ndarray
    a_lat: np.ndarray
    yaw_rate: np.ndarray
    throttle: np.ndarray
    brake: np.ndarray
    steer: np.ndarray
    d_lat: np.ndarray
    d_center: np.ndarray
    v_limit: np.ndarray
    s: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    jerk: np.ndarray
    events: list[tuple[str, ...]]
    termination: str
    route_completion: float
    q: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.v.shape[0])

    @property
    def steps(self) -> int:
        return len(self)

    def write(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")

    def to_lines(self) -> Iterator[str]:
        meta = {
            "type": "meta",
            "schema_version": SCHEMA_VERSION,
            "lambda": _r6_list(self.lam),
            "scenario": self.scenario,
            "env_seed": self.env_seed,
        }
        if self.meta:
            meta["extra"] = self.meta
        yield json.dumps(meta)
        for i in range(len(self)):
            row: dict[str, Any] = {"type": "step", "i": i}
            for name in _STEP_SCALARS:
                row[name] = _r6(getattr(self, name)[i])
            row["action"] = _r6_list(self.action[i])
            row["reward"] = _r6_list(self.reward[i])
            row["jerk"] = _r6_list(self.jerk[i])
            row["events"] = list(self.events[i])
            if self.q is not None:
                row["q"] = _r6_list(self.q[i])
            yield json.dumps(row)
        yield json.dumps({
            "type": "end",
            "termination": self.termination,
            "route_completion": _r6(self.route_completion),
            "steps": len(self),
        })

    @classmethod
    def read(cls, path: str | Path) -> "EpisodeLog":
        meta: dict[str, Any] | None = None
        end: dict[str, Any] | None = None
        rows: list[dict[str, Any]] = []
        with Path(path).open("r", encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                record = json.loads(raw)
                kind = record.get("type")
                if kind == "meta":
                    meta = record
                elif kind == "step":
                    rows.append(record)
                elif kind == "end":
                    end = record
                else:
                    raise ValueError(f"unknown record type: {kind!r}")
        if meta is None or end is None:
            raise ValueError(f"{path}: missing meta or end record")
        if meta.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(
                f"{path}: unsupported schema_version {meta.get('schema_version')!r}"
            )
        if end["steps"] != len(rows):
            raise ValueError(f"{path}: end record claims {end['steps']} steps, "
                             f"found {len(rows)}")
        kwargs: dict[str, Any] = {
            name: np.array([row[name] for row in rows], dtype=np.float64)
            for name in _STEP_SCALARS
        }
        return cls(
            lam=np.asarray(meta["lambda"], dtype=np.float64),
            scenario=meta.get("scenario"),
            env_seed=meta.get("env_seed"),
            action=np.array([row["action"] for row in rows], dtype=np.float64).reshape(len(rows), 2),
            reward=np.array([row["reward"] for row in rows], dtype=np.float64).reshape(len(rows), 5),
            jerk=np.array([row["jerk"] for row in rows], dtype=np.float64).reshape(len(rows), 2),
            events=[tuple(row["events"]) for row in rows],
            termination=end["termination"],
            route_completion=float(end["route_completion"]),
            q=(np.array([row["q"] for row in rows], dtype=np.float64)
               if rows and "q" in rows[0] else None),
            meta=meta.get("extra", {}),
            **kwargs,
        )


class EpisodeRecorder:
    """Accumulates per-step rows and assembles an EpisodeLog at the end."""

    def __init__(self, lam, scenario: int | None, env_seed: int | None,
                 meta: dict[str, Any] | None = None) -> None:
        self.lam = np.asarray(lam, dtype=np.float64).copy()
        self.scenario = scenario
        self.env_seed = env_seed
        self.meta = dict(meta or {})
        self._rows: list[dict[str, Any]] = []

    def add(self, **row: Any) -> None:
        self._rows.append(row)

    def finish(self, termination: str, route_completion: float) -> EpisodeLog:
        rows = self._rows
        n = len(rows)
        scalars = {
            name: np.array([row[name] for row in rows], dtype=np.float64)
            for name in _STEP_SCALARS
        }
        has_q = n > 0 and rows[0].get("q") is not None
        return EpisodeLog(
            lam=self.lam,
            scenario=self.scenario,
            env_seed=self.env_seed,
            action=np.array([row["action"] for row in rows], dtype=np.float64).reshape(n, 2),
            reward=np.array([row["reward"] for row in rows], dtype=np.float64).reshape(n, 5),
            jerk=np.array([row["jerk"] for row in rows], dtype=np.float64).reshape(n, 2),
            events=[tuple(row["events"]) for row in rows],
            termination=termination,
            route_completion=float(route_completion),
            q=(np.array([row["q"] for row in rows], dtype=np.float64) if has_q else None),
            meta=self.meta,
            **scalars,
        )
