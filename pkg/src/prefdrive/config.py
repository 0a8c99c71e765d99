"""Run configuration: strict YAML loading into typed dataclasses.

Unknown keys and missing required keys are hard errors that name the exact
dotted path, so a typo in a config file fails loudly before any training
compute is spent.
"""

from __future__ import annotations

import dataclasses
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .agent.td3 import AgentConfig
from .rewards import RewardParams
from .world.env import WorldConfig


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending dotted path."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a training run needs, including its reproducibility seed."""

    seed: int
    total_steps: int
    world: WorldConfig = field(default_factory=WorldConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    reward: RewardParams = field(default_factory=RewardParams)
    log_every: int = 200          # gradient updates between loss log lines
    eval_every: int = 50_000      # env steps between greedy eval snapshots
    eval_episodes: int = 2
    checkpoint_every: int = 50_000
    resumable: bool = False
    tag: str = ""

    def __post_init__(self) -> None:
        if self.total_steps < 1:
            raise ConfigError("total_steps must be >= 1")
        for name in ("log_every", "eval_every", "eval_episodes", "checkpoint_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    def as_dict(self) -> dict[str, Any]:
        return _to_plain(dataclasses.asdict(self))


def _to_plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_plain(v) for v in value]
    return value


def _coerce(tp: Any, value: Any, path: str) -> Any:
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None:
            if type(None) in args:
                return None
            raise ConfigError(f"{path}: null is not allowed")
        last_error: ConfigError | None = None
        for arm in args:
            if arm is type(None):
                continue
            try:
                return _coerce(arm, value, path)
            except ConfigError as exc:
                last_error = exc
        raise last_error or ConfigError(f"{path}: cannot interpret {value!r}")
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list")
        args = typing.get_args(tp)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(args[0], v, f"{path}[{i}]")
                         for i, v in enumerate(value))
        return tuple(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    return value


def _build(cls: type, data: Any, path: str) -> Any:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{path}: unknown field(s): {', '.join(unknown)}")
    kwargs: dict[str, Any] = {}
    for name, f in known.items():
        child = f"{path}.{name}" if path else name
        if name in data:
            kwargs[name] = _coerce(hints[name], data[name], child)
        elif (f.default is dataclasses.MISSING
              and f.default_factory is dataclasses.MISSING):
            raise ConfigError(f"{child}: missing required field")
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or cls.__name__}: {exc}") from exc


def run_config_from_dict(data: dict[str, Any]) -> RunConfig:
    return _build(RunConfig, data, "")


def load_run_config(path: str | Path, seed_override: int | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    if seed_override is not None:
        raw = dict(raw)
        raw["seed"] = int(seed_override)
    return run_config_from_dict(raw)


def default_parameters() -> dict[str, Any]:
    """Every tunable with its default, grouped by module (JSON-friendly)."""
    return {
        "reward": _to_plain(dataclasses.asdict(RewardParams())),
        "agent": _to_plain(dataclasses.asdict(AgentConfig())),
        "world": _to_plain(dataclasses.asdict(WorldConfig())),
        "run": {
            "log_every": 200, "eval_every": 50_000, "eval_episodes": 2,
            "checkpoint_every": 50_000, "resumable": False,
        },
    }


def dump_parameters(config_path: str | Path | None = None) -> str:
    """JSON text of the effective parameter set (defaults or a config file)."""
    if config_path is None:
        payload: dict[str, Any] = {"source": "defaults", **default_parameters()}
    else:
        cfg = load_run_config(config_path)
        payload = {"source": str(config_path), **cfg.as_dict()}
    return json.dumps(payload, indent=2, sort_keys=True)
