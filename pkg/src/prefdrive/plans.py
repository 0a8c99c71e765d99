"""Deterministic evaluation plans: objective sweeps and dense grids.

A plan is pure data plus derivation rules: every preference vector and
environment seed is a deterministic function of the plan parameters, so two
machines given the same plan run the same episodes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterator

import numpy as np
import yaml

from .rewards import PREFERENCE_NAMES

DEFAULT_LEVELS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class SweepEpisode:
    objective: str
    objective_index: int
    level: float
    repeat: int
    lam: np.ndarray
    env_seed: int


@dataclass(frozen=True)
class SweepPlan:
    """Per-objective weight sweep.

    For each tracked objective and each weight level w, runs
    `episodes_per_level` episodes with lambda[objective] = w and the
    remaining mass (1 - w) split over the other three objectives by a
    Dirichlet(1, 1, 1) draw seeded per episode cell.
    """

    objectives: tuple[str, ...] = PREFERENCE_NAMES
    levels: tuple[float, ...] = DEFAULT_LEVELS
    episodes_per_level: int = 20
    scenario: int = 1
    base_seed: int = 4000

    def __post_init__(self) -> None:
        unknown = set(self.objectives) - set(PREFERENCE_NAMES)
        if unknown:
            raise ValueError(f"unknown objectives: {sorted(unknown)}")
        for w in self.levels:
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"sweep level {w} outside [0, 1]")
        if self.episodes_per_level < 1:
            raise ValueError("episodes_per_level must be >= 1")

    @property
    def total_episodes(self) -> int:
        return len(self.objectives) * len(self.levels) * self.episodes_per_level

    def preference_for(self, objective_index: int, level_index: int,
                       repeat: int) -> np.ndarray:
        name = self.objectives[objective_index]
        slot = PREFERENCE_NAMES.index(name)
        w = float(self.levels[level_index])
        rng = np.random.default_rng(np.random.SeedSequence(
            [self.base_seed, 101, objective_index, level_index, repeat]))
        rest = rng.dirichlet(np.ones(3))
        lam = np.empty(4, dtype=np.float64)
        lam[slot] = w
        others = [i for i in range(4) if i != slot]
        lam[others] = (1.0 - w) * rest
        return lam

    def env_seed_for(self, objective_index: int, level_index: int,
                     repeat: int) -> int:
        mixed = np.random.SeedSequence(
            [self.base_seed, 202, objective_index, level_index, repeat])
        return int(mixed.generate_state(1, np.uint32)[0] % (2**31 - 1))

    def episodes(self) -> Iterator[SweepEpisode]:
        for oi, name in enumerate(self.objectives):
            for li, w in enumerate(self.levels):
                for rep in range(self.episodes_per_level):
                    yield SweepEpisode(
                        objective=name, objective_index=oi,
                        level=float(w), repeat=rep,
                        lam=self.preference_for(oi, li, rep),
                        env_seed=self.env_seed_for(oi, li, rep),
                    )

    def as_dict(self) -> dict[str, Any]:
        return {
            "objectives": list(self.objectives),
            "levels": [float(w) for w in self.levels],
            "episodes_per_level": self.episodes_per_level,
            "scenario": self.scenario,
            "base_seed": self.base_seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SweepPlan":
        known = {"objectives", "levels", "episodes_per_level",
                 "scenario", "base_seed"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown sweep plan fields: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        if "objectives" in data:
            kwargs["objectives"] = tuple(data["objectives"])
        if "levels" in data:
            kwargs["levels"] = tuple(float(w) for w in data["levels"])
        for name in ("episodes_per_level", "scenario", "base_seed"):
            if name in data:
                kwargs[name] = int(data[name])
        return cls(**kwargs)


def preference_lattice(resolution: int = 13) -> np.ndarray:
    """All 4-component simplex points with coordinates k/resolution."""
    points = []
    for k1, k2, k3 in itertools.product(range(resolution + 1), repeat=3):
        k4 = resolution - k1 - k2 - k3
        if k4 >= 0:
            points.append((k1, k2, k3, k4))
    arr = np.array(sorted(points), dtype=np.float64) / resolution
    return arr


def dense_preference_grid(resolution: int = 13, target: int = 540) -> np.ndarray:
    """Simplex grid trimmed to `target` vectors.

    Starts from the full k/resolution lattice (560 points at resolution 13)
    and drops the interior points closest to the centroid, keeping every
    face and vertex. Ties break on lexicographic order.
    """
    grid = preference_lattice(resolution)
    excess = grid.shape[0] - target
    if excess < 0:
        raise ValueError(
            f"lattice at resolution {resolution} has only {grid.shape[0]} points")
    if excess == 0:
        return grid
    interior = np.all(grid > 0.0, axis=1)
    interior_idx = np.flatnonzero(interior)
    if interior_idx.size < excess:
        raise ValueError("not enough interior points to trim")
    centroid = np.full(4, 0.25)
    dist = np.linalg.norm(grid[interior_idx] - centroid, axis=1)
    order = np.lexsort((*(grid[interior_idx].T[::-1]), np.round(dist, 12)))
    drop = set(interior_idx[order[:excess]].tolist())
    keep = [i for i in range(grid.shape[0]) if i not in drop]
    return grid[keep]


@dataclass(frozen=True)
class DenseEvalPlan:
    """Dense preference-space evaluation across scenarios.

    Runs every grid vector on every scenario listed; environment seeds are
    derived from (base_seed, scenario, vector index).
    """

    resolution: int = 13
    n_vectors: int = 540
    scenarios: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7)
    base_seed: int = 7000
    grid: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid",
                           dense_preference_grid(self.resolution, self.n_vectors))

    @property
    def total_episodes(self) -> int:
        return self.n_vectors * len(self.scenarios)

    def env_seed_for(self, scenario: int, vector_index: int) -> int:
        mixed = np.random.SeedSequence([self.base_seed, scenario, vector_index])
        return int(mixed.generate_state(1, np.uint32)[0] % (2**31 - 1))

    def episodes(self) -> Iterator[tuple[int, int, np.ndarray, int]]:
        """Yields (scenario, vector_index, lambda, env_seed)."""
        for scenario in self.scenarios:
            for vi in range(self.n_vectors):
                yield scenario, vi, self.grid[vi], self.env_seed_for(scenario, vi)

    def as_dict(self) -> dict[str, Any]:
        return {
            "resolution": self.resolution,
            "n_vectors": self.n_vectors,
            "scenarios": list(self.scenarios),
            "base_seed": self.base_seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DenseEvalPlan":
        known = {"resolution", "n_vectors", "scenarios", "base_seed"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown dense-eval plan fields: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        for name in ("resolution", "n_vectors", "base_seed"):
            if name in data:
                kwargs[name] = int(data[name])
        if "scenarios" in data:
            kwargs["scenarios"] = tuple(int(s) for s in data["scenarios"])
        return cls(**kwargs)


#: One-hot preference vectors used for qualitative comparisons.
ONE_HOT_PREFERENCES: dict[str, np.ndarray] = {
    name: np.eye(4, dtype=np.float64)[i]
    for i, name in enumerate(PREFERENCE_NAMES)
}


def load_sweep_plan(path: str | Path | None) -> SweepPlan:
    if path is None:
        return SweepPlan()
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    return SweepPlan.from_dict(data)


def load_dense_plan(path: str | Path | None) -> DenseEvalPlan:
    if path is None:
        return DenseEvalPlan()
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    return DenseEvalPlan.from_dict(data)


def scaled_plan(plan: SweepPlan, episodes_per_level: int) -> SweepPlan:
    """Smaller copy of a sweep plan (used by smoke tests)."""
    return replace(plan, episodes_per_level=episodes_per_level)
