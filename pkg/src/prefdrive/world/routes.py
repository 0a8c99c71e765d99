"""Procedural road network: four town styles, fixed scenarios, lane frame.

The road is a corridor around a dense centerline. The centerline is the ego
lane center; the lane frame coordinate is the signed lateral offset from it
(left positive). All lane logic lives in that frame:

    ego lane        [-1.75, 1.75]
    oncoming lane   [ 1.75, 5.25]   (center +3.5, traffic runs backwards)
    shoulders       [-4.25, -1.75] and [5.25, 7.75]
    barrier walls   -4.25 and +7.75
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Polyline, arc_points, densify_segments, straight_points

LANE_WIDTH = 3.5
LANE_HALF = LANE_WIDTH / 2.0
ONCOMING_CENTER = LANE_WIDTH
OFF_ROAD_LEFT = -LANE_HALF
OFF_ROAD_RIGHT = LANE_WIDTH + LANE_HALF
BARRIER_LEFT = -4.25
BARRIER_RIGHT = 7.75
# Vehicle half-width is 1.0 m, so body contact with a barrier happens at:
ENV_COLLIDE_LEFT = BARRIER_LEFT + 1.0
ENV_COLLIDE_RIGHT = BARRIER_RIGHT - 1.0

URBAN_LIMIT = 8.33
TURN_LIMIT = 5.56
HIGHWAY_LIMIT = 13.89

WAYPOINT_SPACING = 5.0
ROUTE_TAIL = 20.0  # extra centerline past the goal keeps projection stable

TOWNS = ("grid", "tee", "roundabout", "highway")


@dataclass(frozen=True)
class ScenarioSpec:
    town: str
    seed: int
    length: float            # meters of route (300-800 for fixed scenarios)
    traffic_density: float   # vehicles per 100 m of route
    obstacle_density: float  # parked obstacles per 100 m


SCENARIOS: dict[int, ScenarioSpec] = {
    1: ScenarioSpec("grid", 101, 400.0, 1.0, 0.8),
    2: ScenarioSpec("grid", 102, 650.0, 1.5, 0.8),
    3: ScenarioSpec("tee", 103, 320.0, 0.0, 0.0),
    4: ScenarioSpec("roundabout", 104, 500.0, 1.0, 0.6),
    5: ScenarioSpec("roundabout", 105, 700.0, 1.5, 0.6),
    6: ScenarioSpec("highway", 106, 800.0, 1.0, 0.4),
    7: ScenarioSpec("tee", 107, 550.0, 1.0, 0.8),
}


class Route:
    """Dense centerline plus 5 m waypoints with limits and junction flags."""

    def __init__(self, points: np.ndarray, limits: np.ndarray, junction: np.ndarray,
                 n_waypoints: int):
        self.center = Polyline(points)
        self.point_limits = np.asarray(limits, dtype=np.float64)
        self.point_junction = np.asarray(junction, dtype=bool)
        need = WAYPOINT_SPACING * (n_waypoints - 1)
        if self.center.length < need:
            raise ValueError(f"centerline {self.center.length:.1f} m too short for "
                             f"{n_waypoints} waypoints")
        self.wp_s = WAYPOINT_SPACING * np.arange(n_waypoints)
        self.waypoints = np.array([self.center.point_at(s) for s in self.wp_s])
        idx = np.minimum(np.searchsorted(self.center.cum_s, self.wp_s, side="right") - 1,
                         self.center.n_segments - 1)
        self.wp_junction = self.point_junction[idx]
        self.wp_limits = self.point_limits[idx]
        self.goal_s = float(self.wp_s[-1])
        self.left_barrier = self.center.offset(BARRIER_LEFT)
        self.right_barrier = self.center.offset(BARRIER_RIGHT)

    @property
    def n_waypoints(self) -> int:
        return len(self.wp_s)

    def limit_at(self, s: float) -> float:
        i = int(np.searchsorted(self.center.cum_s, s, side="right")) - 1
        i = int(np.clip(i, 0, len(self.point_limits) - 1))
        return float(self.point_limits[i])

    def junction_at(self, s: float) -> bool:
        i = int(np.searchsorted(self.center.cum_s, s, side="right")) - 1
        i = int(np.clip(i, 0, len(self.point_junction) - 1))
        return bool(self.point_junction[i])

    def frame_at(self, s: float, lateral: float) -> tuple[float, float, float]:
        """World pose (x, y, heading-of-road) for lane coordinates (s, lateral)."""
        base = self.center.point_at(s)
        h = self.center.heading_at(s)
        n = np.array([-np.sin(h), np.cos(h)])
        p = base + lateral * n
        return float(p[0]), float(p[1]), h


def _emit(prims: list[tuple], start=(0.0, 0.0), heading=0.0):
    """Primitives -> (dense points, per-point limits, per-point junction flags).

    Each primitive is ("straight", length, limit, junc) or
    ("arc", radius, sweep, limit, junc); points are roughly 1 m apart.
    """
    pos = np.asarray(start, dtype=np.float64)
    pieces, limits, juncs = [], [], []
    for prim in prims:
        if prim[0] == "straight":
            _, length, limit, junc = prim
            pts = straight_points(pos, heading, length)
        elif prim[0] == "arc":
            _, radius, sweep, limit, junc = prim
            pts = arc_points(pos, heading, radius, sweep)
            heading += sweep
        else:
            raise ValueError(f"unknown primitive {prim[0]!r}")
        pos = pts[-1]
        pieces.append(pts)
        n = len(pts) if not pieces[:-1] else len(pts) - 1
        limits.append(np.full(n, limit))
        juncs.append(np.full(n, junc, dtype=bool))
    points = densify_segments(pieces)
    return points, np.concatenate(limits), np.concatenate(juncs)


def _prim_length(prim) -> float:
    if prim[0] == "straight":
        return prim[1]
    return abs(prim[2]) * prim[1]


def _grid_prims(rng: np.random.Generator, target: float) -> list[tuple]:
    prims, total = [], 0.0
    while total < target:
        length = rng.uniform(80.0, 160.0)
        prims.append(("straight", length, URBAN_LIMIT, False))
        total += length
        radius = rng.uniform(10.0, 14.0)
        sweep = np.pi / 2 * (1.0 if rng.random() < 0.5 else -1.0)
        prims.append(("arc", radius, sweep, TURN_LIMIT, False))
        total += radius * abs(sweep)
    return prims


def _tee_prims(rng: np.random.Generator, target: float) -> list[tuple]:
    prims, total = [], 0.0
    while total < target:
        length = rng.uniform(60.0, 140.0)
        prims.append(("straight", length, URBAN_LIMIT, False))
        total += length
        prims.append(("straight", 12.0, URBAN_LIMIT, True))
        total += 12.0
        roll = rng.random()
        if roll < 0.4:
            sweep = -np.pi / 2  # right turn at the tee
        elif roll < 0.8:
            sweep = np.pi / 2
        else:
            prims.append(("straight", 10.0, URBAN_LIMIT, True))
            total += 10.0
            continue
        radius = rng.uniform(10.0, 14.0)
        prims.append(("arc", radius, sweep, TURN_LIMIT, True))
        total += radius * abs(sweep)
    return prims


def _roundabout_prims(rng: np.random.Generator, target: float) -> list[tuple]:
    prims, total = [], 0.0
    exit_sign = 1.0
    while total < target:
        length = rng.uniform(70.0, 140.0)
        prims.append(("straight", length, URBAN_LIMIT, False))
        total += length
        circ = rng.uniform(np.pi * 0.75, np.pi * 1.15) * exit_sign
        exit_sign = -exit_sign
        for prim in (("arc", 12.0, -np.sign(circ) * np.pi / 6, TURN_LIMIT, True),
                     ("arc", 14.0, circ, TURN_LIMIT, True),
                     ("arc", 12.0, -np.sign(circ) * np.pi / 6, TURN_LIMIT, True)):
            prims.append(prim)
            total += _prim_length(prim)
    return prims


def _highway_prims(rng: np.random.Generator, target: float) -> list[tuple]:
    prims, total = [], 0.0
    while total < target:
        length = rng.uniform(200.0, 400.0)
        prims.append(("straight", length, HIGHWAY_LIMIT, False))
        total += length
        radius = rng.uniform(100.0, 200.0)
        sweep = np.deg2rad(rng.uniform(15.0, 35.0)) * (1.0 if rng.random() < 0.5 else -1.0)
        prims.append(("arc", radius, sweep, HIGHWAY_LIMIT, False))
        total += radius * abs(sweep)
    return prims


_TOWN_GENERATORS = {
    "grid": _grid_prims,
    "tee": _tee_prims,
    "roundabout": _roundabout_prims,
    "highway": _highway_prims,
}

# Scenario 3 is the fixed qualitative course: a right turn at the first
# T-intersection, then a left at the second. No randomness.
_SCENARIO3_PRIMS = [
    ("straight", 90.0, URBAN_LIMIT, False),
    ("straight", 12.0, URBAN_LIMIT, True),
    ("arc", 12.0, -np.pi / 2, TURN_LIMIT, True),
    ("straight", 110.0, URBAN_LIMIT, False),
    ("straight", 12.0, URBAN_LIMIT, True),
    ("arc", 12.0, np.pi / 2, TURN_LIMIT, True),
    ("straight", 110.0, URBAN_LIMIT, False),
]


def build_route(town: str, rng: np.random.Generator, length: float | None = None,
                n_waypoints: int | None = None, scenario: int | None = None) -> Route:
    """Generate a route. Exactly one of length / n_waypoints fixes the size."""
    if n_waypoints is None:
        if length is None:
            raise ValueError("need length or n_waypoints")
        n_waypoints = int(length // WAYPOINT_SPACING) + 1
    target = WAYPOINT_SPACING * (n_waypoints - 1) + ROUTE_TAIL
    if scenario == 3:
        prims = list(_SCENARIO3_PRIMS)
        while sum(_prim_length(p) for p in prims) < target:
            prims.append(("straight", 60.0, URBAN_LIMIT, False))
    else:
        if town not in _TOWN_GENERATORS:
            raise ValueError(f"unknown town {town!r}")
        prims = _TOWN_GENERATORS[town](rng, target)
    points, limits, junction = _emit(prims)
    return Route(points, limits, junction, n_waypoints)


def build_scenario(scenario_id: int) -> tuple[Route, ScenarioSpec]:
    if scenario_id not in SCENARIOS:
        raise ValueError(f"scenario id must be in 1..7, got {scenario_id}")
    spec = SCENARIOS[scenario_id]
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    route = build_route(spec.town, rng, length=spec.length, scenario=scenario_id)
    return route, spec
