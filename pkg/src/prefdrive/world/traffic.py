"""Traffic vehicles on lane rails and parked obstacles on the shoulder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import rect_corners, rect_segments
from .routes import ONCOMING_CENTER, Route

CAR_LENGTH = 4.5
CAR_WIDTH = 2.0
FOLLOW_GAP_HARD = 8.0    # meters bumper distance that forces a stop
FOLLOW_GAP_SOFT = 18.0   # meters under which speed matches the leader
ACCEL_LIMIT = 2.5
BRAKE_LIMIT = 4.5

RAY_CLASS_STATIC = 1   # reported to the sensor as 0.5
RAY_CLASS_VEHICLE = 2  # reported as 1.0


@dataclass
class TrafficCar:
    s: float                 # arc position of the center along the route
    lane: int                # 0 = ego direction, 1 = oncoming
    v: float
    cruise_frac: float       # fraction of the local limit this driver holds

    def direction(self) -> float:
        return 1.0 if self.lane == 0 else -1.0


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    heading: float
    corners: np.ndarray
    segments: np.ndarray


class TrafficField:
    """All non-ego actors. Deterministic given (route, rng)."""

    def __init__(self, route: Route, rng: np.random.Generator,
                 traffic_density: float, obstacle_density: float):
        self.route = route
        self.cars: list[TrafficCar] = []
        self.obstacles: list[Obstacle] = []
        self._spawn_cars(rng, traffic_density)
        self._spawn_obstacles(rng, obstacle_density)

    def _spawn_cars(self, rng: np.random.Generator, density: float) -> None:
        length = self.route.goal_s
        n = int(np.floor(density * length / 100.0))
        if n <= 0:
            return
        lanes = rng.integers(0, 2, size=n)
        taken: dict[int, list[float]] = {0: [], 1: []}
        for lane in lanes:
            lo = 45.0 if lane == 0 else 70.0
            hi = length - 25.0
            if hi <= lo:
                continue
            for _ in range(12):
                s = float(rng.uniform(lo, hi))
                if all(abs(s - o) >= 30.0 for o in taken[lane]):
                    taken[lane].append(s)
                    limit = self.route.limit_at(s)
                    frac = float(rng.uniform(0.70, 0.95))
                    self.cars.append(TrafficCar(s=s, lane=int(lane),
                                                v=frac * limit, cruise_frac=frac))
                    break
        self.cars.sort(key=lambda c: c.s)

    def _spawn_obstacles(self, rng: np.random.Generator, density: float) -> None:
        length = self.route.goal_s
        n = int(np.floor(density * length / 100.0))
        positions: list[float] = []
        for _ in range(n):
            for _ in range(12):
                s = float(rng.uniform(40.0, length - 15.0))
                if all(abs(s - o) >= 25.0 for o in positions):
                    positions.append(s)
                    break
        for s in positions:
            lateral = float(rng.uniform(-2.95, -2.55))  # left shoulder parking
            x, y, h = self.route.frame_at(s, lateral)
            corners = rect_corners(x, y, h, CAR_LENGTH, CAR_WIDTH)
            self.obstacles.append(Obstacle(x, y, h, corners, rect_segments(corners)))

    def step(self, ego_s: float, ego_v: float, dt: float) -> None:
        """Advance every car one tick with simple leader-following."""
        for i, car in enumerate(self.cars):
            gap = np.inf
            leader_v = 0.0
            for j, other in enumerate(self.cars):
                if j == i or other.lane != car.lane:
                    continue
                ahead = (other.s - car.s) * car.direction()
                if 0.0 < ahead < gap:
                    gap = ahead
                    leader_v = other.v
            if car.lane == 0:
                ahead = ego_s - car.s
                if 0.0 < ahead < gap:
                    gap = ahead
                    leader_v = ego_v
            gap -= CAR_LENGTH
            limit = self.route.limit_at(car.s)
            v_des = min(car.cruise_frac * limit, limit)
            if gap < FOLLOW_GAP_HARD:
                v_des = 0.0
            elif gap < FOLLOW_GAP_SOFT:
                v_des = min(v_des, leader_v)
            a = np.clip((v_des - car.v) / 1.0, -BRAKE_LIMIT, ACCEL_LIMIT)
            car.v = max(0.0, car.v + a * dt)
            car.s += car.v * dt * car.direction()
            car.s = float(np.clip(car.s, 5.0, self.route.goal_s + 10.0))

    def car_pose(self, car: TrafficCar) -> tuple[float, float, float]:
        lateral = 0.0 if car.lane == 0 else ONCOMING_CENTER
        x, y, h = self.route.frame_at(car.s, lateral)
        if car.lane == 1:
            h = h + np.pi
        return x, y, h

    def car_corners(self, car: TrafficCar) -> np.ndarray:
        x, y, h = self.car_pose(car)
        return rect_corners(x, y, h, CAR_LENGTH, CAR_WIDTH)

    def car_velocity(self, car: TrafficCar) -> np.ndarray:
        _, _, h = self.car_pose(car)
        return car.v * np.array([np.cos(h), np.sin(h)])

    def nearby_cars(self, ego_s: float, radius: float = 60.0) -> list[TrafficCar]:
        return [c for c in self.cars if abs(c.s - ego_s) <= radius]

    def nearby_obstacles(self, ego_xy: np.ndarray, radius: float = 60.0) -> list[Obstacle]:
        return [o for o in self.obstacles
                if (o.x - ego_xy[0]) ** 2 + (o.y - ego_xy[1]) ** 2 <= radius * radius]
