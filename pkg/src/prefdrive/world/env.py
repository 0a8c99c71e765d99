"""The driving environment: reset/step/observe plus event and context plumbing."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..rewards import DetectorParams, StepContext, StepOutcome
from .geometry import polyline_segments, raycast, rect_corners, rects_overlap, wrap_angle
from .routes import (ENV_COLLIDE_LEFT, ENV_COLLIDE_RIGHT, OFF_ROAD_LEFT, OFF_ROAD_RIGHT,
                     ONCOMING_CENTER, SCENARIOS, WAYPOINT_SPACING, Route, build_route,
                     build_scenario)
from .traffic import RAY_CLASS_STATIC, RAY_CLASS_VEHICLE, TrafficField
from .vehicle import DT, VehicleParams, VehicleState, place_on_pose, step_vehicle

RAY_CLASS_VALUES = {0: 0.0, RAY_CLASS_STATIC: 0.5, RAY_CLASS_VEHICLE: 1.0}


@dataclass(frozen=True)
class WorldConfig:
    scenario: int | None = None          # 1..7 fixed course; None = random route
    town: str = "grid"                   # random-route town style
    n_waypoints: int = 500               # random-route size (5 m spacing)
    traffic_density: float | None = None  # None = scenario/default value
    obstacle_density: float | None = None
    max_steps: int = 1400
    deviation_limit: float = 6.0
    stagnation_steps: int = 200
    stagnation_advance: float = 0.5
    sensor_range: float = 30.0
    n_rays: int = 64
    fan_deg: float = 110.0
    detector: DetectorParams = DetectorParams()
    vehicle: VehicleParams = VehicleParams()
    weather: str = "clear"               # cosmetic metadata only

    def resolved_densities(self) -> tuple[float, float]:
        if self.scenario is not None:
            spec = SCENARIOS[self.scenario]
            traffic = spec.traffic_density if self.traffic_density is None else self.traffic_density
            obstacle = spec.obstacle_density if self.obstacle_density is None else self.obstacle_density
        else:
            traffic = 1.0 if self.traffic_density is None else self.traffic_density
            obstacle = 0.8 if self.obstacle_density is None else self.obstacle_density
        return traffic, obstacle


@dataclass
class Observation:
    f: np.ndarray        # 128 sensor features: 64 ranges then 64 class flags
    o: np.ndarray        # 17 odometry features
    a_hist: np.ndarray   # previous 3 actions, most recent first
    wp: np.ndarray       # next waypoint (distance m, bearing rad)
    v_limit: float

    def vector(self) -> np.ndarray:
        return np.concatenate([self.f, self.o, self.a_hist, self.wp, [self.v_limit]])


OBS_DIM = 128 + 17 + 6 + 2 + 1
NEUTRAL_ACTION = (0.0, -0.5)


class DrivingWorld:
    """Deterministic 2D driving episode generator.

    Single-threaded; every random draw happens in reset(), so identical
    (config, seed, action sequence) triples produce bit-identical episodes.
    """

    def __init__(self, config: WorldConfig = WorldConfig()):
        self.config = config
        rel = np.deg2rad(np.linspace(-config.fan_deg / 2, config.fan_deg / 2, config.n_rays))
        self._ray_rel = rel
        self._central_rays = np.abs(np.rad2deg(rel)) <= config.detector.clear_path_fan
        self.route: Route | None = None
        self.done = True

    # -- lifecycle ----------------------------------------------------------

    def reset(self, seed: int = 0) -> tuple[VehicleState, Observation]:
        cfg = self.config
        ss = np.random.SeedSequence(seed)
        route_ss, traffic_ss = ss.spawn(2)
        traffic_density, obstacle_density = cfg.resolved_densities()
        if cfg.scenario is not None:
            self.route, _ = build_scenario(cfg.scenario)
        else:
            self.route = build_route(cfg.town, np.random.default_rng(route_ss),
                                     n_waypoints=cfg.n_waypoints)
        self.traffic = TrafficField(self.route, np.random.default_rng(traffic_ss),
                                    traffic_density, obstacle_density)
        x, y, h = self.route.frame_at(0.0, 0.0)
        self.ego = place_on_pose(x, y, h)
        self.prev_ego = self.ego
        self.v_max = float(np.max(self.route.point_limits))

        self.done = False
        self.step_count = 0
        self.s = 0.0
        self.lateral = 0.0
        self.best_s = 0.0
        self.last_progress_step = 0
        self.next_wp = 1
        self.time_since_wp = 0
        self.idle_run = 0
        self.hint = 0
        self.prev_action = NEUTRAL_ACTION
        self.action_history: deque[tuple[float, float]] = deque(
            [NEUTRAL_ACTION] * 3, maxlen=3)
        self.steer_deltas: deque[float] = deque(maxlen=cfg.detector.osc_window)
        self.route_completion = 0.0
        self.last_context: StepContext | None = None
        self.last_outcome = StepOutcome()

        self._sense()
        return self.ego, self.observe()

    def step(self, action) -> tuple[VehicleState, Observation, StepOutcome]:
        if self.done:
            raise RuntimeError("step() called on a terminated episode")
        cfg = self.config
        steer = float(np.clip(action[0], -1.0, 1.0))
        pedal = float(np.clip(action[1], -1.0, 1.0))

        self.prev_ego = self.ego
        prev_s = self.s
        prev_action = self.prev_action
        self.ego = step_vehicle(self.ego, steer, pedal, cfg.vehicle)
        self.step_count += 1

        pos = np.array([self.ego.x, self.ego.y])
        s, lateral, idx = self.route.center.project(pos, hint=self.hint)
        self.hint = idx
        foot = self.route.center.point_at(s)
        dist = float(np.hypot(*(pos - foot)))
        self.s = s
        self.lateral = lateral

        self.traffic.step(s, self.ego.v, DT)

        events: set[str] = set()
        impact = 0.0

        # waypoint / goal progression
        passed = []
        while self.next_wp < self.route.n_waypoints and s >= self.route.wp_s[self.next_wp]:
            passed.append(self.next_wp)
            self.next_wp += 1
        if passed:
            events.add("waypoint_reached")
            self.time_since_wp = 0
            if any(self.route.wp_junction[i] for i in passed):
                events.add("junction_traversed")
        else:
            self.time_since_wp += 1
        goal_crossed = self.next_wp >= self.route.n_waypoints

        # lane-frame flags
        off_road = lateral < OFF_ROAD_LEFT or lateral > OFF_ROAD_RIGHT
        in_oncoming = ONCOMING_CENTER - 1.75 < lateral <= ONCOMING_CENTER + 1.75
        if off_road:
            events.add("off_road")
        if in_oncoming:
            events.add("lane_invasion")

        # collisions
        ego_corners = rect_corners(self.ego.x, self.ego.y, self.ego.heading,
                                   cfg.vehicle.length, cfg.vehicle.width)
        collided_env = lateral <= ENV_COLLIDE_LEFT or lateral >= ENV_COLLIDE_RIGHT
        if not collided_env:
            for obstacle in self.traffic.nearby_obstacles(pos, radius=12.0):
                if rects_overlap(ego_corners, obstacle.corners):
                    collided_env = True
                    break
        collided_vehicle = False
        ego_vel = self.ego.v * np.array([np.cos(self.ego.heading), np.sin(self.ego.heading)])
        for car in self.traffic.nearby_cars(s, radius=15.0):
            if rects_overlap(ego_corners, self.traffic.car_corners(car)):
                collided_vehicle = True
                rel = ego_vel - self.traffic.car_velocity(car)
                impact = max(impact, float(np.hypot(*rel)) / DT)
                break
        if collided_env:
            events.add("collision_environment")
            impact = max(impact, self.ego.v / DT)
        if collided_vehicle:
            events.add("collision_vehicle")

        # stagnation bookkeeping
        if s > self.best_s + cfg.stagnation_advance:
            self.best_s = s
            self.last_progress_step = self.step_count
        self.best_s = max(self.best_s, s)

        termination = self.check_termination(
            collided=collided_env or collided_vehicle,
            deviation=dist, goal_crossed=goal_crossed)
        if termination == "goal":
            events.add("goal_reached")
        self.done = termination is not None
        self.route_completion = 1.0 if termination == "goal" else min(
            self.best_s / self.route.goal_s, 1.0)

        # situation detectors
        self._sense()
        clear = bool(np.all(self._ray_dist[self._central_rays]
                            >= cfg.detector.clear_path_range))
        vehicle_ahead = bool(np.any(
            (self._ray_dist[self._central_rays] < cfg.detector.clear_path_range)
            & (self._ray_cls[self._central_rays] == RAY_CLASS_VEHICLE)))
        if self.ego.v < cfg.detector.idle_speed and clear:
            self.idle_run += 1
        else:
            self.idle_run = 0
        d_steer = steer - prev_action[0]
        d_pedal = pedal - prev_action[1]
        self.steer_deltas.append(d_steer)
        significant = [d for d in self.steer_deltas if abs(d) > cfg.detector.osc_delta]
        reversals = sum(1 for a, b in zip(significant, significant[1:])
                        if np.sign(a) != np.sign(b))

        road_heading = float(np.arctan2(self.route.center.tangent[idx, 1],
                                        self.route.center.tangent[idx, 0]))
        heading_err = wrap_angle(self.ego.heading - road_heading)
        d_lat = abs(lateral)
        d_center = min(abs(lateral), abs(lateral - ONCOMING_CENTER))

        outcome = StepOutcome(events=frozenset(events), impact_accel=impact,
                              termination=termination)
        self.last_outcome = outcome
        self.last_context = StepContext(
            cur=self.ego, prev=self.prev_ego,
            action=(steer, pedal), prev_action=prev_action,
            outcome=outcome,
            d_center=d_center, d_lat=d_lat,
            d_route=dist if dist > 1.0 else 0.0,
            theta_head_deg=abs(np.rad2deg(heading_err)),
            p_prog=float(np.clip((s - prev_s) / WAYPOINT_SPACING, -1.0, 1.0)),
            v_target=self.route.limit_at(s), v_max=self.v_max,
            a_max=cfg.vehicle.a_max,
            clear_path=clear,
            brake_for_obstacle=(self.ego.brake > 0.0 and vehicle_ahead
                                and self.ego.v > cfg.detector.brake_min_speed),
            idle=self.idle_run >= cfg.detector.idle_steps,
            oscillating=reversals >= cfg.detector.osc_reversals,
            abrupt=(abs(d_steer) > cfg.detector.abrupt_steer
                    or abs(d_pedal) > cfg.detector.abrupt_pedal),
            off_road=off_road, in_oncoming=in_oncoming, dt=DT,
        )

        self.prev_action = (steer, pedal)
        self.action_history.appendleft((steer, pedal))
        return self.ego, self.observe(), outcome

    def check_termination(self, collided: bool, deviation: float,
                          goal_crossed: bool) -> str | None:
        cfg = self.config
        if collided:
            return "collision"
        if deviation > cfg.deviation_limit:
            return "route_deviation"
        if self.step_count - self.last_progress_step >= cfg.stagnation_steps:
            return "stagnation"
        if goal_crossed:
            return "goal"
        if self.step_count >= cfg.max_steps:
            return "step_limit"
        return None

    # -- sensing ------------------------------------------------------------

    def _sense(self) -> None:
        cfg = self.config
        pos = np.array([self.ego.x, self.ego.y])
        window = int(cfg.sensor_range) + 30
        lo = max(0, self.hint - window)
        hi = min(len(self.route.center.points), self.hint + window + 1)
        seg_arrays = [polyline_segments(self.route.left_barrier.points[lo:hi]),
                      polyline_segments(self.route.right_barrier.points[lo:hi])]
        seg_classes = [np.full(len(seg_arrays[0]), RAY_CLASS_STATIC),
                       np.full(len(seg_arrays[1]), RAY_CLASS_STATIC)]
        for obstacle in self.traffic.nearby_obstacles(pos, radius=cfg.sensor_range + 10.0):
            seg_arrays.append(obstacle.segments)
            seg_classes.append(np.full(4, RAY_CLASS_STATIC))
        for car in self.traffic.nearby_cars(self.s, radius=cfg.sensor_range + 15.0):
            corners = self.traffic.car_corners(car)
            seg_arrays.append(np.concatenate([corners, np.roll(corners, -1, axis=0)],
                                             axis=1))
            seg_classes.append(np.full(4, RAY_CLASS_VEHICLE))
        segments = np.concatenate(seg_arrays, axis=0)
        classes = np.concatenate(seg_classes)
        angles = self.ego.heading + self._ray_rel
        self._ray_dist, self._ray_cls = raycast(pos, angles, segments, classes,
                                                cfg.sensor_range)

    def observe(self) -> Observation:
        cfg = self.config
        ego = self.ego
        f = np.concatenate([
            self._ray_dist / cfg.sensor_range,
            np.array([RAY_CLASS_VALUES[int(c)] for c in self._ray_cls]),
        ])
        pos = np.array([ego.x, ego.y])
        s, lateral, idx = self.route.center.project(pos, hint=self.hint)
        road_heading = float(np.arctan2(self.route.center.tangent[idx, 1],
                                        self.route.center.tangent[idx, 0]))
        limit = self.route.limit_at(s)
        o = np.array([
            ego.v,
            ego.v * np.cos(ego.heading),
            ego.v * np.sin(ego.heading),
            np.hypot(ego.a_long, ego.a_lat),
            ego.a_long,
            ego.a_lat,
            ego.yaw_rate,
            ego.throttle,
            ego.brake,
            ego.steer,
            np.sin(ego.heading),
            np.cos(ego.heading),
            lateral,
            wrap_angle(ego.heading - road_heading),
            np.clip(s / self.route.goal_s, 0.0, 1.0),
            np.clip(self.time_since_wp / 200.0, 0.0, 5.0),
            ego.v / limit,
        ])
        a_hist = np.array(self.action_history, dtype=np.float64).ravel()
        wp_idx = min(self.next_wp, self.route.n_waypoints - 1)
        target = self.route.waypoints[wp_idx]
        delta = target - pos
        wp = np.array([np.hypot(*delta),
                       wrap_angle(np.arctan2(delta[1], delta[0]) - ego.heading)])
        return Observation(f=f, o=o, a_hist=a_hist, wp=wp, v_limit=limit)
