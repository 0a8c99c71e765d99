"""Five-component vector reward: core driving competence plus four styles.

Every operation is a pure function of a StepContext, so the engine can be
evaluated standalone (tests, offline replays) or inside the environment loop.
The default coefficients are the published defaults of this reward design and
are audited field-by-field by the test suite; everything is overridable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .world.vehicle import DT, VehicleState


@dataclass(frozen=True)
class RewardParams:
    # style objective weights
    alpha_l: float = 0.10          # lateral / longitudinal accel magnitude
    alpha_yaw: float = 0.30        # yaw rate (aggressiveness)
    alpha_l_acc: float = 0.20      # longitudinal accel change penalty
    beta_steer: float = 0.10       # abrupt steering change penalty
    beta_throttle: float = 0.05    # throttle variability penalty
    beta_v: float = 0.30           # abrupt velocity change penalty
    beta_long: float = 0.30        # longitudinal accel change penalty
    beta_jerk: float = 0.03        # jerk magnitude penalty
    beta_b: float = 1.20           # comfort bias
    delta_speed: float = 1.75      # target-velocity deviation weight
    # core driving weights
    c_col: float = 5.0             # base collision penalty
    c_acc: float = 0.1             # impact-acceleration scaling in collisions
    c_brake: float = 2.75          # braking-when-obstacle-ahead reward
    w_type: float = 1.7            # collision type weight (environment > vehicle)
    c_spd_high: float = 0.3        # speeding penalty
    c_idle: float = 3.5            # unnecessary idling penalty
    c_osc: float = 0.2             # oscillatory steering penalty
    c_steer: float = 0.6           # fast steering change penalty
    c_throttle: float = 0.4        # abrupt throttle change penalty
    c_off: float = 1.2             # off-road penalty
    c_inv: float = 1.0             # lane invasion penalty
    w_lane: float = 2.0            # lane invasion severity weight
    c_dev: float = 0.15            # lateral lane deviation penalty
    c_lat: float = 1.0 / 3.0       # lateral route deviation penalty
    c_head: float = 1.0 / 90.0     # heading misalignment penalty (degrees)
    c_wp: float = 0.25             # waypoint bonus
    c_junc: float = 0.1            # junction traversal bonus
    c_goal: float = 20.0           # final goal bonus
    c_termination: float = -5.0    # non-goal episode termination penalty

    def override(self, **kwargs) -> "RewardParams":
        bad = set(kwargs) - {f.name for f in fields(self)}
        if bad:
            raise ValueError(f"unknown reward params: {sorted(bad)}")
        return RewardParams(**{**self.as_dict(), **kwargs})

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class DetectorParams:
    """Thresholds for the situation detectors feeding the reward indicators."""
    clear_path_range: float = 20.0   # meters, forward obstacle check
    clear_path_fan: float = 20.0     # degrees half-angle of the forward fan
    idle_speed: float = 0.1          # m/s, below counts as standing
    idle_steps: int = 20             # consecutive standing steps before idle
    osc_delta: float = 0.2           # |steering change| that counts for oscillation
    osc_reversals: int = 3           # sign reversals within the window
    osc_window: int = 10             # steps
    abrupt_steer: float = 0.3        # |steering change| that counts as abrupt
    abrupt_pedal: float = 0.3        # |pedal change| that counts as abrupt
    brake_min_speed: float = 0.1     # m/s, braking reward needs actual motion


@dataclass(frozen=True)
class StepOutcome:
    events: frozenset[str] = frozenset()
    impact_accel: float = 0.0
    termination: str | None = None


@dataclass(frozen=True)
class StepContext:
    """Everything one reward evaluation needs, frozen at the end of a step."""
    cur: VehicleState
    prev: VehicleState
    action: tuple[float, float]
    prev_action: tuple[float, float]
    outcome: StepOutcome
    d_center: float          # |offset| from the nearest lane center, m
    d_lat: float             # |offset| from the route centerline, m
    d_route: float           # route distance past the 1 m dead-zone, m
    theta_head_deg: float    # |heading error| to the route tangent, degrees
    p_prog: float            # waypoint-relative progress, clipped to [-1, 1]
    v_target: float          # current speed limit, m/s
    v_max: float             # top reference speed, m/s
    a_max: float             # reference acceleration bound, m/s^2
    clear_path: bool
    brake_for_obstacle: bool
    idle: bool
    oscillating: bool
    abrupt: bool
    off_road: bool
    in_oncoming: bool
    dt: float = DT


def _deltas(ctx: StepContext) -> tuple[float, float, float, float]:
    d_steer = ctx.action[0] - ctx.prev_action[0]
    d_pedal = ctx.action[1] - ctx.prev_action[1]
    d_v = ctx.cur.v - ctx.prev.v
    d_a_long = ctx.cur.a_long - ctx.prev.a_long
    return d_steer, d_pedal, d_v, d_a_long


def jerk_vector(ctx: StepContext) -> tuple[float, float]:
    return ((ctx.cur.a_long - ctx.prev.a_long) / ctx.dt,
            (ctx.cur.a_lat - ctx.prev.a_lat) / ctx.dt)


def collision_reward(ctx: StepContext, p: RewardParams) -> float:
    r = 0.0
    if "collision_environment" in ctx.outcome.events:
        r -= p.w_type * (p.c_col + p.c_acc * ctx.outcome.impact_accel)
    elif "collision_vehicle" in ctx.outcome.events:
        r -= p.c_col + p.c_acc * ctx.outcome.impact_accel
    if ctx.brake_for_obstacle:
        r += p.c_brake
    return r


def boundary_reward(ctx: StepContext, p: RewardParams) -> float:
    r = 0.0
    if ctx.off_road:
        r -= p.c_off
    if ctx.in_oncoming:
        r -= p.w_lane * p.c_inv
    return r


def lane_reward(ctx: StepContext, p: RewardParams) -> float:
    return -p.c_dev * ctx.d_center


def nav_reward(ctx: StepContext, p: RewardParams) -> float:
    r = ctx.p_prog - p.c_lat * ctx.d_lat - p.c_head * abs(ctx.theta_head_deg) - ctx.d_route
    if "waypoint_reached" in ctx.outcome.events:
        r += p.c_wp
    if "junction_traversed" in ctx.outcome.events:
        r += p.c_junc
    return r


def speed_reward(ctx: StepContext, p: RewardParams) -> float:
    if ctx.v_target <= 0.0:
        raise ValueError("speed reward needs a positive target velocity")
    return -p.delta_speed * (abs(ctx.v_target - ctx.cur.v) / ctx.v_target) + p.delta_speed


def perf_reward(ctx: StepContext, p: RewardParams) -> float:
    """Situation-dependent regularizer; cases checked in order, first match wins."""
    if ctx.clear_path:
        return speed_reward(ctx, p)
    if ctx.cur.v > ctx.v_target:
        return -p.c_spd_high * abs(ctx.cur.v - ctx.v_target)
    if ctx.idle:
        return -p.c_idle
    if ctx.oscillating:
        return -p.c_osc
    if ctx.abrupt:
        d_steer, d_pedal, _, _ = _deltas(ctx)
        return -p.c_steer * abs(d_steer) - p.c_throttle * abs(d_pedal)
    return 0.0


def core_reward(ctx: StepContext, p: RewardParams) -> float:
    r = (collision_reward(ctx, p) + boundary_reward(ctx, p) + lane_reward(ctx, p)
         + nav_reward(ctx, p) + perf_reward(ctx, p))
    if "goal_reached" in ctx.outcome.events:
        r += p.c_goal
    elif ctx.outcome.termination is not None:
        r += p.c_termination
    return r


def agg_reward(ctx: StepContext, p: RewardParams) -> float:
    r = (p.alpha_l * abs(ctx.cur.a_long) + p.alpha_l * abs(ctx.cur.a_lat)
         + p.alpha_yaw * abs(ctx.cur.yaw_rate))
    if ctx.cur.a_long * ctx.prev.a_long < 0.0:  # brake-gas sign flip
        r -= p.alpha_l_acc * abs(ctx.cur.a_long - ctx.prev.a_long)
    return r


def comfort_reward(ctx: StepContext, p: RewardParams) -> float:
    d_steer, d_pedal, d_v, d_a_long = _deltas(ctx)
    return (-p.beta_steer * abs(d_steer) - p.beta_throttle * abs(d_pedal)
            - p.beta_v * abs(d_v) - p.beta_long * abs(d_a_long)
            - p.beta_jerk * math.hypot(*jerk_vector(ctx)) + p.beta_b)


def eff_reward(ctx: StepContext, p: RewardParams) -> float:
    v_ratio = min(max(ctx.cur.v / ctx.v_max, 0.0), 1.0)
    a_cur = min(abs(ctx.cur.a_long), ctx.a_max)
    return (1.0 - ctx.cur.throttle) * v_ratio * (1.0 - a_cur / ctx.a_max)


def assemble(ctx: StepContext, p: RewardParams | None = None) -> np.ndarray:
    """Reward vector (core, aggressiveness, comfort, speed, efficiency)."""
    p = p or RewardParams()
    return np.array([
        core_reward(ctx, p),
        agg_reward(ctx, p),
        comfort_reward(ctx, p),
        speed_reward(ctx, p),
        eff_reward(ctx, p),
    ], dtype=np.float64)


REWARD_NAMES = ("core", "agg", "comfort", "speed", "eff")
PREFERENCE_NAMES = ("agg", "comfort", "speed", "eff")
