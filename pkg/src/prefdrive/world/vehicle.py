"""Ego vehicle kinematics: control split, acceleration lag, pose integration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import wrap_angle

DT = 0.1
MAX_STEER_RAD = np.deg2rad(11.0)


@dataclass(frozen=True)
class VehicleParams:
    length: float = 4.5
    width: float = 2.0
    a_max: float = 3.5       # full-throttle acceleration, m/s^2
    b_max: float = 8.0       # full-brake deceleration, m/s^2
    drag: float = 0.05       # linear drag coefficient, 1/s
    tau_acc: float = 0.3     # first-order actuator lag, s
    # dt/tau_acc = 1/3 with a_max = 3.5 and b_max = 8 keeps full braking
    # strictly decelerating even right after full throttle:
    # (2/3)*3.5 + (1/3)*(-8) < 0.


@dataclass(frozen=True)
class VehicleState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    v: float = 0.0
    a_long: float = 0.0
    a_lat: float = 0.0
    yaw_rate: float = 0.0
    throttle: float = 0.0
    brake: float = 0.0
    steer: float = 0.0


def split_control(u: float) -> tuple[float, float]:
    """Map the combined pedal command u in [-1, 1] to (throttle, brake).

    u above -0.5 is throttle scaled to [0, 1]; below -0.5 is brake scaled to
    [0, 1]; exactly -0.5 is coasting (both zero).
    """
    u = float(np.clip(u, -1.0, 1.0))
    if u > -0.5:
        return (u + 0.5) / 1.5, 0.0
    if u < -0.5:
        return 0.0, (-0.5 - u) / 0.5
    return 0.0, 0.0


def step_vehicle(state: VehicleState, steer: float, pedal: float,
                 params: VehicleParams = VehicleParams(), dt: float = DT) -> VehicleState:
    """Advance one tick.

    Steering is direct: full lock turns the heading by 11 degrees per tick.
    Longitudinal acceleration follows the pedal command through a first-order
    lag; speed is clamped at zero (no reverse gear).
    """
    steer = float(np.clip(steer, -1.0, 1.0))
    throttle, brake = split_control(pedal)

    a_cmd = throttle * params.a_max - brake * params.b_max - params.drag * state.v
    alpha = dt / params.tau_acc
    a_long = state.a_long + alpha * (a_cmd - state.a_long)

    v = state.v + a_long * dt
    if v < 0.0:
        v = 0.0
        a_long = (v - state.v) / dt

    dh = steer * MAX_STEER_RAD
    heading = wrap_angle(state.heading + dh)
    yaw_rate = dh / dt
    a_lat = v * yaw_rate

    x = state.x + v * np.cos(heading) * dt
    y = state.y + v * np.sin(heading) * dt

    return VehicleState(
        x=float(x), y=float(y), heading=float(heading), v=float(v),
        a_long=float(a_long), a_lat=float(a_lat), yaw_rate=float(yaw_rate),
        throttle=float(throttle), brake=float(brake), steer=float(steer),
    )


def place_on_pose(x: float, y: float, heading: float, v: float = 0.0) -> VehicleState:
    return VehicleState(x=float(x), y=float(y), heading=float(wrap_angle(heading)), v=float(v))


def state_to_dict(s: VehicleState) -> dict:
    return {
        "x": round(s.x, 6), "y": round(s.y, 6), "heading": round(s.heading, 6),
        "v": round(s.v, 6), "a_long": round(s.a_long, 6), "a_lat": round(s.a_lat, 6),
        "yaw_rate": round(s.yaw_rate, 6), "throttle": round(s.throttle, 6),
        "brake": round(s.brake, 6), "steer": round(s.steer, 6),
    }
