"""2D kinematic driving world: geometry, routes, traffic, environment.

`env` is imported lazily: it depends on the reward module's context types,
while the reward module needs `world.vehicle`, so an eager import here would
close a cycle whenever the reward side loads first.
"""

from .routes import SCENARIOS, Route, build_route, build_scenario
from .vehicle import DT, VehicleParams, VehicleState, split_control, step_vehicle

_ENV_NAMES = ("OBS_DIM", "DrivingWorld", "Observation", "WorldConfig")

__all__ = [
    "OBS_DIM", "DrivingWorld", "Observation", "WorldConfig",
    "SCENARIOS", "Route", "build_route", "build_scenario",
    "DT", "VehicleParams", "VehicleState", "split_control", "step_vehicle",
]


def __getattr__(name: str):
    if name in _ENV_NAMES:
        from . import env
        return getattr(env, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
