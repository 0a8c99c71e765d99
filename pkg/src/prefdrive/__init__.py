"""Preference-conditioned multi-objective driving stack.

A 2D kinematic driving world, a five-component vector reward, a single
preference-conditioned TD3 policy trained from scratch on numpy, the full
evaluation metric suite, and an experiment CLI with a live steering server.
"""

__version__ = "0.1.0"

__all__ = [
    "AgentConfig", "DrivingWorld", "EpisodeLog", "PDMORLAgent",
    "RewardParams", "RunConfig", "WorldConfig",
    "load_run_config", "run_episode",
]


def __getattr__(name: str):
    if name in ("DrivingWorld", "WorldConfig"):
        from . import world
        return getattr(world, name)
    if name in ("AgentConfig", "PDMORLAgent"):
        from .agent import td3
        return getattr(td3, name)
    if name == "RewardParams":
        from .rewards import RewardParams
        return RewardParams
    if name in ("RunConfig", "load_run_config"):
        from . import config
        return getattr(config, name)
    if name == "EpisodeLog":
        from .trajlog import EpisodeLog
        return EpisodeLog
    if name == "run_episode":
        from .rollout import run_episode
        return run_episode
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
