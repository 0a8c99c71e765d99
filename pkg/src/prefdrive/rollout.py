"""Single-episode execution shared by evaluation, sweeps, and the server."""

from __future__ import annotations

from typing import Any, Callable

import numpy as np

from .rewards import RewardParams, assemble, jerk_vector
from .trajlog import EpisodeLog, EpisodeRecorder

Policy = Callable[[np.ndarray, np.ndarray], np.ndarray]
QProbe = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def greedy_policy(agent) -> Policy:
    """Deterministic actor rollout (no exploration noise)."""
    def policy(obs_vec: np.ndarray, lam: np.ndarray) -> np.ndarray:
        return agent.select_action(obs_vec, lam)
    return policy


def q_probe(agent) -> QProbe:
    """Critic-1 value of the action actually taken, for alignment metrics."""
    def probe(obs_vec: np.ndarray, action: np.ndarray, lam: np.ndarray) -> np.ndarray:
        return agent.q_values(obs_vec, action, lam)
    return probe


def run_episode(env, policy: Policy, lam, *, seed: int = 0,
                reward_params: RewardParams | None = None,
                collect_q: QProbe | None = None,
                meta: dict[str, Any] | None = None,
                on_step: Callable[[dict[str, Any]], None] | None = None,
                ) -> EpisodeLog:
    """Run one episode to termination and return its full trajectory log."""
    params = reward_params if reward_params is not None else RewardParams()
    lam = np.asarray(lam, dtype=np.float64)
    state, obs = env.reset(seed=seed)
    recorder = EpisodeRecorder(lam, scenario=env.config.scenario,
                               env_seed=seed, meta=meta)
    outcome = None
    while not env.done:
        obs_vec = obs.vector()
        action = np.clip(np.asarray(policy(obs_vec, lam), dtype=np.float64),
                         -1.0, 1.0)
        state, obs, outcome = env.step(action)
        ctx = env.last_context
        reward = assemble(ctx, params)
        row: dict[str, Any] = {
            "x": state.x, "y": state.y, "heading": state.heading,
            "v": state.v, "a_long": state.a_long, "a_lat": state.a_lat,
            "yaw_rate": state.yaw_rate, "throttle": state.throttle,
            "brake": state.brake, "steer": state.steer,
            "d_lat": env.lateral, "d_center": ctx.d_center,
            "v_limit": ctx.v_target, "s": env.s,
            "action": action, "reward": reward,
            "jerk": jerk_vector(ctx),
            "events": sorted(outcome.events),
        }
        if collect_q is not None:
            row["q"] = np.asarray(collect_q(obs_vec, action, lam),
                                  dtype=np.float64)
        recorder.add(**row)
        if on_step is not None:
            on_step(row)
    assert outcome is not None and outcome.termination is not None
    return recorder.finish(outcome.termination, env.route_completion)
