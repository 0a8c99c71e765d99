"""Preference-conditioned TD3 with twin vector critics and an angle loss.

One policy serves every preference: the actor sees (state, lambda) and the
critics map (state, action, lambda) to a five-component value vector. Targets
use the TD3 recipe (smoothed target action, per-sample twin minimum chosen by
the scalarized value, delayed policy updates); the angle loss pulls the
critic's style components toward the interpolated preference direction.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from ..nets import MLP, Adam, flat_grads, mlp_sizes, soft_update
from ..world.env import OBS_DIM
from .preferences import (N_PREFS, angle_loss, angle_loss_grad, augment,
                          interpolate_preference)

ACTION_DIM = 2
REWARD_DIM = 5

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.99
    tau: float = 0.005
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    batch_size: int = 256
    policy_delay: int = 2
    smoothing_std: float = 0.2
    smoothing_clip: float = 0.5
    exploration_std: float = 0.1
    angle_coef_actor: float = 1.0
    angle_coef_critic: float = 0.0
    her_k: int = 4
    buffer_capacity: int = 500_000
    warmup_steps: int = 5_000
    hidden: tuple[int, ...] = (250, 125)
    dtype: str = "float32"


def observation_scale() -> np.ndarray:
    """Fixed per-feature divisors that bring observations near [-1, 1]."""
    scale = np.ones(OBS_DIM)
    o = np.array([14.0, 14.0, 14.0, 8.0, 8.0, 8.0, 2.0, 1.0, 1.0, 1.0,
                  1.0, 1.0, 3.5, 1.6, 1.0, 1.0, 1.5])
    scale[128:145] = o
    scale[151] = 30.0   # waypoint distance
    scale[152] = np.pi  # waypoint bearing
    scale[153] = 14.0   # speed limit
    return scale


class PDMORLAgent:
    """Actor-critic bundle plus the two TD3 update rules."""

    def __init__(self, config: AgentConfig = AgentConfig(),
                 rng: np.random.Generator | None = None,
                 interpolator=None, obs_dim: int = OBS_DIM):
        rng = rng or np.random.default_rng()
        self.config = config
        self.obs_dim = obs_dim
        self.interpolator = interpolator
        dtype = np.dtype(config.dtype).type
        actor_sizes = mlp_sizes(obs_dim + N_PREFS, ACTION_DIM, config.hidden)
        critic_sizes = mlp_sizes(obs_dim + ACTION_DIM + N_PREFS, REWARD_DIM, config.hidden)
        self.actor = MLP(actor_sizes, output="tanh", rng=rng, dtype=dtype)
        self.critic1 = MLP(critic_sizes, output="identity", rng=rng, dtype=dtype)
        self.critic2 = MLP(critic_sizes, output="identity", rng=rng, dtype=dtype)
        self.actor_target = self.actor.clone()
        self.critic1_target = self.critic1.clone()
        self.critic2_target = self.critic2.clone()
        self.actor_opt = Adam(self.actor.parameters(), lr=config.actor_lr)
        self.critic1_opt = Adam(self.critic1.parameters(), lr=config.critic_lr)
        self.critic2_opt = Adam(self.critic2.parameters(), lr=config.critic_lr)
        self.obs_scale = observation_scale()
        self.update_count = 0
        self.env_steps = 0

    # -- acting ---------------------------------------------------------------

    def normalize_obs(self, obs: np.ndarray) -> np.ndarray:
        return np.asarray(obs) / self.obs_scale

    def select_action(self, obs_vec: np.ndarray, lam: np.ndarray,
                      exploration_std: float = 0.0,
                      rng: np.random.Generator | None = None,
                      normalized: bool = False) -> np.ndarray:
        s = np.asarray(obs_vec) if normalized else self.normalize_obs(obs_vec)
        x = np.concatenate([s, lam])
        a = self.actor.forward(x)[0].astype(np.float64)
        if exploration_std > 0.0:
            if rng is None:
                raise ValueError("exploration needs an rng")
            a = a + rng.normal(0.0, exploration_std, ACTION_DIM)
        return np.clip(a, -1.0, 1.0)

    def q_values(self, obs_vec: np.ndarray, action: np.ndarray, lam: np.ndarray,
                 normalized: bool = False) -> np.ndarray:
        s = np.asarray(obs_vec) if normalized else self.normalize_obs(obs_vec)
        x = np.concatenate([s, np.asarray(action), lam])
        return self.critic1.forward(x)[0].astype(np.float64)

    # -- learning ---------------------------------------------------------------

    def _interp_batch(self, lam: np.ndarray) -> np.ndarray:
        if self.interpolator is None:
            norms = np.linalg.norm(lam, axis=1, keepdims=True)
            return lam / np.maximum(norms, 1e-12)
        return np.stack([interpolate_preference(row, self.interpolator)
                         for row in lam])

    def critic_update(self, batch: dict[str, np.ndarray],
                      rng: np.random.Generator) -> dict[str, float]:
        cfg = self.config
        B = len(batch["done"])
        if B == 0:
            raise ValueError("empty batch")
        lam = batch["lam"].astype(np.float64)
        lamt = augment(lam)

        noise = np.clip(rng.normal(0.0, cfg.smoothing_std, (B, ACTION_DIM)),
                        -cfg.smoothing_clip, cfg.smoothing_clip)
        x2 = np.concatenate([batch["s2"], batch["lam"]], axis=1)
        a2 = np.clip(self.actor_target.forward(x2) + noise, -1.0, 1.0)
        q_in2 = np.concatenate([batch["s2"], a2, batch["lam"]], axis=1)
        q1t = self.critic1_target.forward(q_in2).astype(np.float64)
        q2t = self.critic2_target.forward(q_in2).astype(np.float64)
        v1 = np.sum(q1t * lamt, axis=1)
        v2 = np.sum(q2t * lamt, axis=1)
        q_sel = np.where((v1 <= v2)[:, None], q1t, q2t)
        y = batch["r"].astype(np.float64) \
            + cfg.gamma * (1.0 - batch["done"].astype(np.float64))[:, None] * q_sel

        q_in = np.concatenate([batch["s"], batch["a"], batch["lam"]], axis=1)
        lam_p = self._interp_batch(lam) if cfg.angle_coef_critic > 0.0 else None
        losses = {}
        for name, critic, opt in (("critic1", self.critic1, self.critic1_opt),
                                  ("critic2", self.critic2, self.critic2_opt)):
            q = critic.forward(q_in, cache=True).astype(np.float64)
            diff = q - y
            mse = float(np.mean(diff ** 2))
            upstream = 2.0 * diff / diff.size
            if lam_p is not None:
                upstream[:, 1:] += cfg.angle_coef_critic \
                    * angle_loss_grad(lam_p, q[:, 1:]) / B
                losses[f"{name}_angle"] = float(np.mean(angle_loss(lam_p, q[:, 1:])))
            grads, _ = critic.backward(upstream)
            opt.step(critic.parameters(), flat_grads(grads))
            losses[name] = mse
        return losses

    def actor_update(self, batch: dict[str, np.ndarray]) -> dict[str, float]:
        cfg = self.config
        B = len(batch["done"])
        if B == 0:
            raise ValueError("empty batch")
        lam = batch["lam"].astype(np.float64)
        lamt = augment(lam)

        x = np.concatenate([batch["s"], batch["lam"]], axis=1)
        a_pi = self.actor.forward(x, cache=True)
        q_in = np.concatenate([batch["s"], a_pi, batch["lam"]], axis=1)
        q = self.critic1.forward(q_in, cache=True).astype(np.float64)

        scal = np.sum(lamt * q, axis=1)
        loss = -float(np.mean(scal))
        upstream_q = -lamt / B
        result = {"actor": loss}
        if cfg.angle_coef_actor > 0.0:
            lam_p = self._interp_batch(lam)
            ang = angle_loss(lam_p, q[:, 1:])
            result["actor_angle"] = float(np.mean(ang))
            result["actor"] = loss + cfg.angle_coef_actor * result["actor_angle"]
            upstream_q[:, 1:] += cfg.angle_coef_actor \
                * angle_loss_grad(lam_p, q[:, 1:]) / B
        _, d_qin = self.critic1.backward(upstream_q)
        d_action = d_qin[:, self.obs_dim:self.obs_dim + ACTION_DIM]
        grads, _ = self.actor.backward(d_action)
        self.actor_opt.step(self.actor.parameters(), flat_grads(grads))
        return result

    def update(self, batch: dict[str, np.ndarray],
               rng: np.random.Generator) -> dict[str, float]:
        losses = self.critic_update(batch, rng)
        self.update_count += 1
        if self.update_count % self.config.policy_delay == 0:
            losses.update(self.actor_update(batch))
            soft_update(self.actor_target, self.actor, self.config.tau)
            soft_update(self.critic1_target, self.critic1, self.config.tau)
            soft_update(self.critic2_target, self.critic2, self.config.tau)
        return losses

    # -- persistence --------------------------------------------------------------

    def _net_map(self) -> dict[str, MLP]:
        return {"actor": self.actor, "critic1": self.critic1, "critic2": self.critic2,
                "actor_t": self.actor_target, "critic1_t": self.critic1_target,
                "critic2_t": self.critic2_target}

    def save(self, path) -> None:
        arrays: dict[str, np.ndarray] = {}
        for prefix, net in self._net_map().items():
            for i, p in enumerate(net.parameters()):
                arrays[f"{prefix}_p{i}"] = p
        for prefix, opt in (("actor", self.actor_opt), ("critic1", self.critic1_opt),
                            ("critic2", self.critic2_opt)):
            st = opt.state()
            for i, (m, v) in enumerate(zip(st["m"], st["v"])):
                arrays[f"adam_{prefix}_m{i}"] = m
                arrays[f"adam_{prefix}_v{i}"] = v
        meta = {
            "version": CHECKPOINT_VERSION,
            "obs_dim": self.obs_dim,
            "config": asdict(self.config),
            "update_count": self.update_count,
            "env_steps": self.env_steps,
            "adam_t": {"actor": self.actor_opt.t, "critic1": self.critic1_opt.t,
                       "critic2": self.critic2_opt.t},
        }
        arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path, interpolator=None) -> "PDMORLAgent":
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode())
            if meta.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
            cfg_dict = dict(meta["config"])
            cfg_dict["hidden"] = tuple(cfg_dict["hidden"])
            config = AgentConfig(**cfg_dict)
            agent = cls(config, rng=np.random.default_rng(0),
                        interpolator=interpolator, obs_dim=int(meta["obs_dim"]))
            for prefix, net in agent._net_map().items():
                params = []
                i = 0
                while f"{prefix}_p{i}" in data:
                    params.append(data[f"{prefix}_p{i}"])
                    i += 1
                net.set_parameters(params)
            for prefix, opt in (("actor", agent.actor_opt),
                                ("critic1", agent.critic1_opt),
                                ("critic2", agent.critic2_opt)):
                m, v, i = [], [], 0
                while f"adam_{prefix}_m{i}" in data:
                    m.append(data[f"adam_{prefix}_m{i}"])
                    v.append(data[f"adam_{prefix}_v{i}"])
                    i += 1
                opt.m = m
                opt.v = v
                opt.t = int(meta["adam_t"][prefix])
            agent.update_count = int(meta["update_count"])
            agent.env_steps = int(meta["env_steps"])
        return agent
