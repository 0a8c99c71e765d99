"""Seeded training loop: environment collection, hindsight relabeling, updates."""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from ..rewards import assemble
from ..world.env import OBS_DIM, DrivingWorld
from .preferences import augment, sample_preference
from .replay import ReplayBuffer, Transition, her_relabel
from .td3 import PDMORLAgent

ABSORBING_TERMINATIONS = ("collision", "route_deviation", "goal")


def _restore_rng(state: dict) -> np.random.Generator:
    rng = np.random.default_rng(0)
    rng.bit_generator.state = state
    return rng


class Trainer:
    """Owns every random stream and all run artifacts for one training run.

    All stochasticity flows through six named generators spawned from the run
    seed, so identical configs reproduce identical logs byte for byte. Resume
    bundles are written at episode boundaries and capture the buffer, the
    generators, and the networks, which makes continuation bit-exact too.
    """

    RNG_NAMES = ("noise", "pref", "her", "buffer", "env", "update")

    def __init__(self, run_config, out_dir: Path):
        self.cfg = run_config
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        ss = np.random.SeedSequence(run_config.seed)
        net_ss, *stream_ss = ss.spawn(1 + len(self.RNG_NAMES))
        for name, child in zip(self.RNG_NAMES, stream_ss):
            setattr(self, f"rng_{name}", np.random.default_rng(child))

        self.env = DrivingWorld(run_config.world)
        self.agent = PDMORLAgent(run_config.agent, rng=np.random.default_rng(net_ss))
        self.buffer = ReplayBuffer(run_config.agent.buffer_capacity, OBS_DIM)
        self.reward_params = run_config.reward
        self.step = 0
        self.episode = 0
        self._ckpt_bucket = 0
        self._eval_bucket = 0
        self._log_path = self.out_dir / "training_log.jsonl"
        self._log_fh = None

    def _log(self, record: dict) -> None:
        if self._log_fh is None:
            self._log_fh = open(self._log_path, "a")
        self._log_fh.write(json.dumps(record) + "\n")
        self._log_fh.flush()

    # -- main loop ------------------------------------------------------------

    def run(self) -> Path:
        cfg = self.cfg
        (self.out_dir / "effective_config.json").write_text(
            json.dumps(cfg.as_dict(), indent=2, sort_keys=True) + "\n")
        started = time.time()

        obs_n, lam, episode_buf, ep_reward = self._begin_episode()
        while self.step < cfg.total_steps:
            self.step += 1
            if self.step <= cfg.agent.warmup_steps:
                action = self.rng_noise.uniform(-1.0, 1.0, 2)
            else:
                action = self.agent.select_action(
                    obs_n, lam, exploration_std=cfg.agent.exploration_std,
                    rng=self.rng_noise, normalized=True)
            _, obs2, outcome = self.env.step(action)
            r = assemble(self.env.last_context, self.reward_params)
            obs2_n = self.agent.normalize_obs(obs2.vector())
            done = 1.0 if outcome.termination in ABSORBING_TERMINATIONS else 0.0
            t = Transition(s=obs_n.astype(np.float32), a=action.astype(np.float32),
                           r=r.astype(np.float32), s2=obs2_n.astype(np.float32),
                           done=done, lam=lam.astype(np.float32))
            self.buffer.add(t)
            episode_buf.append(t)
            ep_reward += r
            obs_n = obs2_n

            if self.step > cfg.agent.warmup_steps and len(self.buffer) >= cfg.agent.batch_size:
                losses = self.agent.update(
                    self.buffer.sample(cfg.agent.batch_size, self.rng_buffer),
                    self.rng_update)
                if self.agent.update_count % cfg.log_every == 0:
                    self._log({"type": "loss", "step": self.step,
                               "update": self.agent.update_count,
                               **{k: round(v, 8) for k, v in losses.items()}})

            if outcome.termination is not None:
                for relabeled in her_relabel(episode_buf, self.rng_her, cfg.agent.her_k):
                    self.buffer.add(relabeled)
                self.episode += 1
                self._log({"type": "episode", "step": self.step,
                           "episode": self.episode,
                           "termination": outcome.termination,
                           "route_completion": round(self.env.route_completion, 6),
                           "steps": self.env.step_count,
                           "lambda": [round(float(x), 6) for x in lam],
                           "return_scalar": round(float(np.dot(augment(lam), ep_reward)), 6),
                           "return_vector": [round(float(x), 6) for x in ep_reward]})
                self._maybe_snapshot()
                obs_n, lam, episode_buf, ep_reward = self._begin_episode()

        self.agent.env_steps = self.step
        final = self.out_dir / "checkpoint_final.npz"
        self.agent.save(final)
        self._log({"type": "done", "step": self.step, "episodes": self.episode,
                   "wall_time_s": round(time.time() - started, 1)})
        if self._log_fh:
            self._log_fh.close()
            self._log_fh = None
        return final

    def _begin_episode(self):
        env_seed = int(self.rng_env.integers(0, 2 ** 31 - 1))
        _, obs = self.env.reset(seed=env_seed)
        lam = sample_preference(self.rng_pref)
        obs_n = self.agent.normalize_obs(obs.vector())
        return obs_n, lam, [], np.zeros(5)

    def _maybe_snapshot(self) -> None:
        cfg = self.cfg
        ckpt_crossed = False
        if cfg.checkpoint_every:
            bucket = self.step // cfg.checkpoint_every
            if bucket > self._ckpt_bucket:
                self._ckpt_bucket = bucket
                ckpt_crossed = True
                self.agent.env_steps = self.step
                self.agent.save(self.out_dir / f"checkpoint_{self.step}.npz")
        if cfg.eval_every:
            bucket = self.step // cfg.eval_every
            if bucket > self._eval_bucket:
                self._eval_bucket = bucket
                self._log(self._evaluate())
        # The resume bundle goes last so it captures the post-eval bucket
        # counters; a resumed run then continues without replaying the eval.
        if ckpt_crossed and cfg.resumable:
            self._save_resume()

    def _evaluate(self) -> dict:
        """Greedy snapshot under the uniform preference on held-out seeds."""
        cfg = self.cfg
        env = DrivingWorld(cfg.world)
        lam = np.full(4, 0.25)
        returns, completions, terminations = [], [], []
        for i in range(cfg.eval_episodes):
            _, obs = env.reset(seed=909_000 + i)
            total = np.zeros(5)
            while True:
                action = self.agent.select_action(obs.vector(), lam)
                _, obs, outcome = env.step(action)
                total += assemble(env.last_context, self.reward_params)
                if outcome.termination is not None:
                    break
            returns.append(float(np.dot(augment(lam), total)))
            completions.append(env.route_completion)
            terminations.append(outcome.termination)
        return {"type": "eval", "step": self.step,
                "return_scalar_mean": round(float(np.mean(returns)), 6),
                "route_completion_mean": round(float(np.mean(completions)), 6),
                "terminations": terminations}

    # -- resume ------------------------------------------------------------

    def _save_resume(self) -> None:
        self.agent.env_steps = self.step
        self.agent.save(self.out_dir / "resume_agent.npz")
        meta = {
            "step": self.step, "episode": self.episode,
            "ckpt_bucket": self._ckpt_bucket, "eval_bucket": self._eval_bucket,
            "rng": {name: getattr(self, f"rng_{name}").bit_generator.state
                    for name in self.RNG_NAMES},
        }
        with open(self.out_dir / "resume_state.npz", "wb") as fh:
            np.savez(fh, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
                     **self.buffer.state())

    def load_resume(self) -> None:
        agent_path = self.out_dir / "resume_agent.npz"
        state_path = self.out_dir / "resume_state.npz"
        if not agent_path.exists() or not state_path.exists():
            raise FileNotFoundError("no resume state in run directory")
        self.agent = PDMORLAgent.load(agent_path)
        with np.load(state_path) as data:
            meta = json.loads(bytes(data["meta"]).decode())
            self.buffer.load_state({k: data[k] for k in
                                    ("s", "a", "r", "s2", "done", "lam")})
        for name, st in meta["rng"].items():
            setattr(self, f"rng_{name}", _restore_rng(st))
        self.step = int(meta["step"])
        self.episode = int(meta["episode"])
        self._ckpt_bucket = int(meta["ckpt_bucket"])
        self._eval_bucket = int(meta["eval_bucket"])


def train(run_config, out_dir) -> Path:
    return Trainer(run_config, Path(out_dir)).run()


def resume(run_config, out_dir) -> Path:
    trainer = Trainer(run_config, Path(out_dir))
    trainer.load_resume()
    return trainer.run()
