"""Training loop: determinism, crash recovery, relabeling volume, done flags."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from _builders import tiny_run_config
from prefdrive.agent.training import ABSORBING_TERMINATIONS, Trainer, resume, train
from prefdrive.config import RunConfig


def read_log(path: Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh]


def strip_wall_time(records: list[dict]) -> list[dict]:
    out = []
    for rec in records:
        rec = dict(rec)
        rec.pop("wall_time_s", None)
        out.append(rec)
    return out


def checkpoint_arrays(path: Path) -> dict[str, np.ndarray]:
    with np.load(path) as data:
        return {k: np.array(data[k]) for k in data.files}


class TestAbsorbingSet:
    def test_contents(self):
        assert ABSORBING_TERMINATIONS == ("collision", "route_deviation", "goal")
        assert "stagnation" not in ABSORBING_TERMINATIONS
        assert "step_limit" not in ABSORBING_TERMINATIONS


class TestDeterminism:
    def test_identical_config_and_seed_reproduce_logs_and_weights(self, tmp_path):
        """Same config + seed twice: byte-identical logs (minus wall time) and
        bit-identical final checkpoints."""
        cfg = tiny_run_config()
        path_a = train(cfg, tmp_path / "a")
        path_b = train(cfg, tmp_path / "b")

        log_a = strip_wall_time(read_log(tmp_path / "a" / "training_log.jsonl"))
        log_b = strip_wall_time(read_log(tmp_path / "b" / "training_log.jsonl"))
        assert log_a == log_b
        assert any(rec["type"] == "loss" for rec in log_a)
        assert any(rec["type"] == "episode" for rec in log_a)
        assert any(rec["type"] == "eval" for rec in log_a)

        arrays_a = checkpoint_arrays(path_a)
        arrays_b = checkpoint_arrays(path_b)
        assert sorted(arrays_a) == sorted(arrays_b)
        for key in arrays_a:
            assert np.array_equal(arrays_a[key], arrays_b[key]), key

    def test_different_seed_diverges(self, tmp_path):
        base = tiny_run_config(total_steps=260)
        other = tiny_run_config(total_steps=260, seed=6)
        path_a = train(base, tmp_path / "a")
        path_b = train(other, tmp_path / "b")
        arrays_a = checkpoint_arrays(path_a)
        arrays_b = checkpoint_arrays(path_b)
        assert any(not np.array_equal(arrays_a[k], arrays_b[k])
                   for k in arrays_a if k.startswith("actor_p"))


class TestCrashRecovery:
    def test_resume_is_bit_exact(self, tmp_path):
        """Kill-and-resume equals the uninterrupted run, logs and weights."""
        cfg = tiny_run_config()
        dir_a = tmp_path / "straight"
        dir_b = tmp_path / "resumed"
        final_a = train(cfg, dir_a)

        # reconstruct dir_b as it would look right after the crash: the resume
        # bundle plus the log lines written up to the bundle's step
        assert (dir_a / "resume_state.npz").exists(), "run must emit a bundle"
        dir_b.mkdir()
        shutil.copy(dir_a / "resume_agent.npz", dir_b / "resume_agent.npz")
        shutil.copy(dir_a / "resume_state.npz", dir_b / "resume_state.npz")
        with np.load(dir_a / "resume_state.npz") as data:
            meta = json.loads(bytes(data["meta"]).decode())
        crash_step = int(meta["step"])
        assert 0 < crash_step < cfg.total_steps
        with open(dir_b / "training_log.jsonl", "w") as fh:
            for rec in read_log(dir_a / "training_log.jsonl"):
                if rec["step"] <= crash_step:
                    fh.write(json.dumps(rec) + "\n")

        final_b = resume(cfg, dir_b)

        log_a = strip_wall_time(read_log(dir_a / "training_log.jsonl"))
        log_b = strip_wall_time(read_log(dir_b / "training_log.jsonl"))
        assert log_a == log_b
        arrays_a = checkpoint_arrays(final_a)
        arrays_b = checkpoint_arrays(final_b)
        assert sorted(arrays_a) == sorted(arrays_b)
        for key in arrays_a:
            assert np.array_equal(arrays_a[key], arrays_b[key]), key

    def test_resume_without_bundle_raises(self, tmp_path):
        cfg = tiny_run_config()
        (tmp_path / "empty").mkdir()
        with pytest.raises(FileNotFoundError):
            resume(cfg, tmp_path / "empty")


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    out = tmp_path_factory.mktemp("accounting")
    cfg = tiny_run_config()
    trainer = Trainer(cfg, out)
    trainer.run()
    return cfg, trainer, read_log(out / "training_log.jsonl")


class TestBufferAccounting:
    def test_hindsight_relabel_volume(self, run):
        cfg, trainer, log = run
        completed = [rec for rec in log if rec["type"] == "episode"]
        relabeled = cfg.agent.her_k * sum(rec["steps"] for rec in completed)
        assert len(trainer.buffer) == cfg.total_steps + relabeled

    def test_done_only_for_absorbing_terminations(self, run):
        cfg, trainer, log = run
        completed = [rec for rec in log if rec["type"] == "episode"]
        absorbing_steps = sum(1 for rec in completed
                              if rec["termination"] in ABSORBING_TERMINATIONS)
        state = trainer.buffer.state()
        # the final transition of each absorbing episode carries done=1,
        # and each of its hindsight copies repeats it
        assert state["done"].sum() == (1 + cfg.agent.her_k) * absorbing_steps

    def test_timeout_episodes_bootstrap(self, tmp_path):
        """Step-limited episodes are truncations, not terminals: done stays 0."""
        cfg = tiny_run_config(total_steps=130, checkpoint_every=70,
                              eval_every=120,
                              world={"scenario": 1, "max_steps": 30,
                                     "stagnation_steps": 1000})
        trainer = Trainer(cfg, tmp_path)
        trainer.run()
        log = read_log(tmp_path / "training_log.jsonl")
        completed = [rec for rec in log if rec["type"] == "episode"]
        by_kind = {"absorbing": 0, "timeout": 0}
        for rec in completed:
            kind = ("absorbing" if rec["termination"] in ABSORBING_TERMINATIONS
                    else "timeout")
            by_kind[kind] += 1
        assert by_kind["timeout"] > 0, "30-step cap must truncate episodes"
        state = trainer.buffer.state()
        assert state["done"].sum() == (1 + cfg.agent.her_k) * by_kind["absorbing"]

    def test_episode_records_have_vector_returns(self, run):
        _, _, log = run
        rec = next(r for r in log if r["type"] == "episode")
        assert len(rec["return_vector"]) == 5
        assert len(rec["lambda"]) == 4
        assert rec["termination"] in ("collision", "route_deviation", "goal",
                                      "stagnation", "step_limit")

    def test_artifacts_exist(self, run):
        cfg, trainer, log = run
        out = trainer.out_dir
        assert (out / "checkpoint_final.npz").exists()
        assert (out / "effective_config.json").exists()
        persisted = json.loads((out / "effective_config.json").read_text())
        assert persisted == cfg.as_dict()
        mid = sorted(out.glob("checkpoint_[0-9]*.npz"))
        assert mid, "periodic checkpoint expected within the run"
        done = [rec for rec in log if rec["type"] == "done"]
        assert len(done) == 1 and done[0]["step"] == cfg.total_steps


class TestRunConfigPlumbing:
    def test_trainer_uses_seven_streams(self, tmp_path):
        cfg = tiny_run_config(total_steps=10)
        trainer = Trainer(cfg, tmp_path)
        for name in Trainer.RNG_NAMES:
            assert hasattr(trainer, f"rng_{name}")
        assert isinstance(cfg, RunConfig)
