"""Ring-buffer replay storage and preference-relabeling (hindsight) support."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .preferences import N_PREFS, sample_preference


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray          # 5-component reward vector
    s2: np.ndarray
    done: float            # 1.0 only for absorbing terminals
    lam: np.ndarray        # preference the policy was conditioned on


class ReplayBuffer:
    """Uniform-sampling FIFO ring buffer with preallocated float32 storage."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int = 2,
                 reward_dim: int = 5):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.s = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.a = np.zeros((capacity, action_dim), dtype=np.float32)
        self.r = np.zeros((capacity, reward_dim), dtype=np.float32)
        self.s2 = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.lam = np.zeros((capacity, N_PREFS), dtype=np.float32)
        self.ptr = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, t: Transition) -> None:
        i = self.ptr
        self.s[i] = t.s
        self.a[i] = t.a
        self.r[i] = t.r
        self.s2[i] = t.s2
        self.done[i] = t.done
        self.lam[i] = t.lam
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return {
            "s": self.s[idx], "a": self.a[idx], "r": self.r[idx],
            "s2": self.s2[idx], "done": self.done[idx], "lam": self.lam[idx],
        }

    def state(self) -> dict:
        n = self.size
        order = (np.arange(n) + (self.ptr - n)) % self.capacity if n == self.capacity \
            else np.arange(n)
        return {"s": self.s[order], "a": self.a[order], "r": self.r[order],
                "s2": self.s2[order], "done": self.done[order], "lam": self.lam[order]}

    def load_state(self, state: dict) -> None:
        n = len(state["done"])
        if n > self.capacity:
            raise ValueError("saved buffer larger than capacity")
        self.s[:n] = state["s"]
        self.a[:n] = state["a"]
        self.r[:n] = state["r"]
        self.s2[:n] = state["s2"]
        self.done[:n] = state["done"]
        self.lam[:n] = state["lam"]
        self.size = n
        self.ptr = n % self.capacity


def her_relabel(episode: list[Transition], rng: np.random.Generator,
                k: int) -> list[Transition]:
    """K hindsight copies of each transition under freshly sampled preferences.

    The reward vector is preference-independent, so relabeling only swaps the
    conditioning preference; states, actions, rewards and done flags are
    byte-identical to the source transition.
    """
    if k < 0:
        raise ValueError("relabel count must be non-negative")
    out: list[Transition] = []
    for t in episode:
        for _ in range(k):
            out.append(Transition(s=t.s, a=t.a, r=t.r, s2=t.s2, done=t.done,
                                  lam=sample_preference(rng)))
    return out
