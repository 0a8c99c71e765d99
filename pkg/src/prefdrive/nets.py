"""Dense-network machinery built on numpy: MLP forward/backward, Adam, targets.

Small by design: the only architectures needed are ReLU MLPs with a tanh or
identity head, so reverse-mode gradients are written out by hand instead of
pulling in an autodiff framework. backward() also returns the gradient with
respect to the input, which the policy update needs to differentiate through
the critic.
"""

from __future__ import annotations

import numpy as np

HIDDEN_SIZES = (250, 125)
OUTPUT_INIT = 3e-3


class MLP:
    """Fully connected net: sizes[0] -> ... -> sizes[-1], ReLU hidden layers."""

    def __init__(self, sizes: list[int], output: str = "identity",
                 rng: np.random.Generator | None = None, dtype=np.float32):
        if output not in ("identity", "tanh"):
            raise ValueError(f"unsupported output activation {output!r}")
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        rng = rng or np.random.default_rng()
        self.sizes = list(sizes)
        self.output = output
        self.dtype = dtype
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            last = i == len(sizes) - 2
            limit = OUTPUT_INIT if last else np.sqrt(6.0 / fan_in)
            self.weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)).astype(dtype))
            self.biases.append((rng.uniform(-limit, limit, fan_out) if last
                                else np.zeros(fan_out)).astype(dtype))
        self._cache: tuple | None = None

    def forward(self, x: np.ndarray, cache: bool = False) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=self.dtype))
        if x.shape[1] != self.sizes[0]:
            raise ValueError(f"input dim {x.shape[1]} != {self.sizes[0]}")
        acts = [x]
        pre = []
        h = x
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            if i < len(self.weights) - 1:
                h = np.maximum(z, 0.0)
            elif self.output == "tanh":
                h = np.tanh(z)
            else:
                h = z
            acts.append(h)
        if cache:
            self._cache = (acts, pre)
        return h

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)

    def backward(self, upstream: np.ndarray) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
        """Gradients for the last cached forward pass.

        upstream: dLoss/dOutput, same shape as the forward result. Returns
        ([(dW, db) per layer], dLoss/dInput). Gradients are sums over the
        batch; the caller owns any 1/B scaling.
        """
        if self._cache is None:
            raise RuntimeError("backward() without a cached forward()")
        acts, pre = self._cache
        grad = np.asarray(upstream, dtype=self.dtype)
        grad = np.atleast_2d(grad)
        if self.output == "tanh":
            grad = grad * (1.0 - acts[-1] ** 2)
        param_grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            param_grads[i] = (acts[i].T @ grad, grad.sum(axis=0))
            grad = grad @ self.weights[i].T
            if i > 0:
                grad = grad * (pre[i - 1] > 0.0)
        return param_grads, grad

    # -- parameter plumbing --------------------------------------------------

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def set_parameters(self, params: list[np.ndarray]) -> None:
        expected = self.parameters()
        if len(params) != len(expected):
            raise ValueError("parameter count mismatch")
        for i, (cur, new) in enumerate(zip(expected, params)):
            if cur.shape != np.asarray(new).shape:
                raise ValueError(f"parameter {i} shape {np.asarray(new).shape} "
                                 f"!= {cur.shape}")
        n = len(self.weights)
        self.weights = [np.array(params[2 * i], dtype=self.dtype) for i in range(n)]
        self.biases = [np.array(params[2 * i + 1], dtype=self.dtype) for i in range(n)]

    def clone(self) -> "MLP":
        twin = MLP.__new__(MLP)
        twin.sizes = list(self.sizes)
        twin.output = self.output
        twin.dtype = self.dtype
        twin.weights = [w.copy() for w in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        twin._cache = None
        return twin


class Adam:
    """Standard Adam with bias correction, operating on a parameter list."""

    def __init__(self, params: list[np.ndarray], lr: float = 3e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            g = g.astype(p.dtype, copy=False)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)

    def state(self) -> dict:
        return {"t": self.t, "lr": self.lr, "beta1": self.beta1,
                "beta2": self.beta2, "eps": self.eps, "m": self.m, "v": self.v}

    def load_state(self, state: dict) -> None:
        self.t = int(state["t"])
        self.lr = float(state["lr"])
        self.beta1 = float(state["beta1"])
        self.beta2 = float(state["beta2"])
        self.eps = float(state["eps"])
        if len(state["m"]) != len(self.m):
            raise ValueError("optimizer state length mismatch")
        self.m = [np.array(a) for a in state["m"]]
        self.v = [np.array(a) for a in state["v"]]


def flat_grads(param_grads: list[tuple[np.ndarray, np.ndarray]]) -> list[np.ndarray]:
    out = []
    for dw, db in param_grads:
        out.extend((dw, db))
    return out


def soft_update(target: MLP, source: MLP, tau: float) -> None:
    """target <- tau * source + (1 - tau) * target, elementwise."""
    for t, s in zip(target.parameters(), source.parameters()):
        t *= 1.0 - tau
        t += tau * s


def mlp_sizes(input_dim: int, output_dim: int,
              hidden: tuple[int, ...] = HIDDEN_SIZES) -> list[int]:
    return [input_dim, *hidden, output_dim]
