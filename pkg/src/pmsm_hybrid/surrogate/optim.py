"""First-order optimizers with bias correction, updating parameter lists in place."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError

OPTIMIZERS = ("adam", "adamax", "adagrad", "nadam")


class Optimizer:
    def __init__(self, kind: str, params: list[np.ndarray], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        if kind not in OPTIMIZERS:
            raise ConfigurationError(f"optimizer must be one of {OPTIMIZERS}")
        self.kind = kind
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = epsilon
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        t, b1, b2, lr, eps = self.t, self.beta1, self.beta2, self.lr, self.eps
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if self.kind == "adagrad":
                v += g * g
                p -= lr * g / (np.sqrt(v) + eps)
                continue
            m *= b1
            m += (1.0 - b1) * g
            if self.kind == "adamax":
                np.maximum(b2 * v, np.abs(g), out=v)
                p -= (lr / (1.0 - b1**t)) * m / (v + eps)
                continue
            v *= b2
            v += (1.0 - b2) * g * g
            v_hat = v / (1.0 - b2**t)
            if self.kind == "adam":
                m_hat = m / (1.0 - b1**t)
            else:
                # Nesterov look-ahead on the bias-corrected first moment
                m_hat = b1 * m / (1.0 - b1 ** (t + 1)) + (1.0 - b1) * g / (1.0 - b1**t)
            p -= lr * m_hat / (np.sqrt(v_hat) + eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"t": np.array([self.t])}
        for k, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"m{k:03d}"] = m
            out[f"v{k:03d}"] = v
        return out
