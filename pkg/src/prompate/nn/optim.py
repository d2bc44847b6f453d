from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Adam:
    lr: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    def __post_init__(self):
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict:
        """Return updated copies of ``params``; entries without a gradient pass through."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        out = dict(params)
        for name, g in grads.items():
            m = self.m.get(name, 0.0) * b1 + (1 - b1) * g
            v = self.v.get(name, 0.0) * b2 + (1 - b2) * g * g
            self.m[name], self.v[name] = m, v
            m_hat = m / (1 - b1 ** self.t)
            v_hat = v / (1 - b2 ** self.t)
            out[name] = params[name] - self.lr * m_hat / (np.sqrt(v_hat) + self.eps_hat)
        return out
