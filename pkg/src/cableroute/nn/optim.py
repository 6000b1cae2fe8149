"""Adam with decoupled weight decay, plus the cosine/warm-up LR schedule."""

from __future__ import annotations

import math

import numpy as np


class Adam:
    """Moments are keyed by parameter name; frozen params are never touched."""

    def __init__(self, params: dict, base_lr: float = 3e-4, weight_decay: float = 0.05,
                 beta1: float = 0.9, beta2: float = 0.99, eps: float = 1e-8):
        self.params = params
        self.base_lr = base_lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(p.value) for k, p in params.items() if p.trainable}
        self.v = {k: np.zeros_like(p.value) for k, p in params.items() if p.trainable}

    def step(self, lr: float | None = None):
        lr = self.base_lr if lr is None else lr
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name in self.m:
            p = self.params[name]
            g = p.grad
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            p.value -= lr * (m_hat / (np.sqrt(v_hat) + self.eps)
                             + self.weight_decay * p.value)

    def zero_grad(self):
        for p in self.params.values():
            p.grad[:] = 0.0


def cosine_lr(step: int, total: int, base: float, warmup: int = 0) -> float:
    """Linear warm-up over `warmup` steps then cosine decay from base to 0."""
    if total <= 0:
        return base
    if warmup > 0 and step < warmup:
        return base * step / warmup
    span = max(total - warmup, 1)
    frac = min(max(step - warmup, 0) / span, 1.0)
    return 0.5 * base * (1.0 + math.cos(math.pi * frac))
