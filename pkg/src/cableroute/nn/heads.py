"""Distribution heads: squashed Gaussian over actions, categorical over primitives."""

from __future__ import annotations

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


class ActionOutOfRange(ValueError):
    pass


def clamp_log_std(log_std: np.ndarray, lo: float = -5.0, hi: float = 2.0):
    """Clamp with a pass-through mask for the backward pass."""
    mask = (log_std > lo) & (log_std < hi)
    return np.clip(log_std, lo, hi), mask


def tanh_gaussian_log_prob(mean: np.ndarray, log_std: np.ndarray,
                           action: np.ndarray) -> np.ndarray:
    """Per-sample log density of `action` in (-1,1)^d.

    Gaussian log-density at atanh(action) plus the tanh change-of-variables
    term -sum log(1 - a^2).
    """
    if np.any(np.abs(action) >= 1.0):
        raise ActionOutOfRange("log_prob requires action components strictly inside (-1,1)")
    u = np.arctanh(action)
    std = np.exp(log_std)
    z = (u - mean) / std
    gauss = -0.5 * z * z - log_std - 0.5 * LOG_2PI
    corr = np.log1p(-action * action)
    return (gauss - corr).sum(axis=-1)


def tanh_gaussian_nll(mean: np.ndarray, log_std: np.ndarray, action: np.ndarray):
    """Mean negative log likelihood and gradients wrt (mean, log_std)."""
    B = mean.shape[0]
    lp = tanh_gaussian_log_prob(mean, log_std, action)
    loss = -lp.mean()
    u = np.arctanh(action)
    std = np.exp(log_std)
    z = (u - mean) / std
    dmean = -z / std / B
    dlogstd = (1.0 - z * z) / B
    return loss, dmean, dlogstd


def tanh_gaussian_sample(mean: np.ndarray, log_std: np.ndarray,
                         rng: np.random.Generator) -> np.ndarray:
    eps = rng.standard_normal(mean.shape)
    return np.tanh(mean + np.exp(log_std) * eps)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean CE over the batch plus gradient wrt logits."""
    probs = softmax(logits)
    B = logits.shape[0]
    picked = probs[np.arange(B), labels]
    loss = float(-np.log(np.maximum(picked, 1e-300)).mean())
    dlogits = probs.copy()
    dlogits[np.arange(B), labels] -= 1.0
    return loss, dlogits / B
