"""Central finite-difference verification for layer backward passes."""

from __future__ import annotations

import numpy as np


def finite_diff_param(loss_fn, value: np.ndarray, eps: float = 1e-5,
                      max_entries: int = 80, rng: np.random.Generator | None = None):
    """Numeric gradient of a scalar loss wrt entries of `value` (in place).

    Checks at most `max_entries` coordinates (seeded subset for big tensors)
    and returns (flat_indices, numeric_grads).
    """
    flat = value.reshape(-1)
    n = flat.size
    if n <= max_entries:
        idx = np.arange(n)
    else:
        rng = rng or np.random.default_rng(0)
        idx = rng.choice(n, size=max_entries, replace=False)
        idx.sort()
    grads = np.empty(len(idx))
    for j, i in enumerate(idx):
        orig = flat[i]
        flat[i] = orig + eps
        hi = loss_fn()
        flat[i] = orig - eps
        lo = loss_fn()
        flat[i] = orig
        grads[j] = (hi - lo) / (2.0 * eps)
    return idx, grads


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))
