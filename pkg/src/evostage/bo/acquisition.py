"""Acquisition utilities for minimization; larger utility is better."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm

UCB_KAPPA = 2.0


def ucb(mu, sigma, kappa: float = UCB_KAPPA):
    """Lower-confidence-bound form: -mu + kappa*sigma."""
    return -np.asarray(mu, dtype=float) + kappa * np.asarray(sigma, dtype=float)


def ei(mu, sigma, best_f: float):
    """Expected improvement below best_f; sigma == 0 gives max(best_f - mu, 0)."""
    mu, sigma = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(sigma, dtype=float))
    imp = np.atleast_1d(best_f - mu)
    sigma = np.atleast_1d(sigma)
    out = np.maximum(imp, 0.0)
    pos = sigma > 0
    z = imp[pos] / sigma[pos]
    out[pos] = imp[pos] * norm.cdf(z) + sigma[pos] * norm.pdf(z)
    out = np.maximum(out, 0.0)
    return out if mu.ndim else float(out[0])


def builtin_acquisition(name: str, kappa: float = UCB_KAPPA):
    """Return a utility function taking (mu, sigma, best_f, stage_index, iteration)."""
    if name == "ei":
        return lambda mu, sigma, best_f, stage_index=0, iteration=0: ei(mu, sigma, best_f)
    if name == "ucb":
        return lambda mu, sigma, best_f, stage_index=0, iteration=0: ucb(mu, sigma, kappa)
    if name == "max_variance":
        return lambda mu, sigma, best_f, stage_index=0, iteration=0: np.asarray(sigma, dtype=float)
    raise ValueError(f"unknown acquisition {name!r}")
