"""Small statistics helpers for the Monte Carlo acceptance checks."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["dkw_epsilon", "ecdf_on_grid", "two_proportion_z"]


def dkw_epsilon(n: int, confidence: float = 0.99) -> float:
    """Dvoretzky-Kiefer-Wolfowitz band half-width for n samples.

    sup_t |ECDF(t) - F(t)| <= eps with the given confidence, where
    eps = sqrt(log(2/alpha) / (2n)).
    """
    alpha = 1.0 - confidence
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def ecdf_on_grid(samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Empirical cdf of `samples` evaluated at each grid point.

    Censored samples may be included as their cap value provided the cap
    exceeds max(grid); they then count correctly as 'not yet hit'.
    """
    samples = np.sort(np.asarray(samples, dtype=float))
    return np.searchsorted(samples, grid, side="right") / len(samples)


def two_proportion_z(k1: int, n1: int, k2: int, n2: int) -> float:
    """Two-sample proportion z statistic (pooled variance)."""
    p1, p2 = k1 / n1, k2 / n2
    pool = (k1 + k2) / (n1 + n2)
    se = math.sqrt(pool * (1.0 - pool) * (1.0 / n1 + 1.0 / n2))
    if se == 0.0:
        return 0.0
    return (p1 - p2) / se
