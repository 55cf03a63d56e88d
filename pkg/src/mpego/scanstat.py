"""Expectation-based Bernoulli likelihood-ratio scan statistic.

For a subset with ``n_s`` rows, ``sum_y`` of them generated, and a pooled
generated fraction ``e_g``, the score is

    max_q  log(q) * sum_y - n_s * log(1 - e_g + q * e_g)

with ``q`` restricted to ``[1, q_max]`` when scanning for over-generation and
``[q_min, 1]`` for under-generation.
"""
from __future__ import annotations

import math

Q_MAX = 1e6
Q_MIN = 1e-6
DIRECTIONS = ("over", "under")


class ScanError(ValueError):
    pass


def _check(n_s: int, sum_y: int, e_g: float, direction: str) -> None:
    if not 0.0 < e_g < 1.0:
        raise ScanError(f"e_g must lie strictly between 0 and 1, got {e_g}")
    if direction not in DIRECTIONS:
        raise ScanError(f"direction must be 'over' or 'under', got {direction!r}")
    if n_s <= 0 or not 0 <= sum_y <= n_s:
        raise ScanError(f"need n_s > 0 and 0 <= sum_y <= n_s (got n_s={n_s}, sum_y={sum_y})")


def q_hat(n_s: int, sum_y: int, e_g: float, over: bool,
          q_min: float = Q_MIN, q_max: float = Q_MAX) -> float:
    # the same arithmetic is mirrored in _ascent_ext.pyx; keep them in step
    if sum_y == n_s:
        q = math.inf
    else:
        q = (sum_y * (1.0 - e_g)) / ((n_s - sum_y) * e_g)
    if over:
        return min(max(q, 1.0), q_max)
    return min(max(q, q_min), 1.0)


def score_value(n_s: int, sum_y: int, e_g: float, over: bool,
                q_min: float = Q_MIN, q_max: float = Q_MAX) -> float:
    """Score at the clamped maximizer; 0 for an empty subset."""
    if n_s <= 0:
        return 0.0
    q = q_hat(n_s, sum_y, e_g, over, q_min, q_max)
    s = math.log(q) * sum_y - n_s * math.log(1.0 - e_g + q * e_g)
    return s if s > 0.0 else 0.0


def score_at(q: float, n_s: int, sum_y: int, e_g: float) -> float:
    """Log-likelihood ratio at a fixed q (no maximization)."""
    return math.log(q) * sum_y - n_s * math.log(1.0 - e_g + q * e_g)


def mle_q(n_s: int, sum_y: int, e_g: float, direction: str = "over",
          q_min: float = Q_MIN, q_max: float = Q_MAX) -> float:
    _check(n_s, sum_y, e_g, direction)
    return q_hat(n_s, sum_y, e_g, direction == "over", q_min, q_max)


def bernoulli_score(n_s: int, sum_y: int, e_g: float, direction: str = "over",
                    q_min: float = Q_MIN, q_max: float = Q_MAX) -> tuple[float, float]:
    """Return ``(score, q)`` for one subset."""
    _check(n_s, sum_y, e_g, direction)
    over = direction == "over"
    return score_value(n_s, sum_y, e_g, over, q_min, q_max), q_hat(n_s, sum_y, e_g, over, q_min, q_max)
