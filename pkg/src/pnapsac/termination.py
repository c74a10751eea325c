"""Adaptive stopping: how many samples are needed to see one all-inlier sample."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Score


@dataclass(frozen=True)
class TerminationConfig:
    mu: float = 0.99
    gamma: float = 0.0  # assumed extra inlier ratio inside local neighborhoods
    max_iterations: int = 100_000
    min_iterations: int = 1

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ValueError("confidence mu must lie in (0, 1)")
        if self.gamma < 0.0:
            raise ValueError("gamma must be non-negative")
        if not 1 <= self.min_iterations <= self.max_iterations:
            raise ValueError("need 1 <= min_iterations <= max_iterations")


def required_iterations(eta: float, m: int, mu: float = 0.99,
                        min_iterations: int = 1, max_iterations: int = 100_000) -> int:
    """ceil(log(1 - mu) / log(1 - eta^m)), clamped to [min_iterations, max_iterations]."""
    if not 0.0 < mu < 1.0:
        raise ValueError("confidence mu must lie in (0, 1)")
    if m < 1:
        raise ValueError("sample size must be positive")
    if eta <= 0.0:
        return max_iterations
    if eta >= 1.0:
        return min_iterations
    p = eta ** m
    if p <= 0.0:
        return max_iterations
    t = math.log1p(-mu) / math.log1p(-p)
    if not math.isfinite(t) or t >= max_iterations:
        return max_iterations
    return max(min_iterations, min(max_iterations, math.ceil(t)))


def required_iterations_relaxed(eta: float, gamma: float, m: int, mu: float = 0.99,
                                min_iterations: int = 1, max_iterations: int = 100_000) -> int:
    """Same rule with the inlier ratio raised by ``gamma`` (capped at 1).

    With no inliers at all the bonus is not applied: nothing has been found yet.
    """
    if gamma < 0.0:
        raise ValueError("gamma must be non-negative")
    if eta <= 0.0:
        return max_iterations
    return required_iterations(min(1.0, eta + gamma), m, mu, min_iterations, max_iterations)


def required_for(score: Score | None, n: int, m: int, cfg: TerminationConfig) -> int:
    eta = 0.0 if score is None else score.inlier_count / n
    return required_iterations_relaxed(eta, cfg.gamma, m, cfg.mu,
                                       cfg.min_iterations, cfg.max_iterations)


def should_terminate(best: Score | None, n: int, iterations_done: int,
                     cfg: TerminationConfig, m: int) -> bool:
    if iterations_done >= cfg.max_iterations:
        return True
    return iterations_done >= required_for(best, n, m, cfg)
