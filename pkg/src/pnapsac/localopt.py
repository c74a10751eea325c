"""Iterated least-squares refinement of a promising model.

Starting from a wide inlier threshold, each round refits the model to the
points inside the current threshold and shrinks the threshold geometrically
towards the scoring threshold. The best-scoring model seen is kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataSet, Model, Score
from .scoring import msac_score, squared_residuals
from .solvers import fit_nonminimal


class LocalOptimizationSkipped(ValueError):
    """Raised when the model has too little support to be refit."""


@dataclass(frozen=True)
class LOConfig:
    max_iters: int = 4
    multiplier: float = 4.0
    lo_kind: str = "iterated-ls"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.multiplier < 1.0:
            raise ValueError("multiplier must be >= 1")
        if self.lo_kind != "iterated-ls":
            raise ValueError(f"unsupported local optimization: {self.lo_kind!r}")


def threshold_schedule(tau: float, cfg: LOConfig) -> np.ndarray:
    if cfg.max_iters == 1:
        return np.array([float(tau)])
    j = np.arange(cfg.max_iters)
    return tau * cfg.multiplier ** (1.0 - j / (cfg.max_iters - 1))


def has_enough_support(model: Model, ds: DataSet, tau: float, cfg: LOConfig) -> bool:
    r2 = squared_residuals(model, ds)
    wide = (cfg.multiplier * tau) ** 2
    return int(np.count_nonzero(r2 < wide)) >= model.kind.nonminimal_size


def local_optimize(model: Model, ds: DataSet, tau: float, cfg: LOConfig = LOConfig(),
                   score: Score | None = None) -> tuple[Model, Score]:
    """Refine ``model``; the returned score is never below the input score."""
    if not has_enough_support(model, ds, tau, cfg):
        raise LocalOptimizationSkipped("too few points within the widest threshold")
    best_model = model
    best_score = score if score is not None else msac_score(model, ds, tau)
    x1, x2 = ds.x1, ds.x2
    current = model
    for theta in threshold_schedule(tau, cfg):
        inl = squared_residuals(current, ds) < theta * theta
        if np.count_nonzero(inl) < model.kind.nonminimal_size:
            break
        refit = fit_nonminimal(model.kind, x1[inl], x2[inl])
        if refit is None:
            break
        current = refit
        s = msac_score(current, ds, tau)
        if s.value > best_score.value:
            best_model, best_score = current, s
    return best_model, best_score
