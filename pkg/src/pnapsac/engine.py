"""Hypothesize-and-verify loop tying samplers, solvers, scoring, LO and stopping.

Samples never depend on scores, so they are drawn and evaluated in batches by
compiled kernels. Within a batch every sample is scored against the best value
known when the batch started (a sample cannot improve on it otherwise), and the
batch is then scanned in order so that improvements, local optimization and the
stopping rule happen exactly as in a one-sample-at-a-time loop.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _batch
from .core import DataSet, Model, ProblemKind, Score, dataset_validate
from .localopt import LOConfig, has_enough_support, local_optimize
from .neighborhood import DEFAULT_DELTAS, grid_build
from .samplers import (
    DEFAULT_T_N,
    NapsacSampler,
    ProgressiveNapsacSampler,
    ProsacSampler,
    UniformSampler,
)
from .scoring import FAIL, msac_score, residuals
from .solvers import fit_nonminimal
from .termination import TerminationConfig, required_for

log = logging.getLogger(__name__)

SAMPLERS = ("uniform", "prosac", "napsac", "pnapsac")
DEFAULT_THRESHOLD = {
    ProblemKind.LINE2D: 1.0,
    ProblemKind.HOMOGRAPHY: 3.2,
    ProblemKind.FUNDAMENTAL: 1.0,
}
DEFAULT_GAMMA = {"uniform": 0.0, "prosac": 0.0, "napsac": 0.1, "pnapsac": 0.1}

_KERNELS = {
    ProblemKind.LINE2D: _batch.evaluate_line,
    ProblemKind.HOMOGRAPHY: _batch.evaluate_homography,
    ProblemKind.FUNDAMENTAL: _batch.evaluate_fundamental,
}


@dataclass
class EngineConfig:
    problem: ProblemKind | str = ProblemKind.HOMOGRAPHY
    sampler: str = "pnapsac"
    threshold: Optional[float] = None
    confidence: float = 0.99
    gamma: Optional[float] = None
    max_iterations: int = 100_000
    min_iterations: int = 1
    seed: int = 0
    T_n: float = DEFAULT_T_N
    deltas: tuple[int, ...] = DEFAULT_DELTAS
    napsac_k: int = 20
    center_selector: str = "auto"  # auto | prosac | uniform
    lo: Optional[LOConfig] = field(default_factory=LOConfig)  # None disables LO
    final_refit: bool = True
    per_iteration_log: bool = False
    batch_size: int = 512

    def __post_init__(self):
        self.problem = ProblemKind.parse(self.problem)
        if self.sampler not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}; expected one of {SAMPLERS}")
        if self.center_selector not in ("auto", "prosac", "uniform"):
            raise ValueError(f"unknown center selector {self.center_selector!r}")
        if self.threshold is not None and self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    @property
    def tau(self) -> float:
        return DEFAULT_THRESHOLD[self.problem] if self.threshold is None else float(self.threshold)

    @property
    def termination(self) -> TerminationConfig:
        gamma = DEFAULT_GAMMA[self.sampler] if self.gamma is None else self.gamma
        return TerminationConfig(self.confidence, gamma, self.max_iterations, self.min_iterations)


@dataclass
class IterationRecord:
    iteration: int
    sample: tuple[int, ...]
    value: Optional[float]  # None when the sample gave no valid model


@dataclass
class RunReport:
    best_model: Optional[Model]
    best_score: Score
    iterations: int
    samples_rejected: int
    wall_time: float
    lo_invocations: int = 0
    per_iteration_log: Optional[list[IterationRecord]] = None
    sampler: str = ""
    seed: int = 0

    @property
    def success(self) -> bool:
        return self.best_model is not None

    @property
    def inlier_indices(self) -> np.ndarray:
        return self.best_score.inlier_indices


def _grid_dataset(ds: DataSet) -> DataSet:
    if ds.image_sizes is not None:
        return ds
    hi = ds.points.max(axis=0)
    sizes = (hi[0] + 1.0, hi[1] + 1.0, hi[2] + 1.0, hi[3] + 1.0)
    log.warning("no image sizes given; using the data extent %s for the grid", sizes)
    return DataSet.from_arrays(ds.points, ds.labels, ds.quality, sizes)


def make_sampler(cfg: EngineConfig, ds: DataSet):
    m = cfg.problem.sample_size
    if cfg.sampler == "uniform":
        return UniformSampler(ds.n, m)
    if cfg.sampler == "prosac":
        return ProsacSampler(ds.quality, m, cfg.T_n)
    grid = grid_build(_grid_dataset(ds), cfg.deltas)
    if cfg.sampler == "napsac":
        return NapsacSampler(grid, m, cfg.napsac_k)
    use_quality = cfg.center_selector == "prosac" or (
        cfg.center_selector == "auto" and ds.has_informative_quality
    )
    return ProgressiveNapsacSampler(grid, m, cfg.T_n, ds.quality if use_quality else None)


class _AllPoints:
    """The only possible sample when n == m."""

    def __init__(self, n):
        self.row = np.arange(n, dtype=np.int64)

    def draw_batch(self, rng, size):
        return np.tile(self.row, (size, 1))


def _empty_score() -> Score:
    return Score(0.0, 0, np.empty(0, dtype=np.int64))


def estimate(ds: DataSet, cfg: EngineConfig) -> RunReport:
    problem = cfg.problem
    m = problem.sample_size
    report = dataset_validate(ds, problem)
    if report.too_few_points:
        raise ValueError(report.message)
    if report.out_of_bounds:
        log.warning("%s", report.message)

    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    sampler = _AllPoints(ds.n) if ds.n == m else make_sampler(cfg, ds)
    kernel = _KERNELS[problem]
    x1 = np.ascontiguousarray(ds.x1)
    x2 = np.ascontiguousarray(ds.x2)
    tau = cfg.tau
    tau2 = tau * tau
    term = cfg.termination
    n = ds.n

    best_model: Optional[Model] = None
    best_score = _empty_score()
    best_value = 0.0  # a model must explain at least one point to count
    required = required_for(None, n, m, term)
    done = 0
    rejected = 0
    lo_calls = 0
    history: Optional[list[IterationRecord]] = [] if cfg.per_iteration_log else None

    cap = cfg.batch_size
    values = np.empty(cap)
    counts = np.empty(cap, dtype=np.int64)
    models = np.zeros((cap, 3, 3))
    status = np.empty(cap, dtype=np.int64)

    while done < max(required, term.min_iterations):
        size = min(cap, max(required, term.min_iterations) - done)
        samples = np.ascontiguousarray(sampler.draw_batch(rng, size), dtype=np.int64)
        bound = -1.0 if history is not None else best_value
        kernel(samples, x1, x2, tau2, bound, values, counts, models, status)

        # samples past the stopping point are discarded; this only happens in
        # the last batch, so stateful samplers are never rewound
        used = size
        last = 0
        hits = np.flatnonzero(values[:size] > best_value)
        for j in hits:
            if values[j] <= best_value:
                continue
            last = j + 1
            model = Model(problem, models[j, 0] if problem is ProblemKind.LINE2D else models[j])
            score = msac_score(model, ds, tau)
            best_model, best_score = model, score
            if cfg.lo is not None and has_enough_support(model, ds, tau, cfg.lo):
                lo_calls += 1
                best_model, best_score = local_optimize(model, ds, tau, cfg.lo, score)
            best_value = best_score.value
            required = required_for(best_score, n, m, term)
            if done + last >= max(required, term.min_iterations):
                break
        used = min(size, max(last, max(required, term.min_iterations) - done))
        rejected += int(np.count_nonzero(status[:used] != _batch.SCORED))
        if history is not None:
            for j in range(used):
                v = None if status[j] != _batch.SCORED else float(values[j])
                history.append(IterationRecord(done + j + 1, tuple(int(s) for s in samples[j]), v))
        done += used

    if cfg.final_refit and best_model is not None:
        inl = best_score.inlier_indices
        if len(inl) >= problem.nonminimal_size:
            refit = fit_nonminimal(problem, x1[inl], x2[inl])
            if refit is not None:
                s = msac_score(refit, ds, tau)
                if s.value >= best_score.value:
                    best_model, best_score = refit, s

    return RunReport(
        best_model=best_model,
        best_score=best_score,
        iterations=done,
        samples_rejected=rejected,
        wall_time=time.perf_counter() - t0,
        lo_invocations=lo_calls,
        per_iteration_log=history,
        sampler=cfg.sampler,
        seed=cfg.seed,
    )


@dataclass
class EvalRecord:
    available: bool
    recovered_fraction: float = float("nan")
    failure: bool = True
    error: float = float("nan")  # mean residual of the ground-truth inliers
    inlier_ratio: float = float("nan")  # fraction of all points the output calls inliers


def evaluate_against_gt(report: RunReport, ds: DataSet, inlier_label: int = 0,
                        failure_fraction: float = 0.5) -> EvalRecord:
    """Compare an estimate with ground-truth labels.

    A run fails when its inlier set recovers less than ``failure_fraction`` of
    the true inliers, or when it produced no model at all.
    """
    if not ds.has_labels:
        return EvalRecord(available=False)
    truth = ds.inlier_mask(inlier_label)
    n_true = int(truth.sum())
    if report.best_model is None:
        return EvalRecord(True, 0.0, True, float("nan"), 0.0)
    found = np.zeros(ds.n, dtype=bool)
    found[report.best_score.inlier_indices] = True
    recovered = float((found & truth).sum() / n_true) if n_true else 0.0
    err = float(residuals(report.best_model, ds.points[truth]).mean()) if n_true else float("nan")
    return EvalRecord(True, recovered, recovered < failure_fraction, err, found.sum() / ds.n)
