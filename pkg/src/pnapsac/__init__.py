"""Robust model fitting with progressive local sampling.

Typical use::

    from pnapsac import EngineConfig, dataset_load, estimate
    report = estimate(dataset_load("pairs.txt"), EngineConfig(problem="h", sampler="pnapsac"))
"""

from .core import (
    OUTLIER,
    UNLABELED,
    Correspondence,
    DataError,
    DataSet,
    Model,
    ProblemKind,
    Score,
    ValidationReport,
    dataset_load,
    dataset_save,
    dataset_validate,
)
from .engine import EngineConfig, EvalRecord, RunReport, estimate, evaluate_against_gt
from .localopt import LOConfig, local_optimize
from .neighborhood import MultiLayerGrid, grid_build
from .scoring import msac_score, residual, residuals
from .termination import (
    TerminationConfig,
    required_iterations,
    required_iterations_relaxed,
    should_terminate,
)

__version__ = "0.1.0"
