import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import apply_h, random_homography
from pnapsac.bench import SceneSpec, generate_scene_with_model
from pnapsac.core import DataSet, Model, ProblemKind
from pnapsac.localopt import (
    LocalOptimizationSkipped,
    LOConfig,
    has_enough_support,
    local_optimize,
    threshold_schedule,
)
from pnapsac.scoring import msac_score
from pnapsac.solvers import fit_homography_4pt


def test_schedule():
    th = threshold_schedule(3.2, LOConfig())
    assert len(th) == 4
    assert th[0] == pytest.approx(12.8)
    assert th[-1] == 3.2
    assert np.all(np.diff(th) < 0)
    assert list(threshold_schedule(2.0, LOConfig(max_iters=1))) == [2.0]


def test_optimal_model_is_kept(rng):
    H = random_homography(rng)
    x1 = rng.uniform(0, 600, (60, 2))
    ds = DataSet.from_arrays(np.hstack((x1, apply_h(H, x1))))
    m = Model(ProblemKind.HOMOGRAPHY, H)
    s = msac_score(m, ds, 3.2)
    m2, s2 = local_optimize(m, ds, 3.2)
    assert s2.value == pytest.approx(s.value, abs=1e-9)
    assert s2.value >= s.value
    assert np.abs(m2.params - m.params).max() < 1e-12 or np.abs(m2.params + m.params).max() < 1e-12


def test_precondition():
    ds = DataSet.from_arrays(np.array([[0, 0, 100, 100]] * 3 + [[5, 5, 300, 1]], float))
    m = Model(ProblemKind.HOMOGRAPHY, np.eye(3))
    assert not has_enough_support(m, ds, 3.2, LOConfig())
    with pytest.raises(LocalOptimizationSkipped):
        local_optimize(m, ds, 3.2)


def test_degenerate_refit_returns_best_so_far():
    # every point on one spot: the least-squares line is undefined
    ds = DataSet.from_arrays(np.tile([5.0, 5.0, 5.0, 5.0], (10, 1)))
    m = Model(ProblemKind.LINE2D, [0.0, 1.0, -5.0])
    m2, s2 = local_optimize(m, ds, 1.0)
    assert m2 is m
    assert s2.value == msac_score(m, ds, 1.0).value


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.3, 3.0))
def test_never_worse(seed, sigma):
    rng = np.random.default_rng(seed)
    H = random_homography(rng)
    x1 = rng.uniform(0, 600, (80, 2))
    x2 = apply_h(H, x1) + rng.normal(0, sigma, x1.shape)
    x2[60:] = rng.uniform(0, 600, (20, 2))
    ds = DataSet.from_arrays(np.hstack((x1, x2)))
    m = fit_homography_4pt(x1[:4], x2[:4])
    if m is None or not has_enough_support(m, ds, 3.2, LOConfig()):
        return
    s = msac_score(m, ds, 3.2)
    _, s2 = local_optimize(m, ds, 3.2, score=s)
    assert s2.value >= s.value


def _lo_trials(pick):
    """Run local optimization on 1000 seeded minimal models; (trials, strict gains)."""
    strict = applied = 0
    for seed in range(1000):
        ds, _ = generate_scene_with_model(SceneSpec("localized-h", noise_sigma=1.0, seed=seed))
        rng = np.random.default_rng(seed)
        idx = pick(ds, rng, np.flatnonzero(ds.labels == 0))
        m = fit_homography_4pt(ds.x1[idx], ds.x2[idx])
        if m is None or not has_enough_support(m, ds, 3.2, LOConfig()):
            continue
        s = msac_score(m, ds, 3.2)
        _, s2 = local_optimize(m, ds, 3.2, score=s)
        assert s2.value >= s.value
        applied += 1
        strict += s2.value > s.value
    return applied, strict


def test_improves_models_from_the_local_structure():
    """Minimal models from four inliers of a localized structure, noise 1 px.

    Frozen from a seeded run of this same simulation: 954 of 1000 improve
    strictly; the bar is 90%.
    """
    applied, strict = _lo_trials(lambda ds, rng, inl: rng.choice(inl, 4, replace=False))
    assert (applied, strict) == (1000, 954)
    assert strict / applied >= 0.9


def test_tight_samples_often_cannot_improve():
    """Center plus 3 of its 10 nearest inliers: frozen at 869 strict gains of 1000.

    Such models are sometimes supported only by their own four points at the
    widest threshold, and refitting those four points reproduces the model.
    """
    def pick(ds, rng, inl):
        c = rng.choice(inl)
        d = np.linalg.norm(ds.points[inl] - ds.points[c], axis=1)
        return np.r_[c, rng.choice(inl[np.argsort(d)[1:11]], 3, replace=False)]

    assert _lo_trials(pick) == (1000, 869)
