import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_layer_for, brute_same_cell, exact_knn
from pnapsac.core import DataSet
from pnapsac.neighborhood import (
    DEFAULT_DELTAS,
    GridConfigError,
    grid_build,
    kth_nearest_in_neighborhood,
    neighborhood_of_size,
    same_cell_neighbors,
)

SIZES = (640, 480, 640, 480)


def random_ds(rng, n, clustered=False):
    if clustered:
        centers = rng.uniform(0, 1, (5, 4)) * SIZES
        pts = centers[rng.integers(0, 5, n)] + rng.normal(0, 20, (n, 4))
        pts = np.clip(pts, 0, np.array(SIZES) - 1e-6)
    else:
        pts = rng.uniform(0, 1, (n, 4)) * SIZES
    return DataSet.from_arrays(pts, image_sizes=SIZES)


def test_default_layers():
    g = grid_build(random_ds(np.random.default_rng(0), 50))
    assert g.deltas == DEFAULT_DELTAS == (16, 8, 4, 2, 1)
    assert len(g.layers) == 5


def test_single_cell_on_coarsest_layer():
    ds = random_ds(np.random.default_rng(1), 77)
    g = grid_build(ds)
    assert len(g.layers[-1].cells) == 1
    for i in (0, 40, 76):
        assert sorted(same_cell_neighbors(g, 4, i)) == list(range(77))


def test_cell_index_example():
    ds = DataSet.from_arrays([[10, 10, 10, 10], [600, 10, 10, 10]], image_sizes=SIZES)
    g = grid_build(ds, (2, 1))
    assert tuple(g.layers[0].point_cell[0]) == (0, 0, 0, 0)
    assert tuple(g.layers[0].point_cell[1]) == (1, 0, 0, 0)


def test_boundary_coordinate_clamped():
    ds = DataSet.from_arrays([[640, 480, 640, 480], [0, 0, 0, 0]], image_sizes=SIZES)
    g = grid_build(ds, (4, 1))
    assert tuple(g.layers[0].point_cell[0]) == (3, 3, 3, 3)


def test_singleton_cell():
    ds = DataSet.from_arrays([[1, 1, 1, 1], [600, 400, 600, 400]], image_sizes=SIZES)
    g = grid_build(ds)
    assert list(same_cell_neighbors(g, 0, 0)) == [0]


@pytest.mark.parametrize("deltas", [(8, 8, 1), (4, 8, 1), (8, 4), (4, 0), ()])
def test_bad_deltas(deltas):
    with pytest.raises(GridConfigError):
        grid_build(random_ds(np.random.default_rng(0), 10), deltas)


def test_missing_sizes():
    with pytest.raises(GridConfigError):
        grid_build(DataSet.from_arrays(np.zeros((3, 4))))


def test_oracle_equality_on_random_datasets():
    rng = np.random.default_rng(2024)
    for trial in range(50):
        n = int(rng.integers(5, 500))
        ds = random_ds(rng, n, clustered=trial % 2 == 1)
        g = grid_build(ds)
        for i in rng.integers(0, n, 3):
            for li, d in enumerate(g.deltas):
                assert list(same_cell_neighbors(g, li, i)) == brute_same_cell(ds.points, SIZES, d, i)
            for required in (1, 2, 5, n // 2, n):
                members, li = neighborhood_of_size(g, i, max(1, required))
                assert li == brute_layer_for(ds.points, SIZES, g.deltas, i, max(1, required))
                assert len(members) >= max(1, required)


def test_layer_partitions():
    ds = random_ds(np.random.default_rng(3), 300, clustered=True)
    g = grid_build(ds)
    for layer in g.layers:
        allidx = np.sort(np.concatenate(list(layer.cells.values())))
        np.testing.assert_array_equal(allidx, np.arange(300))


def test_required_extremes():
    ds = random_ds(np.random.default_rng(4), 100)
    g = grid_build(ds)
    members, li = neighborhood_of_size(g, 5, 100)
    assert li == 4 and len(members) == 100
    _, li = neighborhood_of_size(g, 5, 1)
    assert li == 0


def test_kth_nearest_simple_and_tie():
    pts = [[100, 100, 100, 100], [101, 100, 100, 100], [99, 100, 100, 100], [130, 100, 100, 100]]
    g = grid_build(DataSet.from_arrays(pts, image_sizes=SIZES))
    # 1 and 2 are equidistant from 0: smaller index wins
    assert kth_nearest_in_neighborhood(g, 0, 1) == 1
    assert kth_nearest_in_neighborhood(g, 0, 2) == 2
    assert kth_nearest_in_neighborhood(g, 3, 1) == 1


def test_knn_matches_exact_when_cell_holds_true_neighbors():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(20):
        ds = random_ds(rng, int(rng.integers(20, 300)), clustered=True)
        g = grid_build(ds)
        for i in rng.integers(0, ds.n, 5):
            for k in (1, 3, 8):
                if k >= ds.n:
                    continue
                truth = exact_knn(ds.points, i, k)
                members, _ = neighborhood_of_size(g, i, k + 1)
                got = list(g.nearest(i, k))
                assert len(got) == k and i not in got
                if set(truth) <= set(members.tolist()):
                    assert got == truth
                    checked += 1
    assert checked > 50


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.integers(0, 10_000))
def test_determinism(n, seed):
    ds = random_ds(np.random.default_rng(seed), n)
    a, b = grid_build(ds), grid_build(ds)
    for la, lb in zip(a.layers, b.layers):
        assert la.cells.keys() == lb.cells.keys()
        for key in la.cells:
            np.testing.assert_array_equal(la.cells[key], lb.cells[key])
    for i in range(n):
        np.testing.assert_array_equal(a.nearest(i, n - 1), b.nearest(i, n - 1))
