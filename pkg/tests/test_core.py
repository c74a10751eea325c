import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnapsac.core import (
    OUTLIER,
    Correspondence,
    DataError,
    DataSet,
    ProblemKind,
    dataset_load,
    dataset_save,
    dataset_validate,
)


def write(tmp_path, text, name="pairs.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_identity_file(tmp_path):
    ds = dataset_load(write(tmp_path, "0 0 0 0\n1 0 1 0\n0 1 0 1\n1 1 1 1\n"))
    assert ds.n == 4
    np.testing.assert_array_equal(ds.x1, ds.x2)
    assert not ds.has_labels
    assert np.all(ds.quality == 1.0)


def test_six_field_line(tmp_path):
    ds = dataset_load(write(tmp_path, "10.5 20 30 40 1 0.9\n"))
    assert ds[0] == Correspondence(10.5, 20.0, 30.0, 40.0, 1, 0.9)


def test_five_fields_keeps_default_quality(tmp_path):
    ds = dataset_load(write(tmp_path, "1 2 3 4 -1\n"))
    assert ds[0].gt_label == OUTLIER
    assert ds[0].quality == 1.0


def test_loads_866_correspondences(tmp_path):
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 500, (866, 4))
    lines = ["# converted pair", "# size 1024 768 1024 768"]
    lines += [" ".join(repr(float(v)) for v in row) + " 0" for row in pts]
    ds = dataset_load(write(tmp_path, "\n".join(lines) + "\n"))
    assert ds.n == 866
    assert ds.image_sizes == (1024.0, 768.0, 1024.0, 768.0)


@pytest.mark.parametrize("bad,lineno", [
    ("0 0 0 0\n1 2 3\n", 2),
    ("0 0 0 0\n\n# c\n1 2 x 4\n", 4),
    ("1 2 3 4 0.5\n", 1),
    ("1 2 3 4 0 1 7\n", 1),
    ("1 2 nan 4\n", 1),
])
def test_parse_errors_name_the_line(tmp_path, bad, lineno):
    with pytest.raises(DataError, match=f"line {lineno}"):
        dataset_load(write(tmp_path, bad))


def test_comments_and_blank_lines_are_skipped(tmp_path):
    ds = dataset_load(write(tmp_path, "# hello\n\n1 2 3 4\n  # indented comment\n5 6 7 8\n"))
    assert ds.n == 2


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=4, max_size=4),
            st.integers(-2, 3),
            st.floats(0, 1),
        ),
        min_size=1,
        max_size=30,
    )
)
def test_save_load_round_trip_is_bit_exact(tmp_path_factory, rows):
    pts = np.array([r[0] for r in rows])
    labels = [r[1] for r in rows]
    quality = [r[2] for r in rows]
    ds = DataSet.from_arrays(pts, labels, quality, (640, 480, 641, 481))
    path = tmp_path_factory.mktemp("rt") / "ds.txt"
    dataset_save(ds, path)
    back = dataset_load(path)
    assert back.points.tobytes() == ds.points.tobytes()
    np.testing.assert_array_equal(back.labels, ds.labels)
    assert back.quality.tobytes() == ds.quality.tobytes()
    assert back.image_sizes == ds.image_sizes


def test_validate_boundary_counts():
    pts = np.full((7, 4), 5.0)
    assert dataset_validate(DataSet.from_arrays(pts), ProblemKind.FUNDAMENTAL)
    rep = dataset_validate(DataSet.from_arrays(pts[:6]), "f")
    assert not rep and rep.too_few_points


def test_validate_half_open_bounds():
    pts = np.array([[1, 1, 1, 1], [640, 0, 0, 0], [639.999, 479.999, 0, 0], [0, 0, 0, -0.5]], float)
    rep = dataset_validate(DataSet.from_arrays(pts, image_sizes=(640, 480, 640, 480)), "line")
    assert not rep.ok
    assert rep.out_of_bounds == [1, 3]


def test_dataset_is_immutable():
    ds = DataSet.from_arrays(np.zeros((3, 4)))
    with pytest.raises(ValueError):
        ds.points[0, 0] = 1.0


def test_nonfinite_coordinates_rejected():
    with pytest.raises(DataError):
        DataSet.from_arrays([[0, 0, np.inf, 0]])


def test_problem_constants():
    assert [k.sample_size for k in ProblemKind] == [2, 4, 7]
    assert ProblemKind.parse("H") is ProblemKind.HOMOGRAPHY
    assert ProblemKind.parse("f") is ProblemKind.FUNDAMENTAL
    with pytest.raises(ValueError):
        ProblemKind.parse("affine")
