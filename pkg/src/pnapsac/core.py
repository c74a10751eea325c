"""Shared domain types: correspondences, datasets, models and scores.

A dataset is stored column-wise as numpy arrays; ``DataSet[i]`` gives back a
single :class:`Correspondence` when record-style access is more convenient.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

UNLABELED = -2
OUTLIER = -1


class ProblemKind(enum.Enum):
    LINE2D = "line2d"
    HOMOGRAPHY = "homography"
    FUNDAMENTAL = "fundamental"

    @property
    def sample_size(self) -> int:
        return _SAMPLE_SIZE[self]

    @property
    def nonminimal_size(self) -> int:
        return _NONMINIMAL_SIZE[self]

    @classmethod
    def parse(cls, value: "str | ProblemKind") -> "ProblemKind":
        if isinstance(value, cls):
            return value
        aliases = {"line": "line2d", "h": "homography", "f": "fundamental"}
        key = str(value).lower()
        return cls(aliases.get(key, key))


_SAMPLE_SIZE = {
    ProblemKind.LINE2D: 2,
    ProblemKind.HOMOGRAPHY: 4,
    ProblemKind.FUNDAMENTAL: 7,
}
_NONMINIMAL_SIZE = {
    ProblemKind.LINE2D: 2,
    ProblemKind.HOMOGRAPHY: 4,
    ProblemKind.FUNDAMENTAL: 8,
}


class DataError(ValueError):
    """Raised for malformed correspondence files or invalid datasets."""


class Correspondence(NamedTuple):
    u1: float
    v1: float
    u2: float
    v2: float
    gt_label: Optional[int] = None
    quality: float = 1.0


@dataclass(frozen=True, eq=False)
class DataSet:
    """An ordered, immutable set of point correspondences.

    ``points`` has shape (n, 4) with columns u1, v1, u2, v2. ``labels`` holds
    ground-truth structure ids (``OUTLIER`` for outliers, ``UNLABELED`` when
    unknown) and ``quality`` the prior inlier scores used by PROSAC.
    """

    points: np.ndarray
    labels: np.ndarray
    quality: np.ndarray
    image_sizes: Optional[tuple[float, float, float, float]] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 4)
        n = len(pts)
        labels = np.array(self.labels, dtype=np.int64).reshape(n)
        quality = np.array(self.quality, dtype=np.float64).reshape(n)
        if not np.all(np.isfinite(pts)):
            raise DataError("correspondence coordinates must be finite")
        for arr in (pts, labels, quality):
            arr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "quality", quality)
        if self.image_sizes is not None:
            sizes = tuple(float(s) for s in self.image_sizes)
            if len(sizes) != 4:
                raise DataError("image_sizes must be (w1, h1, w2, h2)")
            object.__setattr__(self, "image_sizes", sizes)

    @classmethod
    def from_arrays(cls, points, labels=None, quality=None, image_sizes=None) -> "DataSet":
        points = np.asarray(points, dtype=np.float64).reshape(-1, 4)
        n = len(points)
        if labels is None:
            labels = np.full(n, UNLABELED, dtype=np.int64)
        if quality is None:
            quality = np.ones(n)
        return cls(points, labels, quality, image_sizes)

    @classmethod
    def from_correspondences(
        cls, items: Sequence[Correspondence], image_sizes=None
    ) -> "DataSet":
        pts = [(c.u1, c.v1, c.u2, c.v2) for c in items]
        labels = [UNLABELED if c.gt_label is None else c.gt_label for c in items]
        quality = [c.quality for c in items]
        return cls(np.array(pts, dtype=np.float64).reshape(-1, 4), labels, quality, image_sizes)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int) -> Correspondence:
        u1, v1, u2, v2 = (float(x) for x in self.points[i])
        label = int(self.labels[i])
        return Correspondence(
            u1, v1, u2, v2, None if label == UNLABELED else label, float(self.quality[i])
        )

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def x1(self) -> np.ndarray:
        return self.points[:, :2]

    @property
    def x2(self) -> np.ndarray:
        return self.points[:, 2:]

    @property
    def has_labels(self) -> bool:
        return bool(np.any(self.labels != UNLABELED))

    @property
    def has_informative_quality(self) -> bool:
        return self.n > 0 and bool(np.ptp(self.quality) > 0)

    def inlier_mask(self, label: int = 0) -> np.ndarray:
        return self.labels == label


@dataclass(frozen=True, eq=False)
class Model:
    """Model parameters: a unit-normal line (a, b, c) or a 3x3 matrix."""

    kind: ProblemKind
    params: np.ndarray

    def __post_init__(self):
        shape = (3,) if self.kind is ProblemKind.LINE2D else (3, 3)
        params = np.array(self.params, dtype=np.float64).reshape(shape)
        params.setflags(write=False)
        object.__setattr__(self, "params", params)


@dataclass
class Score:
    """MSAC quality (higher is better) with the strict sub-threshold inlier set."""

    value: float = 0.0
    inlier_count: int = 0
    inlier_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


@dataclass
class ValidationReport:
    ok: bool
    too_few_points: bool = False
    out_of_bounds: list[int] = field(default_factory=list)
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _parse_number(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DataError(f"line {lineno}: cannot parse {token!r} as a number") from None
    if not math.isfinite(value):
        raise DataError(f"line {lineno}: non-finite value {token!r}")
    return value


def dataset_load(path) -> DataSet:
    """Read the whitespace-separated correspondence text format.

    Each data line holds ``u1 v1 u2 v2 [gt_label] [quality]``. Lines starting
    with ``#`` are comments, except ``# size w1 h1 w2 h2`` which declares the
    image sizes.
    """
    rows, labels, quality = [], [], []
    sizes = None
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "size":
                if len(parts) != 5:
                    raise DataError(f"line {lineno}: size header needs 4 values")
                sizes = tuple(_parse_number(p, lineno) for p in parts[1:])
            continue
        parts = line.split()
        if len(parts) not in (4, 5, 6):
            raise DataError(f"line {lineno}: expected 4, 5 or 6 fields, got {len(parts)}")
        values = [_parse_number(p, lineno) for p in parts]
        rows.append(values[:4])
        if len(values) >= 5:
            if values[4] != int(values[4]):
                raise DataError(f"line {lineno}: label must be an integer")
            labels.append(int(values[4]))
        else:
            labels.append(UNLABELED)
        quality.append(values[5] if len(values) == 6 else 1.0)
    points = np.array(rows, dtype=np.float64).reshape(-1, 4)
    return DataSet(points, labels, quality, sizes)


def dataset_save(ds: DataSet, path) -> None:
    """Write ``ds`` in the correspondence text format using round-trip precision."""
    lines = []
    if ds.image_sizes is not None:
        lines.append("# size " + " ".join(repr(float(s)) for s in ds.image_sizes))
    for row, label, q in zip(ds.points, ds.labels, ds.quality):
        fields = [repr(float(x)) for x in row]
        if label != UNLABELED or q != 1.0:
            # an unlabeled row with a quality keeps the UNLABELED sentinel
            fields += [str(int(label)), repr(float(q))]
        lines.append(" ".join(fields))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def dataset_validate(ds: DataSet, problem) -> ValidationReport:
    problem = ProblemKind.parse(problem)
    m = problem.sample_size
    messages = []
    too_few = ds.n < m
    if too_few:
        messages.append(f"{problem.value} needs at least {m} points, got {ds.n}")
    bad: list[int] = []
    if ds.image_sizes is not None and ds.n:
        w1, h1, w2, h2 = ds.image_sizes
        upper = np.array([w1, h1, w2, h2])
        outside = np.any((ds.points < 0) | (ds.points >= upper), axis=1)
        bad = [int(i) for i in np.flatnonzero(outside)]
        if bad:
            messages.append(f"{len(bad)} points outside the declared image bounds")
    return ValidationReport(
        ok=not too_few and not bad,
        too_few_points=too_few,
        out_of_bounds=bad,
        message="; ".join(messages),
    )
