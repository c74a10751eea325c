"""Synthetic scenes and the sampler benchmark.

Scenes carry ground-truth labels (0 inlier, -1 outlier) and a per-point
quality that is noisily correlated with the true residual, which is what a
descriptor-ratio score would look like. Scene and engine seeds are shared
across samplers so every sampler sees the same data in run r.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import OUTLIER, DataSet, Model, ProblemKind
from .engine import EngineConfig, estimate, evaluate_against_gt
from .scoring import residuals

SCENE_KINDS = ("line2d", "localized-h", "global-h", "localized-f", "global-f")
GAMMA_GRID = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3)
REPORT_COLUMNS = ("scene", "sampler", "error", "inlier%", "fail%", "time_ms", "iters")
MAX_GEOMETRY_RETRIES = 100


class SceneError(RuntimeError):
    pass


def scene_problem(kind: str) -> ProblemKind:
    if kind == "line2d":
        return ProblemKind.LINE2D
    if kind.endswith("-h"):
        return ProblemKind.HOMOGRAPHY
    if kind.endswith("-f"):
        return ProblemKind.FUNDAMENTAL
    raise ValueError(f"unknown scene kind {kind!r}; expected one of {SCENE_KINDS}")


@dataclass(frozen=True)
class SceneSpec:
    kind: str = "localized-h"
    n_inliers: int = 100
    n_outliers: int = 400
    noise_sigma: float = 0.5
    cluster_extent: Optional[float] = None  # image-area fraction of the inlier region
    image_size: tuple[int, int] = (640, 480)
    seed: int = 0
    focal: float = 600.0

    def __post_init__(self):
        scene_problem(self.kind)
        if self.n_inliers < scene_problem(self.kind).nonminimal_size:
            raise ValueError("too few inliers for this scene kind")
        if self.n_outliers < 0 or self.noise_sigma < 0:
            raise ValueError("counts and noise must be non-negative")
        if self.extent is not None and not 0.0 < self.extent <= 1.0:
            raise ValueError("cluster_extent must lie in (0, 1]")

    @property
    def extent(self) -> float:
        if self.cluster_extent is not None:
            return self.cluster_extent
        return 1.0 if self.kind.startswith("global") else 0.1

    @property
    def problem(self) -> ProblemKind:
        return scene_problem(self.kind)


def _rotation(rotvec) -> np.ndarray:
    rotvec = np.asarray(rotvec, dtype=np.float64)
    angle = np.linalg.norm(rotvec)
    if angle == 0:
        return np.eye(3)
    k = rotvec / angle
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K


def _skew(t) -> np.ndarray:
    return np.array([[0, -t[2], t[1]], [t[2], 0, -t[0]], [-t[1], t[0], 0]])


def _region(rng, w, h, extent):
    """Random axis-aligned box covering ``extent`` of the image area."""
    s = math.sqrt(extent)
    bw, bh = w * s, h * s
    x0 = rng.uniform(0, w - bw)
    y0 = rng.uniform(0, h - bh)
    return x0, y0, bw, bh


def _inside(p, w, h):
    return (p[:, 0] >= 0) & (p[:, 0] < w) & (p[:, 1] >= 0) & (p[:, 1] < h)


def _homography_pairs(spec, rng, K):
    w, h = spec.image_size
    Kinv = np.linalg.inv(K)
    R = _rotation(rng.normal(0, 0.1, 3))
    t = rng.normal(0, 0.3, 3)
    normal = _rotation(rng.normal(0, 0.3, 3)) @ np.array([0.0, 0.0, 1.0])
    d = rng.uniform(4.0, 8.0)
    H = K @ (R + np.outer(t, normal) / d) @ Kinv
    x0, y0, bw, bh = _region(rng, w, h, spec.extent)
    cand = np.column_stack((rng.uniform(x0, x0 + bw, 20 * spec.n_inliers),
                            rng.uniform(y0, y0 + bh, 20 * spec.n_inliers)))
    rays = np.column_stack((cand, np.ones(len(cand)))) @ Kinv.T
    depth = d / (rays @ normal)
    X = rays * depth[:, None]
    X2 = X @ R.T + t
    p2 = X2[:, :2] / X2[:, 2:]
    p2 = p2 @ K[:2, :2].T + K[:2, 2]
    ok = (depth > 0) & (X2[:, 2] > 0) & _inside(p2, w, h)
    return cand[ok], p2[ok], Model(ProblemKind.HOMOGRAPHY, H)


def _fundamental_pairs(spec, rng, K):
    w, h = spec.image_size
    Kinv = np.linalg.inv(K)
    R = _rotation(rng.normal(0, 0.1, 3))
    direction = rng.normal(0, 1, 3)
    direction[2] *= 0.3
    center = direction / np.linalg.norm(direction)
    t = -R @ center
    x0, y0, bw, bh = _region(rng, w, h, spec.extent)
    cand = np.column_stack((rng.uniform(x0, x0 + bw, 20 * spec.n_inliers),
                            rng.uniform(y0, y0 + bh, 20 * spec.n_inliers)))
    depth = rng.uniform(4.0, 8.0, len(cand))
    X = (np.column_stack((cand, np.ones(len(cand)))) @ Kinv.T) * depth[:, None]
    X2 = X @ R.T + t
    p2 = X2[:, :2] / X2[:, 2:]
    p2 = p2 @ K[:2, :2].T + K[:2, 2]
    ok = (X2[:, 2] > 0.1) & _inside(p2, w, h)
    F = Kinv.T @ _skew(t) @ R @ Kinv
    return cand[ok], p2[ok], Model(ProblemKind.FUNDAMENTAL, F)


def _line_points(spec, rng):
    w, h = spec.image_size
    length = math.sqrt(spec.extent) * math.hypot(w, h)
    theta = rng.uniform(0, math.pi)
    d = np.array([math.cos(theta), math.sin(theta)])
    c = np.array([rng.uniform(0, w), rng.uniform(0, h)])
    s = rng.uniform(-length / 2, length / 2, 20 * spec.n_inliers)
    cand = c + s[:, None] * d
    ok = _inside(cand, w, h)
    normal = np.array([-d[1], d[0]])
    return cand[ok], cand[ok], Model(ProblemKind.LINE2D, np.append(normal, -normal @ c))


def generate_scene_with_model(spec: SceneSpec) -> tuple[DataSet, Model]:
    rng = np.random.default_rng(spec.seed)
    w, h = spec.image_size
    K = np.array([[spec.focal, 0, w / 2], [0, spec.focal, h / 2], [0, 0, 1.0]])
    for _ in range(MAX_GEOMETRY_RETRIES):
        if spec.problem is ProblemKind.HOMOGRAPHY:
            a, b, gt = _homography_pairs(spec, rng, K)
        elif spec.problem is ProblemKind.FUNDAMENTAL:
            a, b, gt = _fundamental_pairs(spec, rng, K)
        else:
            a, b, gt = _line_points(spec, rng)
        if len(a) >= spec.n_inliers:
            break
    else:
        raise SceneError(f"could not place {spec.n_inliers} inliers for {spec.kind}")

    a, b = a[:spec.n_inliers], b[:spec.n_inliers]
    hi = np.array([w, h]) - 1e-6
    if spec.problem is ProblemKind.LINE2D:
        a = np.clip(a + rng.normal(0, spec.noise_sigma, a.shape), 0, hi)
        b = a
    else:
        a = np.clip(a + rng.normal(0, spec.noise_sigma, a.shape), 0, hi)
        b = np.clip(b + rng.normal(0, spec.noise_sigma, b.shape), 0, hi)
    o1 = rng.uniform(0, 1, (spec.n_outliers, 2)) * [w, h]
    o2 = o1 if spec.problem is ProblemKind.LINE2D else rng.uniform(0, 1, (spec.n_outliers, 2)) * [w, h]

    points = np.vstack((np.hstack((a, b)), np.hstack((o1, o2))))
    labels = np.concatenate((np.zeros(len(a), dtype=np.int64),
                             np.full(spec.n_outliers, OUTLIER, dtype=np.int64)))
    r = residuals(gt, points)
    scale = 3.0 * spec.noise_sigma + 3.0
    quality = np.clip(1.0 - r / scale + rng.normal(0, 0.15, len(r)), 0.0, 1.0)
    perm = rng.permutation(len(points))
    ds = DataSet.from_arrays(points[perm], labels[perm], quality[perm], (w, h, w, h))
    return ds, gt


def generate_scene(spec: SceneSpec) -> DataSet:
    return generate_scene_with_model(spec)[0]


# -- benchmark -------------------------------------------------------------

RUN_FIELDS = ("scene", "sampler", "run", "seed", "iterations", "samples_rejected",
              "lo_invocations", "inlier_ratio", "recovered", "failure", "error", "time_ms")


@dataclass
class RunRow:
    scene: str
    sampler: str
    run: int
    seed: int
    iterations: int
    samples_rejected: int
    lo_invocations: int
    inlier_ratio: float
    recovered: float
    failure: bool
    error: float
    time_ms: float


@dataclass
class AggregateStats:
    scene: str
    sampler: str
    runs: int
    error_mean: float
    error_median: float
    inlier_pct_mean: float
    inlier_pct_median: float
    fail_pct: float
    time_ms_mean: float
    time_ms_median: float
    iters_mean: float
    iters_median: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AggregateStats":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def _one_run(spec: SceneSpec, sampler: str, run: int, seed: int, overrides: dict) -> RunRow:
    ds = generate_scene(replace(spec, seed=seed))
    cfg = EngineConfig(problem=spec.problem, sampler=sampler, seed=seed, **overrides)
    rep = estimate(ds, cfg)
    ev = evaluate_against_gt(rep, ds)
    return RunRow(spec.kind, sampler, run, seed, rep.iterations, rep.samples_rejected,
                  rep.lo_invocations, float(ev.inlier_ratio), float(ev.recovered_fraction),
                  bool(ev.failure), float(ev.error), rep.wall_time * 1e3)


def _job(args):
    return _one_run(*args)


def run_benchmark(scenes: Sequence[SceneSpec], samplers: Sequence[str], runs: int,
                  base_seed: int = 0, workers: int = 1, **engine_overrides) -> list[RunRow]:
    """Run every sampler ``runs`` times on every scene kind.

    Run r uses seed ``base_seed + r`` for both the scene and the engine.
    Rows come back sorted by (scene order, sampler order, run) whatever
    ``workers`` is.
    """
    if runs < 1:
        raise ValueError("runs must be positive")
    jobs = [(spec, s, r, base_seed + r, engine_overrides)
            for spec in scenes for s in samplers for r in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_job, jobs, chunksize=4))
    return [_job(j) for j in jobs]


def _nanstat(f, x):
    x = np.asarray(x, dtype=np.float64)
    return float(f(x[~np.isnan(x)])) if np.any(~np.isnan(x)) else float("nan")


def aggregate(rows: Iterable[RunRow]) -> list[AggregateStats]:
    groups: dict[tuple[str, str], list[RunRow]] = {}
    for row in rows:
        groups.setdefault((row.scene, row.sampler), []).append(row)
    out = []
    for (scene, sampler), rs in groups.items():
        err = [r.error for r in rs]
        inl = [100.0 * r.inlier_ratio for r in rs]
        tms = [r.time_ms for r in rs]
        its = [r.iterations for r in rs]
        out.append(AggregateStats(
            scene, sampler, len(rs),
            _nanstat(np.mean, err), _nanstat(np.median, err),
            float(np.mean(inl)), float(np.median(inl)),
            100.0 * float(np.mean([r.failure for r in rs])),
            float(np.mean(tms)), float(np.median(tms)),
            float(np.mean(its)), float(np.median(its)),
        ))
    return out


def write_runs_csv(rows: Sequence[RunRow], path, include_timing: bool = True) -> None:
    """Per-run CSV. Timing is the last column so it can be dropped for diffs."""
    cols = RUN_FIELDS if include_timing else RUN_FIELDS[:-1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            d = asdict(row)
            w.writerow([repr(d[c]) if isinstance(d[c], float) else int(d[c])
                        if isinstance(d[c], bool) else d[c] for c in cols])


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.3f}"


def _summary_row(s: AggregateStats) -> list:
    return [s.scene, s.sampler, s.error_mean, s.inlier_pct_mean, s.fail_pct,
            s.time_ms_mean, s.iters_mean]


def emit_report(stats: Sequence[AggregateStats], fmt: str = "markdown", path=None) -> str:
    if not stats:
        raise ValueError("nothing to report: no aggregated statistics")
    if fmt == "json":
        text = json.dumps([s.to_dict() for s in stats], indent=2)
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for s in stats:
            w.writerow([v if isinstance(v, str) else repr(float(v)) for v in _summary_row(s)])
        text = buf.getvalue()
    elif fmt == "markdown":
        lines = ["| " + " | ".join(REPORT_COLUMNS) + " |",
                 "|" + "---|" * len(REPORT_COLUMNS)]
        for s in stats:
            cells = [v if isinstance(v, str) else _fmt(v) for v in _summary_row(s)]
            lines.append("| " + " | ".join(cells) + " |")
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_report_json(path_or_text) -> list[AggregateStats]:
    text = path_or_text
    if not str(path_or_text).lstrip().startswith("["):
        with open(path_or_text) as fh:
            text = fh.read()
    return [AggregateStats.from_dict(d) for d in json.loads(text)]


# -- gamma sweep ------------------------------------------------------------


@dataclass
class GammaPoint:
    gamma: float
    error: float
    fail_pct: float
    time_ms: float
    iters: float
    rel_error: float = float("nan")
    rel_fail: float = float("nan")
    rel_time: float = float("nan")
    rel_iters: float = float("nan")


def _relative(values):
    v = np.asarray(values, dtype=np.float64)
    top = np.nanmax(v) if np.any(~np.isnan(v)) else float("nan")
    if not top or math.isnan(top):
        return [float("nan") if math.isnan(x) else 0.0 for x in v]
    return list(v / top)


def sweep_gamma(spec: SceneSpec, gammas: Sequence[float] = GAMMA_GRID, runs: int = 100,
                base_seed: int = 0, sampler: str = "pnapsac", **engine_overrides) -> list[GammaPoint]:
    """Average error, failure rate, time and iterations per gamma, plus each
    curve divided by its maximum over the sweep."""
    points = []
    for g in gammas:
        rows = run_benchmark([spec], [sampler], runs, base_seed, gamma=float(g), **engine_overrides)
        st = aggregate(rows)[0]
        points.append(GammaPoint(float(g), st.error_mean, st.fail_pct, st.time_ms_mean, st.iters_mean))
    for name in ("error", "fail", "time", "iters"):
        attr = "fail_pct" if name == "fail" else ("time_ms" if name == "time" else name)
        rel = _relative([getattr(p, attr) for p in points])
        for p, r in zip(points, rel):
            setattr(p, "rel_" + name, float(r))
    return points
