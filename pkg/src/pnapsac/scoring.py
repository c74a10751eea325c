"""Residuals and MSAC model quality.

Residuals: point-line distance for lines, symmetric transfer error for
homographies, Sampson distance for fundamental matrices. The MSAC value is the
truncated quadratic gain sum(max(0, tau^2 - r^2)), so higher is better; a
point is an inlier iff r < tau.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from .core import Correspondence, DataSet, Model, ProblemKind, Score
from .solvers import _det3, _inv3

FAIL = -1.0


@nb.njit(cache=True)
def _line_sq(l, x1, i):
    d = l[0] * x1[i, 0] + l[1] * x1[i, 1] + l[2]
    return d * d


@nb.njit(cache=True)
def _sampson_sq(F, x1, x2, i):
    u1, v1 = x1[i, 0], x1[i, 1]
    u2, v2 = x2[i, 0], x2[i, 1]
    a0 = F[0, 0] * u1 + F[0, 1] * v1 + F[0, 2]
    a1 = F[1, 0] * u1 + F[1, 1] * v1 + F[1, 2]
    a2 = F[2, 0] * u1 + F[2, 1] * v1 + F[2, 2]
    b0 = F[0, 0] * u2 + F[1, 0] * v2 + F[2, 0]
    b1 = F[0, 1] * u2 + F[1, 1] * v2 + F[2, 1]
    num = u2 * a0 + v2 * a1 + a2
    den = a0 * a0 + a1 * a1 + b0 * b0 + b1 * b1
    if den <= 0.0:
        return 0.0 if num == 0.0 else np.inf
    return num * num / den


@nb.njit(cache=True)
def _transfer_sq(H, Hinv, x1, x2, i):
    u1, v1 = x1[i, 0], x1[i, 1]
    u2, v2 = x2[i, 0], x2[i, 1]
    w = H[2, 0] * u1 + H[2, 1] * v1 + H[2, 2]
    wi = Hinv[2, 0] * u2 + Hinv[2, 1] * v2 + Hinv[2, 2]
    if w == 0.0 or wi == 0.0:
        return np.inf
    px = (H[0, 0] * u1 + H[0, 1] * v1 + H[0, 2]) / w - u2
    py = (H[1, 0] * u1 + H[1, 1] * v1 + H[1, 2]) / w - v2
    qx = (Hinv[0, 0] * u2 + Hinv[0, 1] * v2 + Hinv[0, 2]) / wi - u1
    qy = (Hinv[1, 0] * u2 + Hinv[1, 1] * v2 + Hinv[1, 2]) / wi - v1
    return 0.5 * (px * px + py * py + qx * qx + qy * qy)


@nb.njit(cache=True)
def _homography_inverse(H):
    if _det3(H) == 0.0:
        return np.full((3, 3), np.nan), False
    return _inv3(H), True


@nb.njit(cache=True)
def _residuals_sq(kind, params, x1, x2):
    n = x1.shape[0]
    out = np.empty(n)
    if kind == 0:
        for i in range(n):
            out[i] = _line_sq(params[0], x1, i)
    elif kind == 1:
        Hinv, ok = _homography_inverse(params)
        for i in range(n):
            out[i] = _transfer_sq(params, Hinv, x1, x2, i) if ok else np.inf
    else:
        for i in range(n):
            out[i] = _sampson_sq(params, x1, x2, i)
    return out


@nb.njit(cache=True)
def _msac_sum(r2, tau2):
    value = 0.0
    count = 0
    for i in range(r2.shape[0]):
        if r2[i] < tau2:
            value += tau2 - r2[i]
            count += 1
    return value, count


@nb.njit(cache=True)
def _msac_fundamental(F, x1, x2, tau2, bound):
    """MSAC value of F, or FAIL as soon as it provably cannot exceed ``bound``."""
    n = x1.shape[0]
    value = 0.0
    count = 0
    for i in range(n):
        r2 = _sampson_sq(F, x1, x2, i)
        if r2 < tau2:
            value += tau2 - r2
            count += 1
        elif value + (n - 1 - i) * tau2 <= bound:
            return FAIL, count
    return value, count


@nb.njit(cache=True)
def _msac_homography(H, x1, x2, tau2, bound):
    Hinv, ok = _homography_inverse(H)
    if not ok:
        return FAIL, 0
    n = x1.shape[0]
    value = 0.0
    count = 0
    for i in range(n):
        r2 = _transfer_sq(H, Hinv, x1, x2, i)
        if r2 < tau2:
            value += tau2 - r2
            count += 1
        elif value + (n - 1 - i) * tau2 <= bound:
            return FAIL, count
    return value, count


@nb.njit(cache=True)
def _msac_line(l, x1, tau2, bound):
    n = x1.shape[0]
    value = 0.0
    count = 0
    for i in range(n):
        r2 = _line_sq(l, x1, i)
        if r2 < tau2:
            value += tau2 - r2
            count += 1
        elif value + (n - 1 - i) * tau2 <= bound:
            return FAIL, count
    return value, count


_KIND_CODE = {ProblemKind.LINE2D: 0, ProblemKind.HOMOGRAPHY: 1, ProblemKind.FUNDAMENTAL: 2}


def _split(data):
    if isinstance(data, DataSet):
        pts = data.points
    else:
        pts = np.asarray(data, dtype=np.float64).reshape(-1, 4)
    return np.ascontiguousarray(pts[:, :2]), np.ascontiguousarray(pts[:, 2:])


def _params(model: Model) -> np.ndarray:
    p = np.asarray(model.params, dtype=np.float64)
    return p.reshape(1, 3) if model.kind is ProblemKind.LINE2D else p


def squared_residuals(model: Model, data) -> np.ndarray:
    x1, x2 = _split(data)
    return _residuals_sq(_KIND_CODE[model.kind], _params(model), x1, x2)


def residuals(model: Model, data) -> np.ndarray:
    return np.sqrt(squared_residuals(model, data))


def residual(model: Model, c: Correspondence) -> float:
    return float(residuals(model, np.array([[c[0], c[1], c[2], c[3]]]))[0])


def msac_score(model: Model, data, tau: float) -> Score:
    if tau <= 0:
        raise ValueError("threshold must be positive")
    r2 = squared_residuals(model, data)
    tau2 = float(tau) ** 2
    value, count = _msac_sum(r2, tau2)
    return Score(float(value), int(count), np.flatnonzero(r2 < tau2))


def msac_from_residuals(r, tau: float) -> Score:
    """MSAC score from plain (unsquared) residuals."""
    r = np.asarray(r, dtype=np.float64)
    r2 = r * r
    tau2 = float(tau) ** 2
    value, count = _msac_sum(r2, tau2)
    return Score(float(value), int(count), np.flatnonzero(r2 < tau2))


def inlier_ratio(score: Score, n: int) -> float:
    if n <= 0:
        raise ValueError("n must be positive")
    return score.inlier_count / n


def truncated_cost(r, tau: float) -> float:
    """sum(min(r^2, tau^2)); minimizing it is equivalent to maximizing MSAC."""
    r = np.asarray(r, dtype=np.float64)
    return float(np.minimum(r * r, tau * tau).sum())

