"""Minimal and least-squares estimators for lines, homographies and fundamental matrices.

The minimal solvers are compiled with numba so the engine can run them over
large batches of samples; the public wrappers below call the same kernels.
Every 3x3 model is returned with unit Frobenius norm and its largest-magnitude
entry positive.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

from .core import Model, ProblemKind

RANK_TOL = 1e-8
COLLINEAR_TOL = 1e-8
SINGULAR_TOL = 1e-12  # |det| of a unit-norm homography in normalized coordinates
ROOT_MERGE_TOL = 1e-9
ORIENT_EPS = 1e-12


class DegenerateSampleError(ValueError):
    pass


# -- small linear algebra --------------------------------------------------


@nb.njit(cache=True)
def _canonical3(M):
    norm = math.sqrt(np.sum(M * M))
    out = M / norm
    best = 0.0
    sign = 1.0
    for r in range(3):
        for c in range(3):
            if abs(out[r, c]) > best:
                best = abs(out[r, c])
                sign = 1.0 if out[r, c] > 0 else -1.0
    return out * sign


@nb.njit(cache=True)
def _det3(M):
    return (
        M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
        - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
        + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0])
    )


@nb.njit(cache=True)
def _inv3(M):
    det = _det3(M)
    out = np.empty((3, 3))
    out[0, 0] = M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1]
    out[0, 1] = M[0, 2] * M[2, 1] - M[0, 1] * M[2, 2]
    out[0, 2] = M[0, 1] * M[1, 2] - M[0, 2] * M[1, 1]
    out[1, 0] = M[1, 2] * M[2, 0] - M[1, 0] * M[2, 2]
    out[1, 1] = M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
    out[1, 2] = M[0, 2] * M[1, 0] - M[0, 0] * M[1, 2]
    out[2, 0] = M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0]
    out[2, 1] = M[0, 1] * M[2, 0] - M[0, 0] * M[2, 1]
    out[2, 2] = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return out / det


@nb.njit(cache=True)
def _normalization(pts):
    n = pts.shape[0]
    cx = 0.0
    cy = 0.0
    for i in range(n):
        cx += pts[i, 0]
        cy += pts[i, 1]
    cx /= n
    cy /= n
    d = 0.0
    for i in range(n):
        d += math.sqrt((pts[i, 0] - cx) ** 2 + (pts[i, 1] - cy) ** 2)
    d /= n
    s = math.sqrt(2.0) / d if d > 0 else 1.0
    T = np.zeros((3, 3))
    T[0, 0] = s
    T[1, 1] = s
    T[0, 2] = -s * cx
    T[1, 2] = -s * cy
    T[2, 2] = 1.0
    return T


@nb.njit(cache=True)
def _apply_similarity(T, pts):
    out = np.empty_like(pts)
    for i in range(pts.shape[0]):
        out[i, 0] = T[0, 0] * pts[i, 0] + T[0, 2]
        out[i, 1] = T[1, 1] * pts[i, 1] + T[1, 2]
    return out


@nb.njit(cache=True)
def _similarity_inverse(T):
    s = T[0, 0]
    out = np.zeros((3, 3))
    out[0, 0] = 1.0 / s
    out[1, 1] = 1.0 / s
    out[0, 2] = -T[0, 2] / s
    out[1, 2] = -T[1, 2] / s
    out[2, 2] = 1.0
    return out


@nb.njit(cache=True)
def _null_space(A):
    """Orthonormal basis of the null space of a wide matrix A (r x p, r < p).

    Column-pivoted Householder QR of A^T; the trailing p - r columns of Q span
    the null space. Also returns |R[r-1, r-1]| / |R[0, 0]| as a rank measure.
    """
    r, p = A.shape
    M = A.T.copy()
    vs = np.zeros((r, p))
    betas = np.zeros(r)
    r00 = 0.0
    rlast = 0.0
    for j in range(r):
        best = j
        best_norm = -1.0
        for c in range(j, r):
            s = 0.0
            for i in range(j, p):
                s += M[i, c] * M[i, c]
            if s > best_norm:
                best_norm = s
                best = c
        if best != j:
            for i in range(p):
                tmp = M[i, j]
                M[i, j] = M[i, best]
                M[i, best] = tmp
        norm = math.sqrt(best_norm)
        alpha = -norm if M[j, j] >= 0 else norm
        for i in range(j, p):
            vs[j, i] = M[i, j]
        vs[j, j] -= alpha
        vn = 0.0
        for i in range(j, p):
            vn += vs[j, i] * vs[j, i]
        beta = 2.0 / vn if vn > 0 else 0.0
        betas[j] = beta
        for c in range(j, r):
            dot = 0.0
            for i in range(j, p):
                dot += vs[j, i] * M[i, c]
            dot *= beta
            for i in range(j, p):
                M[i, c] -= dot * vs[j, i]
        if j == 0:
            r00 = abs(alpha)
        rlast = abs(alpha)
    dim = p - r
    basis = np.zeros((p, dim))
    for col in range(dim):
        e = np.zeros(p)
        e[r + col] = 1.0
        for j in range(r - 1, -1, -1):
            dot = 0.0
            for i in range(j, p):
                dot += vs[j, i] * e[i]
            dot *= betas[j]
            for i in range(j, p):
                e[i] -= dot * vs[j, i]
        basis[:, col] = e
    ratio = rlast / r00 if r00 > 0 else 0.0
    return basis, ratio


# -- cubic -----------------------------------------------------------------


@nb.njit(cache=True)
def _poly3(a, b, c, d, x):
    return ((a * x + b) * x + c) * x + d


@nb.njit(cache=True)
def _cubic_real_roots(a, b, c, d):
    """Real roots of a x^3 + b x^2 + c x + d (closed form plus Newton polish)."""
    roots = np.empty(3)
    count = 0
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if scale == 0.0:
        return roots[:0]
    if abs(a) < 1e-12 * scale:
        if abs(b) < 1e-12 * scale:
            if abs(c) > 0:
                roots[0] = -d / c
                count = 1
        else:
            disc = c * c - 4 * b * d
            if disc >= 0:
                sq = math.sqrt(disc)
                q = -0.5 * (c + sq) if c >= 0 else -0.5 * (c - sq)
                roots[count] = q / b
                count += 1
                if q != 0:
                    roots[count] = d / q
                    count += 1
    else:
        p_ = b / a
        q_ = c / a
        r_ = d / a
        P = q_ - p_ * p_ / 3.0
        Q = 2.0 * p_ ** 3 / 27.0 - p_ * q_ / 3.0 + r_
        shift = -p_ / 3.0
        disc = (Q / 2.0) ** 2 + (P / 3.0) ** 3
        if disc > 0:
            sq = math.sqrt(disc)
            w = -Q / 2.0 - sq if Q >= 0 else -Q / 2.0 + sq
            u = math.copysign(abs(w) ** (1.0 / 3.0), w)
            y = u - P / (3.0 * u) if u != 0 else 0.0
            roots[0] = y + shift
            count = 1
        elif P == 0.0:
            roots[0] = shift
            count = 1
        else:
            rad = 2.0 * math.sqrt(-P / 3.0)
            arg = 3.0 * Q / (2.0 * P) * math.sqrt(-3.0 / P)
            arg = min(1.0, max(-1.0, arg))
            phi = math.acos(arg) / 3.0
            for k in range(3):
                roots[count] = rad * math.cos(phi - 2.0 * math.pi * k / 3.0) + shift
                count += 1
    out = np.empty(count)
    kept = 0
    for i in range(count):
        x = roots[i]
        for _ in range(2):
            fx = _poly3(a, b, c, d, x)
            dfx = (3.0 * a * x + 2.0 * b) * x + c
            if dfx == 0.0:
                break
            step = fx / dfx
            if not math.isfinite(step):
                break
            x -= step
        if not math.isfinite(x):
            continue
        dup = False
        for j in range(kept):
            if abs(out[j] - x) <= ROOT_MERGE_TOL * max(1.0, abs(x)):
                dup = True
        if not dup:
            out[kept] = x
            kept += 1
    return np.sort(out[:kept])


# -- fundamental matrix ----------------------------------------------------


@nb.njit(cache=True)
def _epipolar_rows(n1, n2):
    n = n1.shape[0]
    A = np.empty((n, 9))
    for i in range(n):
        x1, y1 = n1[i, 0], n1[i, 1]
        x2, y2 = n2[i, 0], n2[i, 1]
        A[i, 0] = x2 * x1
        A[i, 1] = x2 * y1
        A[i, 2] = x2
        A[i, 3] = y2 * x1
        A[i, 4] = y2 * y1
        A[i, 5] = y2
        A[i, 6] = x1
        A[i, 7] = y1
        A[i, 8] = 1.0
    return A


@nb.njit(cache=True)
def _seven_point(x1, x2):
    """All real-root fundamental matrices through 7 correspondences, (k, 3, 3)."""
    T1 = _normalization(x1)
    T2 = _normalization(x2)
    A = _epipolar_rows(_apply_similarity(T1, x1), _apply_similarity(T2, x2))
    basis, ratio = _null_space(A)
    if ratio < RANK_TOL:
        return np.empty((0, 3, 3))
    F1 = basis[:, 0].copy().reshape(3, 3)
    F2 = basis[:, 1].copy().reshape(3, 3)
    D = F1 - F2
    d0 = _det3(F2)
    d1 = _det3(F1)
    dm = _det3(F2 - D)
    d2 = _det3(F2 + 2.0 * D)
    c0 = d0
    c2 = 0.5 * (d1 + dm) - d0
    s = 0.5 * (d1 - dm)
    c3 = (d2 - c0 - 4.0 * c2 - 2.0 * s) / 6.0
    c1 = s - c3
    alphas = _cubic_real_roots(c3, c2, c1, c0)
    out = np.empty((len(alphas), 3, 3))
    kept = 0
    for alpha in alphas:
        Fn = alpha * F1 + (1.0 - alpha) * F2
        F = T2.T @ Fn @ T1
        if not np.all(np.isfinite(F)) or np.sum(F * F) == 0.0:
            continue
        out[kept] = _canonical3(F)
        kept += 1
    return out[:kept]


@nb.njit(cache=True)
def _oriented_ok(F, x1, x2):
    # epipole in image 2 is the left null vector: orthogonal to every column of F
    best = -1.0
    e = np.zeros(3)
    for a, b in ((0, 1), (0, 2), (1, 2)):
        ex = F[1, a] * F[2, b] - F[2, a] * F[1, b]
        ey = F[2, a] * F[0, b] - F[0, a] * F[2, b]
        ez = F[0, a] * F[1, b] - F[1, a] * F[0, b]
        nrm = ex * ex + ey * ey + ez * ez
        if nrm > best:
            best = nrm
            e[0] = ex
            e[1] = ey
            e[2] = ez
    if best <= 0:
        return False
    e /= math.sqrt(best)
    sign = 0.0
    for i in range(x1.shape[0]):
        u1, v1 = x1[i, 0], x1[i, 1]
        u2, v2 = x2[i, 0], x2[i, 1]
        # e x x'
        cx = e[1] - e[2] * v2
        cy = e[2] * u2 - e[0]
        cz = e[0] * v2 - e[1] * u2
        fx0 = F[0, 0] * u1 + F[0, 1] * v1 + F[0, 2]
        fx1 = F[1, 0] * u1 + F[1, 1] * v1 + F[1, 2]
        fx2 = F[2, 0] * u1 + F[2, 1] * v1 + F[2, 2]
        s = cx * fx0 + cy * fx1 + cz * fx2
        if abs(s) < ORIENT_EPS:
            return False
        if sign == 0.0:
            sign = 1.0 if s > 0 else -1.0
        elif (s > 0) != (sign > 0):
            return False
    return True


# -- homography ------------------------------------------------------------


@nb.njit(cache=True)
def _any_collinear(pts):
    span_x = pts[:, 0].max() - pts[:, 0].min()
    span_y = pts[:, 1].max() - pts[:, 1].min()
    limit = COLLINEAR_TOL * span_x * span_y
    if limit <= 0:
        return True
    n = pts.shape[0]
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                area = 0.5 * abs(
                    (pts[b, 0] - pts[a, 0]) * (pts[c, 1] - pts[a, 1])
                    - (pts[b, 1] - pts[a, 1]) * (pts[c, 0] - pts[a, 0])
                )
                if area < limit:
                    return True
    return False


@nb.njit(cache=True)
def _four_point(x1, x2):
    """Normalized DLT through 4 correspondences; (H, ok)."""
    if _any_collinear(x1) or _any_collinear(x2):
        return np.zeros((3, 3)), False
    T1 = _normalization(x1)
    T2 = _normalization(x2)
    n1 = _apply_similarity(T1, x1)
    n2 = _apply_similarity(T2, x2)
    A = np.zeros((8, 9))
    for i in range(4):
        x, y = n1[i, 0], n1[i, 1]
        u, v = n2[i, 0], n2[i, 1]
        A[2 * i, 0] = -x
        A[2 * i, 1] = -y
        A[2 * i, 2] = -1.0
        A[2 * i, 6] = u * x
        A[2 * i, 7] = u * y
        A[2 * i, 8] = u
        A[2 * i + 1, 3] = -x
        A[2 * i + 1, 4] = -y
        A[2 * i + 1, 5] = -1.0
        A[2 * i + 1, 6] = v * x
        A[2 * i + 1, 7] = v * y
        A[2 * i + 1, 8] = v
    basis, ratio = _null_space(A)
    if ratio < RANK_TOL:
        return np.zeros((3, 3)), False
    Hn = basis[:, 0].copy().reshape(3, 3)
    # singularity is judged in normalized coordinates, where it is scale free
    if abs(_det3(Hn)) <= SINGULAR_TOL:
        return np.zeros((3, 3)), False
    H = _similarity_inverse(T2) @ Hn @ T1
    if not np.all(np.isfinite(H)):
        return np.zeros((3, 3)), False
    return _canonical3(H), True


# -- line ------------------------------------------------------------------


@nb.njit(cache=True)
def _canonical_line(a, b, c):
    norm = math.sqrt(a * a + b * b)
    a /= norm
    b /= norm
    c /= norm
    lead = a if abs(a) >= abs(b) else b
    if lead < 0:
        a, b, c = -a, -b, -c
    return np.array([a, b, c])


@nb.njit(cache=True)
def _two_point_line(p, q):
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    length = math.sqrt(dx * dx + dy * dy)
    if length <= 1e-12:
        return np.zeros(3), False
    a = -dy / length
    b = dx / length
    return _canonical_line(a, b, -(a * p[0] + b * p[1])), True


# -- public API ------------------------------------------------------------


def normalization_transform(pts) -> np.ndarray:
    """Similarity moving ``pts`` to zero centroid and mean distance sqrt(2)."""
    return _normalization(np.ascontiguousarray(pts, dtype=np.float64))


def canonical_matrix(M) -> np.ndarray:
    return _canonical3(np.asarray(M, dtype=np.float64))


def fit_line2d(points) -> Model:
    pts = np.asarray(points, dtype=np.float64).reshape(2, -1)[:, :2]
    line, ok = _two_point_line(pts[0].copy(), pts[1].copy())
    if not ok:
        raise DegenerateSampleError("line through coincident points")
    return Model(ProblemKind.LINE2D, line)


def fit_homography_4pt(x1, x2):
    """Homography mapping the 4 points ``x1`` onto ``x2``, or ``None`` if degenerate."""
    H, ok = _four_point(
        np.ascontiguousarray(x1, dtype=np.float64), np.ascontiguousarray(x2, dtype=np.float64)
    )
    return Model(ProblemKind.HOMOGRAPHY, H) if ok else None


def fit_fundamental_7pt(x1, x2) -> list[Model]:
    """Up to three fundamental matrices; an empty list means a degenerate sample."""
    Fs = _seven_point(
        np.ascontiguousarray(x1, dtype=np.float64), np.ascontiguousarray(x2, dtype=np.float64)
    )
    return [Model(ProblemKind.FUNDAMENTAL, F) for F in Fs]


def fit_fundamental_8pt(x1, x2):
    """Normalized eight-point least squares with rank-2 projection."""
    x1 = np.ascontiguousarray(x1, dtype=np.float64)
    x2 = np.ascontiguousarray(x2, dtype=np.float64)
    if len(x1) < 8:
        raise ValueError("the eight-point algorithm needs at least 8 correspondences")
    T1 = _normalization(x1)
    T2 = _normalization(x2)
    A = _epipolar_rows(_apply_similarity(T1, x1), _apply_similarity(T2, x2))
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    if len(s) >= 8 and s[7] < RANK_TOL * s[0]:
        return None
    Fn = vt[-1].reshape(3, 3)
    u, sf, wt = np.linalg.svd(Fn)
    Fn = u @ np.diag([sf[0], sf[1], 0.0]) @ wt
    F = T2.T @ Fn @ T1
    if not np.all(np.isfinite(F)):
        return None
    F = _canonical3(F)
    # re-project after denormalization so the rank constraint survives rescaling
    u, sf, wt = np.linalg.svd(F)
    F = _canonical3(u @ np.diag([sf[0], sf[1], 0.0]) @ wt)
    return Model(ProblemKind.FUNDAMENTAL, F)


def fit_homography_dlt(x1, x2):
    """Normalized DLT over any number (>= 4) of correspondences."""
    x1 = np.ascontiguousarray(x1, dtype=np.float64)
    x2 = np.ascontiguousarray(x2, dtype=np.float64)
    n = len(x1)
    if n < 4:
        raise ValueError("a homography needs at least 4 correspondences")
    T1 = _normalization(x1)
    T2 = _normalization(x2)
    n1 = _apply_similarity(T1, x1)
    n2 = _apply_similarity(T2, x2)
    A = np.zeros((2 * n, 9))
    x, y = n1[:, 0], n1[:, 1]
    u, v = n2[:, 0], n2[:, 1]
    A[0::2, 0:3] = np.column_stack((-x, -y, -np.ones(n)))
    A[0::2, 6:9] = np.column_stack((u * x, u * y, u))
    A[1::2, 3:6] = np.column_stack((-x, -y, -np.ones(n)))
    A[1::2, 6:9] = np.column_stack((v * x, v * y, v))
    _, s, vt = np.linalg.svd(A, full_matrices=False if 2 * n >= 9 else True)
    if s[min(7, len(s) - 1)] < RANK_TOL * s[0]:
        return None
    Hn = vt[-1].reshape(3, 3)
    if abs(_det3(Hn)) <= SINGULAR_TOL:
        return None
    H = _similarity_inverse(T2) @ Hn @ T1
    if not np.all(np.isfinite(H)):
        return None
    return Model(ProblemKind.HOMOGRAPHY, _canonical3(H))


def fit_line_tls(points):
    """Total least squares line through 2D points, or ``None`` if they coincide."""
    pts = np.asarray(points, dtype=np.float64)[:, :2]
    if len(pts) < 2:
        raise ValueError("a line needs at least 2 points")
    c = pts.mean(axis=0)
    _, s, vt = np.linalg.svd(pts - c, full_matrices=False)
    if s[0] <= 1e-12:
        return None
    a, b = vt[-1]
    return Model(ProblemKind.LINE2D, _canonical_line(a, b, -(a * c[0] + b * c[1])))


def oriented_epipolar_check(F, x1, x2) -> bool:
    """True iff every correspondence sees the epipole on the same side."""
    params = F.params if isinstance(F, Model) else F
    return bool(
        _oriented_ok(
            np.asarray(params, dtype=np.float64),
            np.ascontiguousarray(x1, dtype=np.float64).reshape(-1, 2),
            np.ascontiguousarray(x2, dtype=np.float64).reshape(-1, 2),
        )
    )


def fit_minimal(problem: ProblemKind, x1, x2) -> list[Model]:
    """Every model a minimal sample yields (empty when the sample is degenerate)."""
    if problem is ProblemKind.LINE2D:
        try:
            return [fit_line2d(x1)]
        except DegenerateSampleError:
            return []
    if problem is ProblemKind.HOMOGRAPHY:
        model = fit_homography_4pt(x1, x2)
        return [] if model is None else [model]
    return fit_fundamental_7pt(x1, x2)


def fit_nonminimal(problem: ProblemKind, x1, x2):
    if problem is ProblemKind.LINE2D:
        return fit_line_tls(x1)
    if problem is ProblemKind.HOMOGRAPHY:
        return fit_homography_dlt(x1, x2)
    return fit_fundamental_8pt(x1, x2)
