"""Solve-and-score kernels over batches of minimal samples.

Each kernel fills, per sample, the best MSAC value among the models the sample
yields (``FAIL`` when no model can beat ``bound``), its inlier count, the model
itself and a status code.
"""

import numba as nb
import numpy as np

from .scoring import FAIL, _msac_fundamental, _msac_homography, _msac_line
from .solvers import _four_point, _oriented_ok, _seven_point, _two_point_line

SCORED = 0
DEGENERATE = 1
ORIENTATION = 2


@nb.njit(cache=True)
def evaluate_fundamental(samples, x1, x2, tau2, bound, values, counts, models, status):
    m = samples.shape[1]
    s1 = np.empty((m, 2))
    s2 = np.empty((m, 2))
    for b in range(samples.shape[0]):
        for j in range(m):
            s1[j, 0] = x1[samples[b, j], 0]
            s1[j, 1] = x1[samples[b, j], 1]
            s2[j, 0] = x2[samples[b, j], 0]
            s2[j, 1] = x2[samples[b, j], 1]
        values[b] = FAIL
        counts[b] = 0
        Fs = _seven_point(s1, s2)
        if Fs.shape[0] == 0:
            status[b] = DEGENERATE
            continue
        status[b] = ORIENTATION
        for f in range(Fs.shape[0]):
            if not _oriented_ok(Fs[f], s1, s2):
                continue
            status[b] = SCORED
            v, c = _msac_fundamental(Fs[f], x1, x2, tau2, max(bound, values[b]))
            if v > values[b]:
                values[b] = v
                counts[b] = c
                models[b] = Fs[f]


@nb.njit(cache=True)
def evaluate_homography(samples, x1, x2, tau2, bound, values, counts, models, status):
    m = samples.shape[1]
    s1 = np.empty((m, 2))
    s2 = np.empty((m, 2))
    for b in range(samples.shape[0]):
        for j in range(m):
            s1[j, 0] = x1[samples[b, j], 0]
            s1[j, 1] = x1[samples[b, j], 1]
            s2[j, 0] = x2[samples[b, j], 0]
            s2[j, 1] = x2[samples[b, j], 1]
        values[b] = FAIL
        counts[b] = 0
        H, ok = _four_point(s1, s2)
        if not ok:
            status[b] = DEGENERATE
            continue
        status[b] = SCORED
        v, c = _msac_homography(H, x1, x2, tau2, bound)
        values[b] = v
        counts[b] = c
        models[b] = H


@nb.njit(cache=True)
def evaluate_line(samples, x1, x2, tau2, bound, values, counts, models, status):
    for b in range(samples.shape[0]):
        values[b] = FAIL
        counts[b] = 0
        line, ok = _two_point_line(x1[samples[b, 0]], x1[samples[b, 1]])
        if not ok:
            status[b] = DEGENERATE
            continue
        status[b] = SCORED
        v, c = _msac_line(line, x1, tau2, bound)
        values[b] = v
        counts[b] = c
        models[b, 0] = line
