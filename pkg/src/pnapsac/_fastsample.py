"""Compiled NAPSAC / Progressive NAPSAC batch drawing.

Mirrors ``napsac_draw``, ``pnapsac_draw`` and ``pnapsac_update_counters`` in
samplers.py step for step; those stay as the readable reference. Sorted
neighbor lists are cached lazily in one flat buffer: ``cache_off[layer, i]``
is -1 until the list of point i on that layer is first needed.
"""

import numba as nb
import numpy as np

from .neighborhood import _sorted_members


@nb.njit(cache=True)
def _layer_for(counts, i, required):
    for li in range(counts.shape[1]):
        if counts[i, li] >= required:
            return li
    return -1


@nb.njit(cache=True)
def _nearest(points, counts, cell_id, cell_ptr, cell_members, cache_off, cache_buf, used, i, k):
    """Start offset of the k nearest neighbors of ``i`` inside ``cache_buf``."""
    li = _layer_for(counts, i, k + 1)
    off = cache_off[li, i]
    if off < 0:
        c = cell_id[li, i]
        order = _sorted_members(points, cell_members[cell_ptr[c]:cell_ptr[c + 1]], i)
        off = used[0]
        cache_buf[off:off + order.shape[0]] = order
        used[0] = off + order.shape[0]
        cache_off[li, i] = off
    return off


@nb.njit(cache=True)
def _choose_into(rng, pool, r, out, start):
    """r distinct values from range(pool), written to out[start:start + r]."""
    if r == 0:
        return
    if pool < 2 * r:
        perm = np.arange(pool)
        for a in range(r):
            b = a + rng.integers(0, pool - a)
            perm[a], perm[b] = perm[b], perm[a]
            out[start + a] = perm[a]
        return
    c = 0
    while c < r:
        v = rng.integers(0, pool)
        dup = False
        for q in range(c):
            if out[start + q] == v:
                dup = True
                break
        if not dup:
            out[start + c] = v
            c += 1


@nb.njit(cache=True)
def _hit(t, k, T_int, first, n, i):
    t[i] += 1
    if k[i] < n - 1 and t[i] == T_int[k[i] - first]:
        k[i] += 1


@nb.njit(cache=True)
def pnapsac_batch(rng, size, m, t, k, T_int, first,
                  sel_on, sel_order, sel_T_int, sel_first, sel_tk,
                  points, counts, cell_id, cell_ptr, cell_members,
                  cache_off, cache_buf, used, out, centers, center_k):
    """Draw up to ``size`` samples; returns how many were drawn.

    Stops early when the neighbor cache might overflow so that the caller can
    grow it; the state is consistent at every sample boundary.
    """
    n = points.shape[0]
    picks = np.empty(m, dtype=np.int64)
    for b in range(size):
        if used[0] + m * n > cache_buf.shape[0]:
            return b
        # center
        if sel_on:
            sel_tk[0] += 1
            ts = sel_tk[0]
            if sel_T_int.shape[0] == 0 or ts > sel_T_int[-1]:
                i = sel_order[rng.integers(0, n)]
            else:
                kk = sel_first + np.searchsorted(sel_T_int, ts)
                if kk < sel_tk[1]:
                    kk = sel_tk[1]
                sel_tk[1] = kk
                i = sel_order[kk - 1]
        else:
            i = rng.integers(0, n)
        _hit(t, k, T_int, first, n, i)
        ki = k[i]
        if ki < n - 1:
            off = _nearest(points, counts, cell_id, cell_ptr, cell_members,
                           cache_off, cache_buf, used, i, ki)
            _choose_into(rng, ki - 1, m - 2, picks, 0)
            out[b, 0] = i
            for a in range(m - 2):
                out[b, 1 + a] = cache_buf[off + picks[a]]
            out[b, m - 1] = cache_buf[off + ki - 1]
        else:
            _choose_into(rng, n, m, picks, 0)
            for a in range(m):
                out[b, a] = picks[a]
        centers[b] = i
        center_k[b] = ki
        # mutual-neighborhood credit
        for a in range(m):
            j = out[b, a]
            if j == i:
                continue
            kj = k[j]
            off = _nearest(points, counts, cell_id, cell_ptr, cell_members,
                           cache_off, cache_buf, used, j, kj)
            for q in range(kj):
                if cache_buf[off + q] == i:
                    _hit(t, k, T_int, first, n, j)
                    break
    return size


@nb.njit(cache=True)
def napsac_batch(rng, size, m, k_neigh,
                 points, counts, cell_id, cell_ptr, cell_members,
                 cache_off, cache_buf, used, out):
    n = points.shape[0]
    picks = np.empty(m, dtype=np.int64)
    kk = min(k_neigh, n - 1)
    for b in range(size):
        if used[0] + n > cache_buf.shape[0]:
            return b
        i = rng.integers(0, n)
        off = _nearest(points, counts, cell_id, cell_ptr, cell_members,
                       cache_off, cache_buf, used, i, kk)
        _choose_into(rng, kk, m - 1, picks, 0)
        out[b, 0] = i
        for a in range(m - 1):
            out[b, 1 + a] = cache_buf[off + picks[a]]
    return size


class NeighborCache:
    """Owns the growable sorted-neighbor buffer for one grid."""

    def __init__(self, grid, reserve: int = 0):
        self.flat = grid.flat()
        n = grid.n
        self.cache_off = np.full((len(grid.layers), n), -1, dtype=np.int64)
        self.buf = np.empty(max(reserve, 4 * n + 64), dtype=np.int64)
        self.used = np.zeros(1, dtype=np.int64)

    def grow(self, need: int) -> None:
        new = np.empty(max(2 * self.buf.shape[0], int(self.used[0]) + need), dtype=np.int64)
        new[: self.used[0]] = self.buf[: self.used[0]]
        self.buf = new

    def args(self):
        f = self.flat
        return (f.points, f.counts, f.cell_id, f.cell_ptr, f.cell_members,
                self.cache_off, self.buf, self.used)
