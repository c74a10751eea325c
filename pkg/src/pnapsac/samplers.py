"""Minimal-sample generators: uniform, NAPSAC, PROSAC and Progressive NAPSAC.

Every sampler exposes ``draw(rng)`` for a single sample and
``draw_batch(rng, size)`` returning a ``(size, m)`` index array. Samples never
depend on model scores, which lets the engine draw ahead in batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from ._fastsample import NeighborCache, napsac_batch, pnapsac_batch
from .neighborhood import MultiLayerGrid

DEFAULT_T_N = 100_000


class SamplerConfigError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GrowthTable:
    """Expected sample counts T_k and their integer schedule T'_k for k = m-1 .. n.

    ``T_real[k - first]`` is the average number of samples, out of ``T_n``
    uniform ones that start with a fixed point, whose other m - 1 members all
    come from that point's k nearest neighbors.
    """

    m: int
    n: int
    T_n: float
    T_real: np.ndarray
    T_int: np.ndarray

    @property
    def first(self) -> int:
        return self.m - 1

    @property
    def last(self) -> int:
        return self.n

    def _index(self, k: int) -> int:
        if not self.first <= k <= self.last:
            raise IndexError(f"k={k} outside the table range [{self.first}, {self.last}]")
        return k - self.first

    def real(self, k: int) -> float:
        return float(self.T_real[self._index(k)])

    def integer(self, k: int) -> int:
        return int(self.T_int[self._index(k)])


def growth_table_build(n: int, m: int, T_n: float = DEFAULT_T_N) -> GrowthTable:
    if not (n > m >= 2):
        raise SamplerConfigError(f"growth table needs n > m >= 2 (got n={n}, m={m})")
    if T_n <= 0:
        raise SamplerConfigError("T_n must be positive")
    # Exact rationals keep the integer schedule free of rounding artifacts when
    # T_{k+1} - T_k is an integer.
    t = Fraction(T_n)
    for i in range(m - 1):
        t *= Fraction(m - 1 - i, n - i)
    reals = [float(t)]
    ints = [1]
    for k in range(m - 1, n):
        nxt = t * Fraction(k + 1, k + 2 - m)
        ints.append(ints[-1] + math.ceil(nxt - t))
        reals.append(float(nxt))
        t = nxt
    T_real = np.array(reals)
    T_int = np.array(ints, dtype=np.int64)
    T_real.setflags(write=False)
    T_int.setflags(write=False)
    return GrowthTable(m, n, float(T_n), T_real, T_int)


def growth_lookup(g: GrowthTable, t_i: int) -> int:
    """Smallest k with T'_k >= t_i; ``n - 1`` once ``t_i`` is past the table."""
    idx = int(np.searchsorted(g.T_int, t_i, side="left"))
    if idx >= len(g.T_int):
        return g.n - 1
    return g.first + idx


def _choose(rng: np.random.Generator, pool: int, r: int) -> np.ndarray:
    """``r`` distinct integers from ``range(pool)``, uniform over subsets."""
    if r == 0:
        return np.empty(0, dtype=np.int64)
    if r == 1:
        return rng.integers(0, pool, size=1)
    if pool < 2 * r:
        return rng.permutation(pool)[:r]
    while True:
        vals = rng.integers(0, pool, size=r)
        if len(set(vals.tolist())) == r:
            return vals


def _distinct_rows(rng: np.random.Generator, pools: np.ndarray, r: int) -> np.ndarray:
    """Row-wise version of :func:`_choose` for a vector of pool sizes."""
    pools = np.asarray(pools, dtype=np.int64)
    out = np.empty((len(pools), r), dtype=np.int64)
    if r == 0 or len(pools) == 0:
        return out
    small = pools < 2 * r
    for b in np.flatnonzero(small):
        out[b] = rng.permutation(pools[b])[:r]
    rows = np.flatnonzero(~small)
    while rows.size:
        vals = rng.integers(0, pools[rows, None], size=(rows.size, r))
        s = np.sort(vals, axis=1)
        ok = np.all(s[:, 1:] != s[:, :-1], axis=1)
        out[rows[ok]] = vals[ok]
        rows = rows[~ok]
    return out


# -- uniform ---------------------------------------------------------------


def uniform_draw(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    if n < m:
        raise SamplerConfigError(f"cannot draw {m} points from {n}")
    return _choose(rng, n, m)


class UniformSampler:
    name = "uniform"

    def __init__(self, n: int, m: int):
        if n < m:
            raise SamplerConfigError(f"cannot draw {m} points from {n}")
        self.n, self.m = n, m

    def draw(self, rng):
        return uniform_draw(rng, self.n, self.m)

    def draw_batch(self, rng, size: int) -> np.ndarray:
        return _distinct_rows(rng, np.full(size, self.n), self.m)


# -- NAPSAC ----------------------------------------------------------------


def napsac_draw(
    rng: np.random.Generator,
    grid: MultiLayerGrid,
    m: int,
    k_neigh: int,
    layer: Optional[int] = None,
) -> Optional[np.ndarray]:
    """Uniform center plus m - 1 points from its ``k_neigh`` nearest neighbors.

    With ``layer`` given the neighborhood is restricted to the center's cell on
    that layer (the fixed-radius flavour); ``None`` is returned when it holds
    fewer than m - 1 other points, and the caller is expected to retry.
    """
    if k_neigh < m - 1:
        raise SamplerConfigError("k_neigh must be at least m - 1")
    n = grid.n
    i = int(rng.integers(0, n))
    if layer is None:
        neighbors = grid.nearest(i, min(k_neigh, n - 1))
    else:
        neighbors = grid.sorted_neighbors(layer, i)[:k_neigh]
    if len(neighbors) < m - 1:
        return None
    picks = neighbors[_choose(rng, len(neighbors), m - 1)]
    return np.concatenate(([i], picks)).astype(np.int64)


class NapsacSampler:
    name = "napsac"
    max_retries = 1000

    def __init__(self, grid: MultiLayerGrid, m: int, k_neigh: int = 20, layer=None):
        self.grid, self.m, self.k_neigh, self.layer = grid, m, max(k_neigh, m - 1), layer
        self.failures = 0
        self._cache = None

    def draw(self, rng):
        for _ in range(self.max_retries):
            sample = napsac_draw(rng, self.grid, self.m, self.k_neigh, self.layer)
            if sample is not None:
                return sample
            self.failures += 1
        # every center keeps landing in an undersized cell; fall back to global
        return uniform_draw(rng, self.grid.n, self.m)

    def draw_batch(self, rng, size):
        out = np.empty((size, self.m), dtype=np.int64)
        if self.layer is not None:
            for b in range(size):
                out[b] = self.draw(rng)
            return out
        if self._cache is None:
            self._cache = NeighborCache(self.grid)
        done = 0
        while done < size:
            done += napsac_batch(rng, size - done, self.m, self.k_neigh,
                                 *self._cache.args(), out[done:])
            if done < size:
                self._cache.grow(self.grid.n)
        return out


# -- PROSAC ----------------------------------------------------------------


@dataclass(eq=False)
class ProsacState:
    """Progressive sampling over points ordered by decreasing quality.

    ``growth`` is built with sample size m + 1, so its T_k counts samples of m
    points taken from the top k. It is ``None`` when n is too small for a
    schedule, in which case draws are uniform.
    """

    m: int
    n: int
    ordering: np.ndarray
    growth: Optional[GrowthTable]
    t: int = 0
    k: int = 0

    @classmethod
    def from_quality(cls, quality, m: int, T_n: float = DEFAULT_T_N) -> "ProsacState":
        quality = np.asarray(quality, dtype=np.float64)
        n = len(quality)
        if n < m:
            raise SamplerConfigError(f"cannot draw {m} points from {n}")
        ordering = np.argsort(-quality, kind="stable")
        growth = growth_table_build(n, m + 1, T_n) if n > m + 1 else None
        return cls(m, n, ordering, growth, 0, m)

    def _pool_sizes(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        T_int = self.growth.T_int
        saturated = ts > T_int[-1]
        ks = self.growth.first + np.searchsorted(T_int, np.minimum(ts, T_int[-1]), side="left")
        return np.maximum(ks, self.k), saturated


def prosac_draw(state: ProsacState, rng: np.random.Generator) -> np.ndarray:
    return prosac_draw_batch(state, rng, 1)[0]


def prosac_draw_batch(state: ProsacState, rng: np.random.Generator, size: int) -> np.ndarray:
    m, n = state.m, state.n
    ts = state.t + 1 + np.arange(size)
    state.t += size
    if state.growth is None:
        return state.ordering[_distinct_rows(rng, np.full(size, n), m)]
    ks, saturated = state._pool_sizes(ts)
    state.k = int(ks[-1])
    out = np.empty((size, m), dtype=np.int64)
    if np.any(saturated):
        out[saturated] = _distinct_rows(rng, np.full(int(saturated.sum()), n), m)
    progressive = ~saturated
    if np.any(progressive):
        kp = ks[progressive]
        rest = _distinct_rows(rng, kp - 1, m - 1)
        out[progressive] = np.column_stack((kp - 1, rest))
    return state.ordering[out]


class ProsacSampler:
    name = "prosac"

    def __init__(self, quality, m: int, T_n: float = DEFAULT_T_N):
        self.state = ProsacState.from_quality(quality, m, T_n)
        self.m = m

    def draw(self, rng):
        return prosac_draw(self.state, rng)

    def draw_batch(self, rng, size):
        return prosac_draw_batch(self.state, rng, size)


# -- Progressive NAPSAC ----------------------------------------------------


@dataclass(eq=False)
class PNapsacState:
    """Per-point hit counters ``t`` and neighborhood sizes ``k``.

    ``center_selector`` is a one-point PROSAC schedule over quality-ordered
    points, or ``None`` for uniformly chosen centers.
    """

    m: int
    n: int
    growth: GrowthTable
    t: np.ndarray
    k: np.ndarray
    center_selector: Optional[ProsacState] = None

    @classmethod
    def create(cls, n: int, m: int, T_n: float = DEFAULT_T_N, quality=None) -> "PNapsacState":
        growth = growth_table_build(n, m, T_n)
        selector = None
        if quality is not None:
            selector = ProsacState.from_quality(quality, 1, T_n)
        return cls(
            m, n, growth, np.zeros(n, dtype=np.int64), np.full(n, m, dtype=np.int64), selector
        )

    def saturated(self, i: int) -> bool:
        return self.k[i] >= self.n - 1

    def _hit(self, i: int) -> None:
        self.t[i] += 1
        k = self.k[i]
        if k < self.n - 1 and self.t[i] == self.growth.T_int[k - self.growth.first]:
            self.k[i] = k + 1


def pnapsac_draw(
    state: PNapsacState, rng: np.random.Generator, grid: MultiLayerGrid
) -> tuple[np.ndarray, int]:
    """Choose a center, advance its counter and draw a semi-random sample.

    While the center's neighborhood is not saturated the sample is the center,
    m - 2 random points among its k - 1 nearest neighbors and its k-th nearest
    neighbor. After saturation the m points are drawn uniformly from all points.
    Counters of the other members are *not* touched here; see
    :func:`pnapsac_update_counters`.
    """
    m, n = state.m, state.n
    if state.center_selector is not None:
        i = int(prosac_draw(state.center_selector, rng)[0])
    else:
        i = int(rng.integers(0, n))
    state._hit(i)
    k = int(state.k[i])
    if k < n - 1:
        neighbors = grid.nearest(i, k)
        picks = neighbors[_choose(rng, k - 1, m - 2)]
        sample = np.empty(m, dtype=np.int64)
        sample[0] = i
        sample[1:m - 1] = picks
        sample[m - 1] = neighbors[k - 1]
    else:
        sample = _choose(rng, n, m).astype(np.int64)
    return sample, i


def pnapsac_update_counters(
    state: PNapsacState, sample, center: int, grid: MultiLayerGrid
) -> None:
    """Credit every other member whose own neighborhood contains the center."""
    for j in sample:
        j = int(j)
        if j == center:
            continue
        if center in grid.nearest(j, int(state.k[j])):
            state._hit(j)


class ProgressiveNapsacSampler:
    name = "pnapsac"

    def __init__(self, grid: MultiLayerGrid, m: int, T_n: float = DEFAULT_T_N, quality=None,
                 record_centers: bool = False):
        if m < 2:
            raise SamplerConfigError("P-NAPSAC needs m >= 2")
        self.grid, self.m = grid, m
        self.state = PNapsacState.create(grid.n, m, T_n, quality)
        # when recording: the center of every drawn sample and its k at draw time
        self.centers: Optional[list] = [] if record_centers else None
        self.center_k: Optional[list] = [] if record_centers else None
        self._cache = None

    def draw(self, rng):
        return self.draw_batch(rng, 1)[0]

    def draw_batch(self, rng, size):
        """Compiled equivalent of repeated pnapsac_draw + pnapsac_update_counters."""
        st = self.state
        if self._cache is None:
            self._cache = NeighborCache(self.grid, reserve=8 * self.m * st.n)
        sel = st.center_selector
        if sel is not None:
            sel_order = sel.ordering
            sel_T = sel.growth.T_int if sel.growth is not None else np.empty(0, dtype=np.int64)
            sel_first = sel.growth.first if sel.growth is not None else 1
            sel_tk = np.array([sel.t, sel.k], dtype=np.int64)
        else:
            sel_order = np.empty(0, dtype=np.int64)
            sel_T = np.empty(0, dtype=np.int64)
            sel_first = 1
            sel_tk = np.zeros(2, dtype=np.int64)
        out = np.empty((size, self.m), dtype=np.int64)
        centers = np.empty(size, dtype=np.int64)
        center_k = np.empty(size, dtype=np.int64)
        done = 0
        while done < size:
            done += pnapsac_batch(
                rng, size - done, self.m, st.t, st.k, st.growth.T_int, st.growth.first,
                sel is not None, sel_order, sel_T, sel_first, sel_tk,
                *self._cache.args(), out[done:], centers[done:], center_k[done:],
            )
            if done < size:
                self._cache.grow(self.m * st.n)
        if sel is not None:
            sel.t, sel.k = int(sel_tk[0]), int(sel_tk[1])
        if self.centers is not None:
            self.centers.extend(centers.tolist())
            self.center_k.extend(center_k.tolist())
        return out
