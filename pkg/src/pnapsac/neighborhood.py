"""Multi-layer 4D grid for constant-time approximate neighborhoods.

A correspondence is treated as a point (u1, v1, u2, v2) in a 4D box spanned
by the two image sizes. Each layer cuts every axis into ``delta`` equal parts;
a point's neighbors on a layer are the points sharing its cell. Queries for a
neighborhood of a given size use the finest layer whose cell is big enough,
so the answer approximates the true k nearest neighbors by cell membership.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .core import DataSet

DEFAULT_DELTAS = (16, 8, 4, 2, 1)


class GridConfigError(ValueError):
    pass


@dataclass(eq=False)
class GridLayer:
    delta: int
    cell_extents: tuple[float, float, float, float]
    cells: dict[tuple[int, int, int, int], np.ndarray]
    point_cell: np.ndarray  # (n, 4) integer cell coordinates
    cell_size: np.ndarray  # (n,) population of each point's cell

    def members(self, i: int) -> np.ndarray:
        return self.cells[tuple(int(c) for c in self.point_cell[i])]


@dataclass(eq=False)
class MultiLayerGrid:
    layers: list[GridLayer]
    dataset: DataSet
    _counts: np.ndarray = field(repr=False, default=None)
    _order_cache: dict = field(repr=False, default_factory=dict)
    _flat: object = field(repr=False, default=None)

    def __post_init__(self):
        self._counts = np.stack([layer.cell_size for layer in self.layers], axis=1)

    @property
    def deltas(self) -> tuple[int, ...]:
        return tuple(layer.delta for layer in self.layers)

    @property
    def n(self) -> int:
        return self.dataset.n

    def layer_for(self, i: int, required: int) -> int:
        """Index of the finest layer whose cell around point ``i`` holds ``required`` points."""
        ok = self._counts[i] >= required
        if not ok[-1]:
            raise ValueError(f"required={required} exceeds the {self.n} indexed points")
        return int(np.argmax(ok))

    def sorted_neighbors(self, layer: int, i: int) -> np.ndarray:
        """Same-cell neighbors of ``i`` (excluding ``i``) by 4D distance, ties by index."""
        key = (layer, i)
        order = self._order_cache.get(key)
        if order is None:
            order = _sorted_members(self.dataset.points, self.layers[layer].members(i), i)
            order.setflags(write=False)
            self._order_cache[key] = order
        return order

    def nearest(self, i: int, k: int) -> np.ndarray:
        """The ``k`` nearest neighbors of ``i`` as seen through the grid (closest first)."""
        layer = self.layer_for(i, k + 1)
        return self.sorted_neighbors(layer, i)[:k]


    def flat(self) -> "FlatGrid":
        """Array-only view of the grid for compiled code."""
        if getattr(self, "_flat", None) is None:
            ptr, members, cell_id = [0], [], np.empty((len(self.layers), self.n), dtype=np.int64)
            for li, layer in enumerate(self.layers):
                for key, idx in layer.cells.items():
                    cell_id[li, idx] = len(ptr) - 1
                    members.append(idx)
                    ptr.append(ptr[-1] + len(idx))
            self._flat = FlatGrid(
                np.ascontiguousarray(self.dataset.points),
                np.ascontiguousarray(self._counts),
                cell_id,
                np.array(ptr, dtype=np.int64),
                np.concatenate(members).astype(np.int64),
            )
        return self._flat


@dataclass(eq=False)
class FlatGrid:
    points: np.ndarray  # (n, 4)
    counts: np.ndarray  # (n, layers) cell population around each point
    cell_id: np.ndarray  # (layers, n) index into cell_ptr
    cell_ptr: np.ndarray
    cell_members: np.ndarray  # ascending point indices inside each cell


@nb.njit(cache=True)
def _sorted_members(points, members, i):
    """Cell members other than ``i``, by squared 4D distance to ``i``, ties by index.

    ``members`` must be in ascending order (the stable sort keeps it for ties).
    """
    out = np.empty(members.shape[0] - 1, dtype=np.int64)
    d2 = np.empty(members.shape[0] - 1)
    c = 0
    for j in members:
        if j == i:
            continue
        s = 0.0
        for a in range(4):
            d = points[j, a] - points[i, a]
            s += d * d
        out[c] = j
        d2[c] = s
        c += 1
    return out[np.argsort(d2, kind="mergesort")]


def _cell_coords(points: np.ndarray, sizes, delta: int) -> np.ndarray:
    scaled = np.floor(points * (delta / np.asarray(sizes, dtype=np.float64)))
    return np.clip(scaled, 0, delta - 1).astype(np.int64)


def grid_build(ds: DataSet, deltas=DEFAULT_DELTAS) -> MultiLayerGrid:
    deltas = [int(d) for d in deltas]
    if not deltas or deltas[-1] != 1:
        raise GridConfigError("the last layer must have delta = 1")
    if any(d < 1 for d in deltas) or any(a <= b for a, b in zip(deltas, deltas[1:])):
        raise GridConfigError(f"deltas must be strictly decreasing positive integers: {deltas}")
    if ds.image_sizes is None:
        raise GridConfigError("grid construction needs declared image sizes")
    sizes = np.asarray(ds.image_sizes, dtype=np.float64)
    if np.any(sizes <= 0):
        raise GridConfigError("image sizes must be positive")

    layers = []
    for delta in deltas:
        coords = _cell_coords(ds.points, sizes, delta)
        linear = ((coords[:, 0] * delta + coords[:, 1]) * delta + coords[:, 2]) * delta + coords[:, 3]
        order = np.argsort(linear, kind="stable")
        keys, starts, counts = np.unique(linear[order], return_index=True, return_counts=True)
        cells = {}
        for start, count in zip(starts, counts):
            idx = order[start:start + count]
            idx.setflags(write=False)
            cells[tuple(int(c) for c in coords[idx[0]])] = idx
        cell_size = counts[np.searchsorted(keys, linear)]
        extents = tuple(float(s) / delta for s in sizes)
        layers.append(GridLayer(delta, extents, cells, coords, cell_size))
    return MultiLayerGrid(layers, ds)


def same_cell_neighbors(g: MultiLayerGrid, layer: int, i: int) -> np.ndarray:
    return g.layers[layer].members(i)


def neighborhood_of_size(g: MultiLayerGrid, i: int, required: int) -> tuple[np.ndarray, int]:
    layer = g.layer_for(i, required)
    return g.layers[layer].members(i), layer


def kth_nearest_in_neighborhood(g: MultiLayerGrid, i: int, k: int) -> int:
    return int(g.nearest(i, k)[k - 1])
