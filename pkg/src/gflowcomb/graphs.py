"""Immutable undirected graphs with CSR adjacency.

Vertices are integers 0..n-1.  Edges are stored canonically as a sorted
(E, 2) array with u < v in every row, so two graphs built from the same
edge set compare equal structurally regardless of input order.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


class Graph:
    """Simple undirected graph. No self loops, no parallel edges.

    Args:
        num_vertices: vertex count n, must be >= 1.
        edges: iterable of (u, v) pairs with 0 <= u, v < n and u != v.
        graph_id: opaque identifier carried through for bookkeeping.
    """

    __slots__ = ("num_vertices", "edges", "graph_id", "_indptr", "_indices",
                 "_dense", "_dense_self", "_bitmasks")

    def __init__(self, num_vertices: int, edges: Iterable[Sequence[int]],
                 graph_id: str = ""):
        if num_vertices < 1:
            raise ValueError(f"num_vertices must be >= 1, got {num_vertices}")
        self.num_vertices = int(num_vertices)
        self.graph_id = graph_id

        edge_arr = np.asarray(list(edges), dtype=np.int64)
        if edge_arr.size == 0:
            edge_arr = edge_arr.reshape(0, 2)
        if edge_arr.ndim != 2 or edge_arr.shape[1] != 2:
            raise ValueError("edges must be pairs of vertices")
        if edge_arr.size and (edge_arr.min() < 0 or edge_arr.max() >= num_vertices):
            raise ValueError("edge endpoint out of range")
        if edge_arr.size and np.any(edge_arr[:, 0] == edge_arr[:, 1]):
            raise ValueError("self loops are not allowed")

        lo = np.minimum(edge_arr[:, 0], edge_arr[:, 1])
        hi = np.maximum(edge_arr[:, 0], edge_arr[:, 1])
        canon = np.stack([lo, hi], axis=1)
        order = np.lexsort((canon[:, 1], canon[:, 0]))
        canon = canon[order]
        if canon.shape[0] > 1 and np.any(np.all(np.diff(canon, axis=0) == 0, axis=1)):
            raise ValueError("duplicate edges are not allowed")
        canon.setflags(write=False)
        self.edges = canon

        # CSR over both directions, neighbor lists sorted ascending.
        n = self.num_vertices
        deg = np.zeros(n, dtype=np.int64)
        np.add.at(deg, canon[:, 0], 1)
        np.add.at(deg, canon[:, 1], 1)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int64)
        fill = indptr[:-1].copy()
        for u, v in canon:
            indices[fill[u]] = v
            fill[u] += 1
            indices[fill[v]] = u
            fill[v] += 1
        for v in range(n):
            indices[indptr[v]:indptr[v + 1]].sort()
        indptr.setflags(write=False)
        indices.setflags(write=False)
        self._indptr = indptr
        self._indices = indices
        self._dense = None
        self._dense_self = None
        self._bitmasks = None

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def degree(self, v: int) -> int:
        """Number of neighbors of v."""
        if not 0 <= v < self.num_vertices:
            raise IndexError(f"vertex {v} out of range")
        return int(self._indptr[v + 1] - self._indptr[v])

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted neighbor array of v (read-only view)."""
        if not 0 <= v < self.num_vertices:
            raise IndexError(f"vertex {v} out of range")
        return self._indices[self._indptr[v]:self._indptr[v + 1]]

    def are_adjacent(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        if not 0 <= v < self.num_vertices:
            raise IndexError(f"vertex {v} out of range")
        i = np.searchsorted(nbrs, v)
        return bool(i < len(nbrs) and nbrs[i] == v)

    def dense_adjacency(self) -> np.ndarray:
        """Dense (n, n) float64 adjacency matrix, cached."""
        if self._dense is None:
            n = self.num_vertices
            a = np.zeros((n, n), dtype=np.float64)
            if self.num_edges:
                a[self.edges[:, 0], self.edges[:, 1]] = 1.0
                a[self.edges[:, 1], self.edges[:, 0]] = 1.0
            a.setflags(write=False)
            self._dense = a
        return self._dense

    def dense_adjacency_with_self(self) -> np.ndarray:
        """Adjacency plus identity (closed neighborhoods), cached."""
        if self._dense_self is None:
            a = self.dense_adjacency() + np.eye(self.num_vertices)
            a.setflags(write=False)
            self._dense_self = a
        return self._dense_self

    def neighbor_bitmasks(self) -> list[int]:
        """Per-vertex neighborhood as python int bitmasks, cached."""
        if self._bitmasks is None:
            masks = [0] * self.num_vertices
            for u, v in self.edges:
                masks[u] |= 1 << int(v)
                masks[v] |= 1 << int(u)
            self._bitmasks = masks
        return self._bitmasks

    def __repr__(self) -> str:
        return (f"Graph(n={self.num_vertices}, m={self.num_edges}, "
                f"id={self.graph_id!r})")


def complement(g: Graph) -> Graph:
    """Complement graph: edge set is all non-adjacent distinct pairs."""
    n = g.num_vertices
    present = set(map(tuple, g.edges.tolist()))
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)
             if (u, v) not in present]
    return Graph(n, edges, graph_id=f"{g.graph_id}~c" if g.graph_id else "")
