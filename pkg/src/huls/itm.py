"""Instantaneous topological map: incremental node/edge construction.

Nodes are created at incoming samples, never interpolated, and carry stable
integer ids (ids of removed nodes are not reused). The node weight set acts
as a resampled stand-in for the stream that built it.
"""

from __future__ import annotations

import math

import numpy as np

from .dataset import Dataset


class ItmGraph:
    """Dynamic set of weight vectors with undirected Delaunay-style edges.

    Invariants kept by every mutation: edges are symmetric with no
    self-edges, and no edgeless node survives a training step.
    """

    def __init__(self, beta: float, dim: int, feature_names=None):
        if not beta > 0:
            raise ValueError(f"beta must be > 0, got {beta}")
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.beta = float(beta)
        self.dim = int(dim)
        self.feature_names = (
            tuple(feature_names)
            if feature_names is not None
            else tuple(f"x{i}" for i in range(dim))
        )
        self._weights: dict[int, np.ndarray] = {}
        self._edges: dict[int, set[int]] = {}
        self._next_id = 0
        self._matrix: np.ndarray | None = None
        self._ids: list[int] | None = None

    # -- basic accessors -------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self._weights)

    def node_ids(self) -> list[int]:
        """Alive node ids in creation order."""
        return sorted(self._weights)

    def weight(self, node_id: int) -> np.ndarray:
        return self._weights[node_id]

    def neighbors(self, node_id: int) -> set[int]:
        return set(self._edges[node_id])

    def edge_list(self) -> list[tuple[int, int]]:
        """Undirected edges as sorted (low, high) pairs, sorted."""
        out = set()
        for a, nbrs in self._edges.items():
            for b in nbrs:
                out.add((a, b) if a < b else (b, a))
        return sorted(out)

    def _invalidate(self) -> None:
        self._matrix = None
        self._ids = None

    def _stacked(self) -> tuple[list[int], np.ndarray]:
        if self._matrix is None:
            self._ids = sorted(self._weights)
            self._matrix = np.vstack([self._weights[i] for i in self._ids])
        return self._ids, self._matrix

    # -- mutations -------------------------------------------------------

    def add_node(self, weight: np.ndarray) -> int:
        weight = np.asarray(weight, dtype=np.float64).ravel()
        if weight.shape[0] != self.dim:
            raise ValueError(f"weight has d={weight.shape[0]}, graph expects d={self.dim}")
        if not np.all(np.isfinite(weight)):
            raise ValueError("node weights must be finite")
        nid = self._next_id
        self._next_id += 1
        self._weights[nid] = weight.copy()
        self._edges[nid] = set()
        self._invalidate()
        return nid

    def ensure_edge(self, a: int, b: int) -> None:
        if a == b:
            raise ValueError("self-edges are not allowed")
        self._edges[a].add(b)
        self._edges[b].add(a)

    def remove_edge(self, a: int, b: int) -> None:
        self._edges[a].discard(b)
        self._edges[b].discard(a)

    def remove_node(self, node_id: int) -> None:
        """Remove a node; neighbours orphaned by the removal cascade away."""
        nbrs = sorted(self._edges.pop(node_id))
        del self._weights[node_id]
        self._invalidate()
        for m in nbrs:
            if m in self._edges:
                self._edges[m].discard(node_id)
        for m in nbrs:
            if m in self._edges and not self._edges[m]:
                self.remove_node(m)

    # -- queries ---------------------------------------------------------

    def two_bmus(self, x: np.ndarray, exclude: int | None = None) -> tuple[int, int]:
        """Ids of the two nearest nodes to x, lowest id on ties."""
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.shape[0] != self.dim:
            raise ValueError(f"input has d={x.shape[0]}, graph expects d={self.dim}")
        ids, W = self._stacked()
        d2 = np.sum((W - x) ** 2, axis=1)
        if exclude is not None:
            d2 = d2.copy()
            d2[ids.index(exclude)] = np.inf
        if (self.node_count - (exclude is not None)) < 2:
            raise ValueError("two BMUs require at least 2 candidate nodes")
        first = int(np.argmin(d2))
        d2b = d2.copy()
        d2b[first] = np.inf
        second = int(np.argmin(d2b))
        return ids[first], ids[second]


def find_two_bmus_itm(graph: ItmGraph, x: np.ndarray) -> tuple[int, int]:
    """BMU and second BMU node ids for a sample."""
    return graph.two_bmus(x)


def itm_step(graph: ItmGraph, x: np.ndarray) -> ItmGraph:
    """Process one sample through the incremental update.

    In order: find the BMU pair, ensure their edge, prune non-Delaunay edges
    of the BMU (dropping nodes left edgeless), create a node at x when x lies
    outside the Thales sphere through the BMU pair and farther than beta from
    the BMU, and after a creation remove the second BMU of the pre-existing
    nodes if it sits within 0.5 * beta of the BMU.
    """
    if graph.node_count < 2:
        raise ValueError("itm_step needs a graph with at least 2 nodes")
    x = np.asarray(x, dtype=np.float64).ravel()
    j1, j2 = graph.two_bmus(x)
    graph.ensure_edge(j1, j2)
    w1 = graph.weight(j1)
    w2 = graph.weight(j2)
    for m in sorted(graph.neighbors(j1)):
        if m == j2:
            continue  # (w1-w2).(w2-w2) = 0, never pruned
        if float(np.dot(w1 - w2, graph.weight(m) - w2)) < 0.0:
            graph.remove_edge(j1, m)
            if not graph.neighbors(m):
                graph.remove_node(m)
    dist_x = float(math.sqrt(np.sum((x - w1) ** 2)))
    outside_pair_sphere = float(np.dot(w1 - x, w2 - x)) > 0.0
    if dist_x > graph.beta and outside_pair_sphere:
        new_id = graph.add_node(x)
        graph.ensure_edge(j1, new_id)
        # recompute the BMU pair among the pre-existing nodes; the fresh node
        # is excluded, otherwise it would always win at distance 0
        r1, r2 = graph.two_bmus(x, exclude=new_id)
        gap = float(math.sqrt(np.sum((graph.weight(r1) - graph.weight(r2)) ** 2)))
        if gap < 0.5 * graph.beta:
            graph.remove_node(r2)
    return graph


def itm_train(data: Dataset, beta: float) -> ItmGraph:
    """Build an ITM over the dataset in sample order.

    The first two distinct samples become the initial node pair; samples
    consumed that way are not reprocessed.
    """
    if data.length < 2:
        raise ValueError("ITM training needs at least 2 samples")
    graph = ItmGraph(beta=beta, dim=data.dim, feature_names=data.feature_names)
    samples = data.samples
    first = samples[0]
    start = None
    for i in range(1, data.length):
        if not np.array_equal(samples[i], first):
            a = graph.add_node(first)
            b = graph.add_node(samples[i])
            graph.ensure_edge(a, b)
            start = i + 1
            break
    if start is None:
        raise ValueError("ITM training needs at least 2 distinct samples")
    for i in range(start, data.length):
        itm_step(graph, samples[i])
    return graph


def resampled_set(graph: ItmGraph) -> Dataset:
    """Node weights as a dataset (one synthetic batch, creation order)."""
    ids = graph.node_ids()
    if not ids:
        raise ValueError("cannot resample an empty graph")
    samples = np.vstack([graph.weight(i) for i in ids])
    return Dataset(samples, graph.feature_names, tuple("ITM" for _ in ids))


def itm_quantization_error(graph: ItmGraph, data: Dataset) -> float:
    """Mean distance from samples to their nearest node."""
    if graph.node_count == 0:
        raise ValueError("graph has no nodes")
    if data.length == 0:
        raise ValueError("dataset is empty")
    if data.dim != graph.dim:
        raise ValueError(f"data has d={data.dim}, graph expects d={graph.dim}")
    _, W = graph._stacked()
    total = 0.0
    for start in range(0, data.length, 256):
        block = data.samples[start : start + 256]
        diff = block[:, None, :] - W[None, :, :]
        d2 = np.sum(diff * diff, axis=2)
        total += float(np.sum(np.sqrt(d2.min(axis=1))))
    return total / data.length
