"""Unified-distance matrix and watershed segmentation of a trained map."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .som import SomModel

# 8-neighbourhood offsets in row-major order; fixed order keeps everything
# downstream deterministic.
_OFFSETS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


@dataclass(frozen=True)
class UMatrix:
    """Per-neuron average distance to its existing lattice neighbours."""

    heights: np.ndarray

    def __post_init__(self) -> None:
        heights = np.asarray(self.heights, dtype=np.float64)
        if heights.ndim != 2:
            raise ValueError("heights must be a 2-D grid")
        if not np.all(np.isfinite(heights)) or np.any(heights < 0):
            raise ValueError("heights must be finite and >= 0")
        object.__setattr__(self, "heights", heights)

    @property
    def shape(self) -> tuple[int, int]:
        return self.heights.shape


@dataclass(frozen=True)
class ClusterMap:
    """Integer label grid from watershed segmentation.

    Labels run 1..num_clusters in basin discovery order; label 0 marks
    neurons whose weights were never updated during training.
    """

    labels: np.ndarray
    num_clusters: int
    margin: float

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 2:
            raise ValueError("labels must be a 2-D grid")
        object.__setattr__(self, "labels", labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape


def compute_umatrix(model: SomModel) -> UMatrix:
    """Average weight distance to the 8-neighbourhood, per neuron.

    Border and corner neurons average over the neighbours that exist, which
    keeps their heights on the same scale as interior ones.
    """
    w = model.weights
    m, n = w.shape[0], w.shape[1]
    stacked = np.full((len(_OFFSETS), m, n), np.nan)
    for k, (dr, dc) in enumerate(_OFFSETS):
        src_r = slice(max(0, -dr), m - max(0, dr))
        src_c = slice(max(0, -dc), n - max(0, dc))
        dst_r = slice(max(0, dr), m - max(0, -dr))
        dst_c = slice(max(0, dc), n - max(0, -dc))
        diff = w[dst_r, dst_c] - w[src_r, src_c]
        stacked[k, dst_r, dst_c] = np.sqrt(np.sum(diff * diff, axis=2))
    # sum in sorted order so grid reflections reproduce heights bit for bit
    stacked.sort(axis=0)
    total = np.nansum(stacked, axis=0)
    count = np.sum(~np.isnan(stacked), axis=0)
    return UMatrix(total / count)


def quantize_heights(heights: np.ndarray) -> np.ndarray:
    """Scale heights to integer levels 0..255 over [min, max].

    Rounds to nearest with .5 going up; a flat field maps to all zeros.
    """
    heights = np.asarray(heights, dtype=np.float64)
    lo = heights.min()
    hi = heights.max()
    if hi == lo:
        return np.zeros(heights.shape, dtype=np.int64)
    levels = np.floor((heights - lo) / (hi - lo) * 255.0 + 0.5)
    return levels.astype(np.int64)


def _erode8(g: np.ndarray) -> np.ndarray:
    """3x3 minimum filter (centre included), borders handled by padding."""
    padded = np.pad(g, 1, mode="constant", constant_values=np.inf)
    out = padded[1:-1, 1:-1].copy()
    m, n = g.shape
    for dr, dc in _OFFSETS:
        np.minimum(out, padded[1 + dr : 1 + dr + m, 1 + dc : 1 + dc + n], out=out)
    return out


def suppress_shallow_minima(levels: np.ndarray, phi: float) -> np.ndarray:
    """h-minima transform: flood away regional minima of depth <= phi.

    Morphological reconstruction by erosion of (levels + phi) above levels;
    iterated until stable, which is cheap on lattice-sized grids.
    """
    f = levels.astype(np.float64)
    g = f + float(phi)
    while True:
        nxt = np.maximum(f, _erode8(g))
        if np.array_equal(nxt, g):
            return g
        g = nxt


def _regional_minima(g: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 8-connected plateaus with no strictly lower neighbour.

    Returns (labels, count); labels follow row-major discovery order starting
    at 1, non-minimum cells stay 0.
    """
    m, n = g.shape
    labels = np.zeros((m, n), dtype=np.int64)
    visited = np.zeros((m, n), dtype=bool)
    next_label = 0
    for r0 in range(m):
        for c0 in range(n):
            if visited[r0, c0]:
                continue
            level = g[r0, c0]
            stack = [(r0, c0)]
            visited[r0, c0] = True
            component = []
            is_minimum = True
            while stack:
                r, c = stack.pop()
                component.append((r, c))
                for dr, dc in _OFFSETS:
                    rr, cc = r + dr, c + dc
                    if not (0 <= rr < m and 0 <= cc < n):
                        continue
                    if g[rr, cc] == level:
                        if not visited[rr, cc]:
                            visited[rr, cc] = True
                            stack.append((rr, cc))
                    elif g[rr, cc] < level:
                        is_minimum = False
            if is_minimum:
                next_label += 1
                for r, c in component:
                    labels[r, c] = next_label
    return labels, next_label


def _flood(g: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """Ordered flood fill from labelled seeds, ascending in height.

    A cell is labelled after the lowest already-labelled neighbour, ties to
    the smallest basin label, so boundary neurons join a basin instead of
    staying unlabelled.
    """
    m, n = g.shape
    labels = seeds.copy()
    heap: list[tuple[float, int, int, int]] = []
    age = 0
    for r in range(m):
        for c in range(n):
            if labels[r, c] == 0:
                continue
            for dr, dc in _OFFSETS:
                rr, cc = r + dr, c + dc
                if 0 <= rr < m and 0 <= cc < n and labels[rr, cc] == 0:
                    heapq.heappush(heap, (g[rr, cc], age, rr, cc))
                    age += 1
    while heap:
        _, _, r, c = heapq.heappop(heap)
        if labels[r, c] != 0:
            continue
        best = None
        for dr, dc in _OFFSETS:
            rr, cc = r + dr, c + dc
            if 0 <= rr < m and 0 <= cc < n and labels[rr, cc] != 0:
                key = (g[rr, cc], labels[rr, cc])
                if best is None or key < best:
                    best = key
        labels[r, c] = best[1]
        for dr, dc in _OFFSETS:
            rr, cc = r + dr, c + dc
            if 0 <= rr < m and 0 <= cc < n and labels[rr, cc] == 0:
                heapq.heappush(heap, (g[rr, cc], age, rr, cc))
                age += 1
    return labels


def watershed(u: UMatrix, model: SomModel, phi: float) -> ClusterMap:
    """Segment the U-matrix into clusters with a depth margin of phi.

    Heights are quantized to 0..255 levels, minima shallower than phi are
    suppressed, surviving minima seed basins grown in ascending height, and
    neurons that were never updated are forced to cluster 0 at the end.
    """
    if u.shape != (model.config.m, model.config.n):
        raise ValueError(f"U-matrix shape {u.shape} does not match the model lattice")
    if phi < 0:
        raise ValueError(f"phi must be >= 0, got {phi}")
    levels = quantize_heights(u.heights)
    g = suppress_shallow_minima(levels, phi)
    seeds, _ = _regional_minima(g)
    labels = _flood(g, seeds)
    labels[model.update_counts == 0] = 0
    survivors = np.unique(labels[labels > 0])
    remap = {int(old): new for new, old in enumerate(survivors, start=1)}
    dense = np.zeros_like(labels)
    for old, new in remap.items():
        dense[labels == old] = new
    return ClusterMap(labels=dense, num_clusters=len(survivors), margin=float(phi))


def assign_cluster(cmap: ClusterMap, bmu: tuple[int, int]) -> int:
    """Cluster id at a 1-based grid position."""
    m, n = cmap.shape
    r, c = bmu
    if not (1 <= r <= m and 1 <= c <= n):
        raise ValueError(f"grid position {bmu} outside 1..{m} x 1..{n}")
    return int(cmap.labels[r - 1, c - 1])
