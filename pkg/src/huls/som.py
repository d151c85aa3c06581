"""Self-organizing map: lattice, BMU search, epoch training, quality metrics.

Grid positions in the public API are 1-based (row, col) tuples matching the
usual lattice convention; all ties break to the row-major lowest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

#: update_counts increments only when a weight moves by more than this.
UPDATE_EPS = 1e-300

# Row-major scan chunk for distance matrices, keeps memory flat for long streams.
_CHUNK = 128


@dataclass(frozen=True)
class SomConfig:
    """Lattice dimensions and training schedule parameters."""

    m: int
    n: int
    epochs: int
    alpha0: float
    sigma0: float
    rng_seed: int = 0
    shuffle_each_epoch: bool = False

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise ValueError(f"map size must be >= 1x1, got {self.m}x{self.n}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.alpha0 > 0:
            raise ValueError(f"alpha0 must be > 0, got {self.alpha0}")
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be > 0, got {self.sigma0}")


@dataclass
class SomModel:
    """An M x N grid of d-dimensional weight vectors plus update bookkeeping.

    ``update_counts[v]`` counts the training steps in which neuron v's weight
    actually moved (delta magnitude above :data:`UPDATE_EPS`); zero means the
    neuron was never touched, which later drives the cluster-0 rule.
    """

    weights: np.ndarray
    update_counts: np.ndarray
    config: SomConfig
    dim: int
    eq_history: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self) -> None:
        if self.weights.shape != (self.config.m, self.config.n, self.dim):
            raise ValueError(
                f"weights shape {self.weights.shape} does not match "
                f"{self.config.m}x{self.config.n}x{self.dim}"
            )
        if self.update_counts.shape != (self.config.m, self.config.n):
            raise ValueError("update_counts shape must match the lattice")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")

    @property
    def num_neurons(self) -> int:
        return self.config.m * self.config.n

    def flat_weights(self) -> np.ndarray:
        """(P, d) row-major view of the weight grid."""
        return self.weights.reshape(self.num_neurons, self.dim)


@dataclass(frozen=True)
class BmuResult:
    """Best matching unit: 1-based grid position and Euclidean distance."""

    position: tuple[int, int]
    distance: float


def init_random(
    config: SomConfig, dim: int, bounds: tuple[np.ndarray, np.ndarray]
) -> SomModel:
    """Seeded uniform initialization with per-feature bounds."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    lo = np.asarray(bounds[0], dtype=np.float64)
    hi = np.asarray(bounds[1], dtype=np.float64)
    if lo.shape != (dim,) or hi.shape != (dim,):
        raise ValueError(f"bounds must each have shape ({dim},)")
    if np.any(hi < lo):
        raise ValueError("upper bounds must be >= lower bounds")
    rng = np.random.default_rng(config.rng_seed)
    unit = rng.random((config.m, config.n, dim))
    weights = lo + unit * (hi - lo)
    counts = np.zeros((config.m, config.n), dtype=np.int64)
    return SomModel(weights=weights, update_counts=counts, config=config, dim=dim)


def init_linear(config: SomConfig, data: np.ndarray) -> SomModel:
    """Deterministic PCA-plane initialization from training samples.

    The grid spans the top two principal axes at two standard deviations
    around the data mean, which gives the small-radius training schedule an
    already ordered map to refine. Eigenvector signs are fixed so the result
    is reproducible; degenerate directions collapse to the mean.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 1:
        raise ValueError("linear initialization needs an (L, d) sample array")
    dim = data.shape[1]
    mean = data.mean(axis=0)
    axes = np.zeros((2, dim))
    spans = np.zeros(2)
    if data.shape[0] > 1:
        cov = np.cov(data.T).reshape(dim, dim)
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1]
        for i in range(min(2, dim)):
            vec = eigvecs[:, order[i]]
            if vec[np.argmax(np.abs(vec))] < 0:
                vec = -vec
            axes[i] = vec
            spans[i] = 2.0 * math.sqrt(max(eigvals[order[i]], 0.0))
    rows = np.linspace(-1.0, 1.0, config.m) if config.m > 1 else np.zeros(1)
    cols = np.linspace(-1.0, 1.0, config.n) if config.n > 1 else np.zeros(1)
    weights = (
        mean[None, None, :]
        + rows[:, None, None] * spans[0] * axes[0][None, None, :]
        + cols[None, :, None] * spans[1] * axes[1][None, None, :]
    )
    counts = np.zeros((config.m, config.n), dtype=np.int64)
    return SomModel(weights=weights, update_counts=counts, config=config, dim=dim)


def _check_x(model: SomModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != model.dim:
        raise ValueError(f"input has d={x.shape[0]}, model expects d={model.dim}")
    return x


def find_bmu(model: SomModel, x: np.ndarray) -> BmuResult:
    """Nearest neuron by Euclidean distance, row-major lowest index on ties."""
    x = _check_x(model, x)
    d2 = np.sum((model.flat_weights() - x) ** 2, axis=1)
    best = int(np.argmin(d2))
    r, c = divmod(best, model.config.n)
    return BmuResult(position=(r + 1, c + 1), distance=math.sqrt(d2[best]))


def find_two_bmus(model: SomModel, x: np.ndarray) -> tuple[BmuResult, BmuResult]:
    """Best and second-best matching units; requires at least two neurons."""
    if model.num_neurons < 2:
        raise ValueError("two BMUs require a map with at least 2 neurons")
    x = _check_x(model, x)
    d2 = np.sum((model.flat_weights() - x) ** 2, axis=1)
    best = int(np.argmin(d2))
    d2b = d2.copy()
    d2b[best] = np.inf
    second = int(np.argmin(d2b))
    n = model.config.n
    return (
        BmuResult((best // n + 1, best % n + 1), math.sqrt(d2[best])),
        BmuResult((second // n + 1, second % n + 1), math.sqrt(d2[second])),
    )


def learning_rate(k: int, config: SomConfig) -> float:
    """alpha(k) = alpha0 * exp(-k / K) for epoch index 0 <= k < K."""
    if not 0 <= k < config.epochs:
        raise ValueError(f"epoch index {k} outside [0, {config.epochs})")
    return config.alpha0 * math.exp(-k / config.epochs)


def neighborhood(
    v_star: tuple[int, int], v: tuple[int, int], k: int, config: SomConfig
) -> float:
    """Influence of the BMU at ``v_star`` on neuron ``v`` during epoch k.

    h = exp(-||v* - v|| / (sigma0 * sigma(k))) with sigma(k) = exp(-k / K)
    and the norm taken on integer grid coordinates. Positions are 1-based.
    """
    if not 0 <= k < config.epochs:
        raise ValueError(f"epoch index {k} outside [0, {config.epochs})")
    for pos in (v_star, v):
        if not (1 <= pos[0] <= config.m and 1 <= pos[1] <= config.n):
            raise ValueError(f"grid position {pos} outside 1..{config.m} x 1..{config.n}")
    dist = math.sqrt((v_star[0] - v[0]) ** 2 + (v_star[1] - v[1]) ** 2)
    sigma_k = math.exp(-k / config.epochs)
    return math.exp(-dist / (config.sigma0 * sigma_k))


@njit(cache=True)
def _train_kernel(weights, counts, data, order, epochs, alpha0, sigma0, m, n):  # pragma: no cover
    P = weights.shape[0]
    d = weights.shape[1]
    L = data.shape[0]
    dist2 = np.empty(P, dtype=np.float64)
    htab = np.empty((m, n), dtype=np.float64)
    eq_hist = np.empty(epochs, dtype=np.float64)
    for k in range(epochs):
        a_k = alpha0 * np.exp(-k / epochs)
        scale = sigma0 * np.exp(-k / epochs)
        # h depends only on |dr|, |dc| within an epoch; tabulating it here is
        # bit-identical to evaluating exp per neuron per step.
        for dr in range(m):
            for dc in range(n):
                htab[dr, dc] = np.exp(-np.sqrt(dr * dr + dc * dc) / scale)
        acc = 0.0
        for t in range(L):
            x = data[order[k, t]]
            best = 0
            bestd = np.inf
            for p in range(P):
                s = 0.0
                for j in range(d):
                    diff = weights[p, j] - x[j]
                    s += diff * diff
                dist2[p] = s
                if s < bestd:
                    bestd = s
                    best = p
            acc += np.sqrt(bestd)
            br = best // n
            bc = best % n
            for p in range(P):
                r = p // n
                c = p % n
                dr = r - br if r >= br else br - r
                dc = c - bc if c >= bc else bc - c
                coef = a_k * htab[dr, dc]
                if coef > 0.0 and dist2[p] > 0.0:
                    if coef * np.sqrt(dist2[p]) > 1e-300:
                        counts[p] += 1
                for j in range(d):
                    weights[p, j] += coef * (x[j] - weights[p, j])
        eq_hist[k] = acc / L
    return eq_hist


def train(model: SomModel, data) -> SomModel:
    """Run the full epoch loop of sequential BMU + whole-map updates.

    Returns a new trained model; the input model is left untouched so the
    same initialization can be reused. Presentation order is dataset order
    unless ``config.shuffle_each_epoch`` is set, in which case a generator
    seeded from ``config.rng_seed`` permutes each epoch. The per-epoch mean
    BMU distance (incremental, measured before each update) is kept in
    ``eq_history`` for diagnostics.
    """
    samples = np.ascontiguousarray(data.samples, dtype=np.float64)
    if samples.shape[0] == 0:
        raise ValueError("cannot train on an empty dataset")
    if samples.shape[1] != model.dim:
        raise ValueError(f"data has d={samples.shape[1]}, model expects d={model.dim}")
    cfg = model.config
    L = samples.shape[0]
    if cfg.shuffle_each_epoch:
        rng = np.random.default_rng(cfg.rng_seed)
        order = np.stack([rng.permutation(L) for _ in range(cfg.epochs)]).astype(np.int64)
    else:
        order = np.tile(np.arange(L, dtype=np.int64), (cfg.epochs, 1))
    weights = np.ascontiguousarray(model.flat_weights().copy())
    counts = model.update_counts.copy().reshape(-1)
    eq_hist = _train_kernel(
        weights,
        counts,
        samples,
        order,
        cfg.epochs,
        float(cfg.alpha0),
        float(cfg.sigma0),
        cfg.m,
        cfg.n,
    )
    return SomModel(
        weights=weights.reshape(cfg.m, cfg.n, model.dim),
        update_counts=counts.reshape(cfg.m, cfg.n),
        config=cfg,
        dim=model.dim,
        eq_history=eq_hist,
    )


def bmu_scan(model: SomModel, samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat BMU index and distance per sample, chunked over samples.

    Uses the same (x - w)^2 arithmetic as :func:`find_bmu` so batch scans and
    single lookups agree bit for bit.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[1] != model.dim:
        raise ValueError(f"data has d={samples.shape[1]}, model expects d={model.dim}")
    W = model.flat_weights()
    idx = np.empty(samples.shape[0], dtype=np.int64)
    dist = np.empty(samples.shape[0])
    for start in range(0, samples.shape[0], _CHUNK):
        block = samples[start : start + _CHUNK]
        diff = block[:, None, :] - W[None, :, :]
        d2 = np.sum(diff * diff, axis=2)
        best = np.argmin(d2, axis=1)
        idx[start : start + _CHUNK] = best
        dist[start : start + _CHUNK] = np.sqrt(d2[np.arange(block.shape[0]), best])
    return idx, dist


def quantization_error(model: SomModel, data) -> float:
    """Mean Euclidean distance between samples and their BMU weights."""
    samples = np.asarray(data.samples, dtype=np.float64)
    if samples.shape[0] == 0:
        raise ValueError("quantization error needs a nonempty dataset")
    _, dist = bmu_scan(model, samples)
    return float(np.mean(dist))


def topographic_error(model: SomModel, data) -> float:
    """Fraction of samples whose two BMUs are not 8-neighbour adjacent."""
    if model.num_neurons < 2:
        raise ValueError("topographic error requires a map with at least 2 neurons")
    samples = np.asarray(data.samples, dtype=np.float64)
    if samples.shape[0] == 0:
        raise ValueError("topographic error needs a nonempty dataset")
    if samples.shape[1] != model.dim:
        raise ValueError(f"data has d={samples.shape[1]}, model expects d={model.dim}")
    W = model.flat_weights()
    n = model.config.n
    errors = 0
    for start in range(0, samples.shape[0], _CHUNK):
        block = samples[start : start + _CHUNK]
        diff = block[:, None, :] - W[None, :, :]
        d2 = np.sum(diff * diff, axis=2)
        first = np.argmin(d2, axis=1)
        d2[np.arange(block.shape[0]), first] = np.inf
        second = np.argmin(d2, axis=1)
        r1, c1 = first // n, first % n
        r2, c2 = second // n, second % n
        adjacent = (np.abs(r1 - r2) <= 1) & (np.abs(c1 - c2) <= 1)
        errors += int(np.sum(~adjacent))
    return errors / samples.shape[0]
