"""HULS pipeline: ITM resampling, SOM training, U-matrix and watershed."""

from __future__ import annotations

import csv
import io as _io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, NormalizationParams, apply_normalization
from .itm import ItmGraph, itm_train, resampled_set
from .som import SomConfig, SomModel, bmu_scan, init_linear, init_random
from .som import quantization_error as som_quantization_error
from .som import topographic_error as som_topographic_error
from .som import train as som_train
from .umatrix import ClusterMap, UMatrix, compute_umatrix, watershed

MODE_HULS = "huls"
MODE_PLAIN = "plain_som"


@dataclass
class HulsModel:
    """A trained pipeline: SOM, U-matrix and clusters, plus the ITM when used.

    ``normalization`` holds the parameters the training data was scaled with;
    scoring applies them to raw inputs. ``training_scores`` are the BMU
    distances of the (normalized) training samples against the final map,
    kept for threshold resolution.
    """

    mode: str
    som: SomModel
    umatrix: UMatrix
    clusters: ClusterMap
    itm: ItmGraph | None
    normalization: NormalizationParams | None
    feature_names: tuple[str, ...]
    beta: float | None
    phi: float
    training_scores: np.ndarray
    training_batch_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.mode not in (MODE_HULS, MODE_PLAIN):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_HULS and self.itm is None:
            raise ValueError("huls mode requires the ITM stage")

    @property
    def num_clusters(self) -> int:
        return self.clusters.num_clusters


def _data_bounds(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    return data.samples.min(axis=0), data.samples.max(axis=0)


def _init_som(config: SomConfig, data: Dataset, init: str) -> SomModel:
    if init == "linear":
        return init_linear(config, data.samples)
    if init == "random":
        return init_random(config, data.dim, _data_bounds(data))
    raise ValueError(f"unknown init {init!r}; choose 'linear' or 'random'")


def _finish(
    mode: str,
    som: SomModel,
    data: Dataset,
    itm: ItmGraph | None,
    normalization: NormalizationParams | None,
    beta: float | None,
    phi: float,
) -> HulsModel:
    u = compute_umatrix(som)
    cmap = watershed(u, som, phi)
    _, scores = bmu_scan(som, data.samples)
    return HulsModel(
        mode=mode,
        som=som,
        umatrix=u,
        clusters=cmap,
        itm=itm,
        normalization=normalization,
        feature_names=data.feature_names,
        beta=beta,
        phi=float(phi),
        training_scores=scores,
        training_batch_ids=data.batch_ids,
    )


def train_huls(
    data: Dataset,
    som_config: SomConfig,
    beta: float,
    phi: float,
    normalization: NormalizationParams | None = None,
    init: str = "linear",
) -> HulsModel:
    """ITM-resample the (already normalized) data, then SOM + watershed.

    The SOM trains on the ITM node weights only; the raw samples never reach
    it. Both stages are kept on the model so the resampling is auditable.
    """
    graph = itm_train(data, beta)
    resampled = resampled_set(graph)
    som0 = _init_som(som_config, resampled, init)
    som = som_train(som0, resampled)
    return _finish(MODE_HULS, som, data, graph, normalization, float(beta), phi)


def train_plain(
    data: Dataset,
    som_config: SomConfig,
    phi: float,
    normalization: NormalizationParams | None = None,
    init: str = "linear",
) -> HulsModel:
    """Baseline: the identical pipeline without the ITM stage."""
    som0 = _init_som(som_config, data, init)
    som = som_train(som0, data)
    return _finish(MODE_PLAIN, som, data, None, normalization, None, phi)


def normalize_for_model(model: HulsModel, data: Dataset) -> Dataset:
    """Apply the model's stored scaling to raw data (identity when absent)."""
    if data.dim != model.som.dim:
        raise ValueError(f"data has d={data.dim}, model expects d={model.som.dim}")
    if model.normalization is None:
        return data
    return apply_normalization(data, model.normalization)


@dataclass(frozen=True)
class ModelMetrics:
    name: str
    e_q: float
    e_t: float
    num_clusters: int


@dataclass(frozen=True)
class ComparisonReport:
    """E_Q, E_T and cluster count for two models on shared evaluation data."""

    rows: tuple[ModelMetrics, ModelMetrics]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["model", "e_q", "e_t", "num_clusters"])
        for row in self.rows:
            writer.writerow([row.name, repr(row.e_q), repr(row.e_t), row.num_clusters])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def evaluate_model(model: HulsModel, eval_data: Dataset) -> ModelMetrics:
    """Mapping quality of one model on raw evaluation data."""
    scaled = normalize_for_model(model, eval_data)
    return ModelMetrics(
        name=model.mode,
        e_q=som_quantization_error(model.som, scaled),
        e_t=som_topographic_error(model.som, scaled),
        num_clusters=model.num_clusters,
    )


def compare_models(a: HulsModel, b: HulsModel, eval_data: Dataset) -> ComparisonReport:
    """Side-by-side mapping quality report; data is raw, scaled per model."""
    if a.som.dim != b.som.dim:
        raise ValueError("models were trained on different feature spaces")
    return ComparisonReport(rows=(evaluate_model(a, eval_data), evaluate_model(b, eval_data)))
