"""Model persistence (versioned JSON) and U-matrix / cluster grid exports.

JSON numbers are written with repr semantics, so save/load round trips are
bit-faithful and repeated saves of the same model are byte-identical.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .dataset import NormalizationParams
from .itm import ItmGraph
from .pipeline import HulsModel
from .som import SomConfig, SomModel
from .umatrix import ClusterMap, UMatrix, quantize_heights

FORMAT_NAME = "huls-model"
FORMAT_VERSION = 1


def _som_section(som: SomModel) -> dict:
    cfg = som.config
    return {
        "config": {
            "m": cfg.m,
            "n": cfg.n,
            "epochs": cfg.epochs,
            "alpha0": cfg.alpha0,
            "sigma0": cfg.sigma0,
            "rng_seed": cfg.rng_seed,
            "shuffle_each_epoch": cfg.shuffle_each_epoch,
        },
        "dim": som.dim,
        "weights": som.weights.ravel().tolist(),
        "update_counts": som.update_counts.ravel().tolist(),
    }


def _som_from_section(section: dict) -> SomModel:
    cfg = SomConfig(**section["config"])
    dim = int(section["dim"])
    weights = np.array(section["weights"], dtype=np.float64).reshape(cfg.m, cfg.n, dim)
    counts = np.array(section["update_counts"], dtype=np.int64).reshape(cfg.m, cfg.n)
    return SomModel(weights=weights, update_counts=counts, config=cfg, dim=dim)


def _itm_section(graph: ItmGraph) -> dict:
    return {
        "beta": graph.beta,
        "dim": graph.dim,
        "feature_names": list(graph.feature_names),
        "next_id": graph._next_id,
        "nodes": [[i, graph.weight(i).tolist()] for i in graph.node_ids()],
        "edges": [list(e) for e in graph.edge_list()],
    }


def _itm_from_section(section: dict) -> ItmGraph:
    graph = ItmGraph(
        beta=section["beta"], dim=int(section["dim"]), feature_names=section["feature_names"]
    )
    for node_id, weight in section["nodes"]:
        graph._weights[int(node_id)] = np.array(weight, dtype=np.float64)
        graph._edges[int(node_id)] = set()
    for a, b in section["edges"]:
        graph.ensure_edge(int(a), int(b))
    graph._next_id = int(section["next_id"])
    graph._invalidate()
    return graph


def model_to_document(model: HulsModel) -> dict:
    norm = model.normalization
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "mode": model.mode,
        "feature_names": list(model.feature_names),
        "beta": model.beta,
        "phi": model.phi,
        "normalization": None
        if norm is None
        else {
            "method": norm.method,
            "mins": norm.mins.tolist(),
            "maxs": norm.maxs.tolist(),
            "feature_names": list(norm.feature_names),
        },
        "som": _som_section(model.som),
        "itm": None if model.itm is None else _itm_section(model.itm),
        "umatrix": model.umatrix.heights.ravel().tolist(),
        "clusters": {
            "labels": model.clusters.labels.ravel().tolist(),
            "num_clusters": model.clusters.num_clusters,
            "margin": model.clusters.margin,
        },
        "training": {
            "batch_ids": list(model.training_batch_ids),
            "scores": model.training_scores.tolist(),
        },
    }


def document_to_model(doc: dict) -> HulsModel:
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} document")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported document version {doc.get('version')!r}")
    som = _som_from_section(doc["som"])
    shape = (som.config.m, som.config.n)
    norm_doc = doc["normalization"]
    normalization = (
        None
        if norm_doc is None
        else NormalizationParams(
            method=norm_doc["method"],
            mins=np.array(norm_doc["mins"], dtype=np.float64),
            maxs=np.array(norm_doc["maxs"], dtype=np.float64),
            feature_names=tuple(norm_doc["feature_names"]),
        )
    )
    clusters_doc = doc["clusters"]
    return HulsModel(
        mode=doc["mode"],
        som=som,
        umatrix=UMatrix(np.array(doc["umatrix"], dtype=np.float64).reshape(shape)),
        clusters=ClusterMap(
            labels=np.array(clusters_doc["labels"], dtype=np.int64).reshape(shape),
            num_clusters=int(clusters_doc["num_clusters"]),
            margin=float(clusters_doc["margin"]),
        ),
        itm=None if doc["itm"] is None else _itm_from_section(doc["itm"]),
        normalization=normalization,
        feature_names=tuple(doc["feature_names"]),
        beta=doc["beta"],
        phi=float(doc["phi"]),
        training_scores=np.array(doc["training"]["scores"], dtype=np.float64),
        training_batch_ids=tuple(doc["training"]["batch_ids"]),
    )


def save_model(model: HulsModel, path: str | Path) -> None:
    text = json.dumps(model_to_document(model), separators=(",", ":")) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_model(path: str | Path) -> HulsModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    return document_to_model(json.loads(path.read_text(encoding="utf-8")))


def grid_to_csv(grid: np.ndarray, path: str | Path | None = None, fmt=repr) -> str:
    """M x N grid as CSV rows; floats use repr for exact round trips."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(grid):
        writer.writerow([fmt(v) for v in row.tolist()])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def umatrix_to_csv(u: UMatrix, path: str | Path | None = None) -> str:
    return grid_to_csv(u.heights, path, fmt=lambda v: repr(float(v)))


def clusters_to_csv(cmap: ClusterMap, path: str | Path | None = None) -> str:
    return grid_to_csv(cmap.labels, path, fmt=lambda v: str(int(v)))


def umatrix_to_pgm(u: UMatrix, path: str | Path | None = None) -> bytes:
    """Binary 8-bit PGM of the quantized height field."""
    levels = quantize_heights(u.heights).astype(np.uint8)
    m, n = levels.shape
    payload = f"P5\n{n} {m}\n255\n".encode("ascii") + levels.tobytes()
    if path is not None:
        Path(path).write_bytes(payload)
    return payload
