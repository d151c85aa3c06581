"""Online scoring against a trained model: score traces, phases, alarms."""

from __future__ import annotations

import csv
import io as _io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .pipeline import HulsModel, normalize_for_model
from .som import bmu_scan

RULE_FIXED = "fixed"
RULE_QUANTILE = "train_quantile"
RULE_MEAN_SIGMA = "train_mean_plus_3sigma"
RULES = (RULE_FIXED, RULE_QUANTILE, RULE_MEAN_SIGMA)


@dataclass(frozen=True)
class AlarmPolicy:
    """How the alarm threshold is derived.

    ``threshold`` must be resolved (a positive number) before scoring; the
    quantile and mean+3sigma rules derive it from training scores.
    """

    rule: str = RULE_QUANTILE
    threshold: float | None = None
    quantile: float = 0.99

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise ValueError(f"unknown alarm rule {self.rule!r}; choose from {RULES}")
        if not 0 < self.quantile < 1:
            raise ValueError(f"quantile must be in (0, 1), got {self.quantile}")

    def resolved(self, threshold: float) -> "AlarmPolicy":
        return replace(self, threshold=float(threshold))


def resolve_threshold_from_scores(scores: np.ndarray, policy: AlarmPolicy) -> float:
    """Turn a policy into a concrete positive cutoff using training scores.

    The quantile rule uses linear interpolation between order statistics
    (numpy's default), mean+3sigma uses the population standard deviation.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("cannot resolve a threshold from empty training scores")
    if policy.rule == RULE_FIXED:
        if policy.threshold is None:
            raise ValueError("fixed alarm policy needs an explicit threshold")
        value = float(policy.threshold)
    elif policy.rule == RULE_QUANTILE:
        value = float(np.quantile(scores, policy.quantile))
    else:
        value = float(np.mean(scores) + 3.0 * np.std(scores))
    if not value > 0:
        raise ValueError(f"resolved threshold must be > 0, got {value}")
    return value


def resolve_threshold(model: HulsModel, training_data: Dataset, policy: AlarmPolicy) -> float:
    """Resolve the cutoff from raw training data scored against the model."""
    if training_data.length == 0:
        raise ValueError("cannot resolve a threshold from an empty dataset")
    scaled = normalize_for_model(model, training_data)
    _, scores = bmu_scan(model.som, scaled.samples)
    return resolve_threshold_from_scores(scores, policy)


@dataclass(frozen=True)
class MonitoringTrace:
    """Per-sample scoring record over a stream."""

    batch_ids: tuple[str, ...]
    bmu_positions: np.ndarray  # (L, 2) 1-based grid coordinates
    scores: np.ndarray
    phases: np.ndarray
    alarms: np.ndarray
    threshold: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "bmu_positions", np.asarray(self.bmu_positions, dtype=np.int64))
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=np.float64))
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=np.int64))
        object.__setattr__(self, "alarms", np.asarray(self.alarms, dtype=bool))

    @property
    def length(self) -> int:
        return len(self.batch_ids)

    def batch_runs(self) -> list[tuple[str, int, int]]:
        runs: list[tuple[str, int, int]] = []
        start = 0
        for i in range(1, self.length + 1):
            if i == self.length or self.batch_ids[i] != self.batch_ids[start]:
                runs.append((self.batch_ids[start], start, i))
                start = i
        return runs


def score_stream(model: HulsModel, data: Dataset, policy: AlarmPolicy) -> MonitoringTrace:
    """Score raw samples: normalize, find BMU, read off cluster, flag alarms.

    Scoring is stateless per sample; the policy must carry a resolved
    threshold.
    """
    if policy.threshold is None:
        raise ValueError("alarm policy is unresolved; call resolve_threshold first")
    if data.feature_names != model.feature_names:
        raise ValueError(
            f"feature names {list(data.feature_names)} do not match "
            f"model features {list(model.feature_names)}"
        )
    scaled = normalize_for_model(model, data)
    idx, scores = bmu_scan(model.som, scaled.samples)
    n = model.som.config.n
    rows = idx // n
    cols = idx % n
    phases = model.clusters.labels[rows, cols]
    positions = np.stack([rows + 1, cols + 1], axis=1)
    threshold = float(policy.threshold)
    return MonitoringTrace(
        batch_ids=data.batch_ids,
        bmu_positions=positions,
        scores=scores,
        phases=phases,
        alarms=scores > threshold,
        threshold=threshold,
    )


def phase_trajectory(trace: MonitoringTrace) -> list[tuple[int, int, int]]:
    """Run-length encode the phase sequence as (label, start, duration).

    Runs never cross batch boundaries, so per-batch durations always sum to
    the batch length.
    """
    if trace.length == 0:
        raise ValueError("empty trace")
    runs: list[tuple[int, int, int]] = []
    for _, start, stop in trace.batch_runs():
        run_start = start
        for i in range(start + 1, stop + 1):
            if i == stop or trace.phases[i] != trace.phases[run_start]:
                runs.append((int(trace.phases[run_start]), run_start, i - run_start))
                run_start = i
    return runs


def recovery_time(trace: MonitoringTrace, batch_id: str) -> int:
    """Samples remaining after the final alarm of a batch (0 if alarm-free)."""
    for bid, start, stop in trace.batch_runs():
        if bid == batch_id:
            alarms = np.flatnonzero(trace.alarms[start:stop])
            if alarms.size == 0:
                return 0
            return int(stop - start - 1 - alarms[-1])
    raise KeyError(f"unknown batch id {batch_id!r}")


def trace_to_csv(trace: MonitoringTrace, path: str | Path | None = None) -> str:
    """Trace export: index, batch, e, c, alarm."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "batch", "e", "c", "alarm"])
    for i in range(trace.length):
        writer.writerow(
            [
                i,
                trace.batch_ids[i],
                repr(float(trace.scores[i])),
                int(trace.phases[i]),
                int(trace.alarms[i]),
            ]
        )
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def summary_to_csv(trace: MonitoringTrace, path: str | Path | None = None) -> str:
    """Per-batch alarm counts plus the recovery metric."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["batch", "samples", "alarms", "alarm_rate", "recovery_samples"])
    for bid, start, stop in trace.batch_runs():
        alarms = int(np.sum(trace.alarms[start:stop]))
        writer.writerow(
            [
                bid,
                stop - start,
                alarms,
                repr(alarms / (stop - start)),
                recovery_time(trace, bid),
            ]
        )
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def phases_to_csv(trace: MonitoringTrace, path: str | Path | None = None) -> str:
    """Phase-duration table: batch, phase label, start, duration."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["batch", "phase", "start", "duration"])
    for label, start, duration in phase_trajectory(trace):
        writer.writerow([trace.batch_ids[start], label, start, duration])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
