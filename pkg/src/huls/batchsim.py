"""Synthetic two-tank batch process: five correlated signals, five phases.

A supply tank drains through a valve into a reaction tank and a pump returns
the liquid after a settling time, so pressure, flow and level are strongly
coupled. Phases are defined by the commanded (pump, valve) combination; the
two ramp phases are brief, which makes the data unbalanced on purpose.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset

FEATURE_NAMES = ("P", "F", "L", "D", "Z")

PHASE_NAMES = ("ramp_fill", "fill", "settle", "ramp_transfer", "transfer")
#: 1-based ground-truth ids of the brief transition phases.
TRANSITION_PHASE_IDS = (1, 4)

FAULT_NONE = "none"
FAULT_E1 = "E1_vent"
FAULT_E2 = "E2_cross_section"
FAULT_E3 = "E3_level_gauge"
FAULT_MODES = (FAULT_NONE, FAULT_E1, FAULT_E2, FAULT_E3)

#: ground-truth phase ids in which each fault mechanism acts
PERTURBED_PHASES = {
    FAULT_E1: (1, 2),
    FAULT_E2: (1, 2),
    FAULT_E3: (1, 2, 3, 4, 5),
}

# valve opening and pump speed command per phase (crisp, read back as signals)
_VALVE_CMD = (0.5, 1.0, 0.0, 0.0, 0.0)
_PUMP_CMD = (0.0, 0.0, 0.0, 0.5, 1.0)

# first-order plant constants, tuned for readable [0, 1] traces
_LEVEL_START = 0.12
_LEVEL_TOTAL = 0.97  # conserved sum of both tank levels (equal areas)
_P_BASE = 0.10
_P_GAIN = 0.80
_F_BASE = 0.05
_K_FLOW = 0.9
_TAU_F = 1.4
_A_IN = 0.0136
_A_OUT = 0.0081


@dataclass(frozen=True)
class ProcessConfig:
    """One batch worth of schedule, noise and fault settings.

    ``base_durations`` are the nominal per-phase tick counts; stationary
    phases get small seeded extensions so batch lengths vary while the total
    stays within 200..220 samples.
    """

    base_durations: tuple[int, int, int, int, int] = (3, 76, 58, 3, 64)
    noise: tuple[float, float, float, float, float] = (0.01, 0.01, 0.01, 0.0, 0.0)
    rng_seed: int = 0
    fault: str = FAULT_NONE
    flow_jitter: float = 0.02
    level_jitter: float = 0.01
    e1_flow_factor: float = 0.55
    e2_flow_factor: float = 0.6
    e2_fill_extension: int = 30
    e3_level_shift: float = 0.12

    def __post_init__(self) -> None:
        if len(self.base_durations) != 5:
            raise ValueError("base_durations must list 5 phases")
        if any(d <= 0 for d in self.base_durations):
            raise ValueError("phase durations must be positive")
        total = sum(self.base_durations)
        if not 200 <= total <= 220:
            raise ValueError(f"nominal batch length {total} outside [200, 220]")
        if len(self.noise) != 5 or any(a < 0 for a in self.noise):
            raise ValueError("noise must give 5 nonnegative amplitudes")
        if not 0 <= self.flow_jitter < 1 or self.level_jitter < 0:
            raise ValueError("jitter amplitudes out of range")
        if self.fault not in FAULT_MODES:
            raise ValueError(f"unknown fault mode {self.fault!r}; choose from {FAULT_MODES}")


@dataclass(frozen=True)
class BatchRecord:
    """Generated signals plus the per-tick ground-truth phase id."""

    samples: np.ndarray  # (T, 5) columns P, F, L, D, Z
    phases: np.ndarray  # (T,) ints in 1..5
    fault: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=np.int64))

    @property
    def length(self) -> int:
        return self.samples.shape[0]


def _realized_durations(config: ProcessConfig, rng: np.random.Generator) -> list[int]:
    budget = 220 - sum(config.base_durations)
    extras = rng.integers(0, budget // 3 + 1, size=3)
    durations = list(config.base_durations)
    for phase_index, extra in zip((1, 2, 4), extras):
        durations[phase_index] += int(extra)
    if config.fault == FAULT_E2:
        durations[1] += config.e2_fill_extension
        durations[2] -= config.e2_fill_extension
        if durations[2] <= 0:
            raise ValueError("E2 fill extension leaves no settle phase")
    return durations


def generate_batch(config: ProcessConfig) -> BatchRecord:
    """Simulate one batch; deterministic for a given config."""
    rng = np.random.default_rng(config.rng_seed)
    durations = _realized_durations(config, rng)
    total = sum(durations)
    # batch-to-batch process variation: supply charge and valve behaviour
    level_total = _LEVEL_TOTAL + rng.uniform(-config.level_jitter, config.level_jitter)
    flow_coeff = _K_FLOW * (1.0 + rng.uniform(-config.flow_jitter, config.flow_jitter))
    noise = rng.standard_normal((total, 5)) * np.asarray(config.noise)

    phases = np.repeat(np.arange(1, 6), durations)
    flow_factor = 1.0
    if config.fault == FAULT_E1:
        flow_factor = config.e1_flow_factor
    elif config.fault == FAULT_E2:
        flow_factor = config.e2_flow_factor

    samples = np.empty((total, 5))
    level = _LEVEL_START
    flow = 0.0
    for t in range(total):
        phase = phases[t] - 1
        valve = _VALVE_CMD[phase]
        pump = _PUMP_CMD[phase]
        pressure = _P_BASE + _P_GAIN * (level_total - level)
        flow_target = valve * flow_coeff * pressure * flow_factor
        flow += (flow_target - flow) / _TAU_F
        level += _A_IN * flow - _A_OUT * pump
        measured_level = level
        if config.fault == FAULT_E3:
            measured_level = level + config.e3_level_shift
        samples[t, 0] = pressure
        samples[t, 1] = _F_BASE + flow
        samples[t, 2] = measured_level
        samples[t, 3] = pump
        samples[t, 4] = valve
    samples += noise
    return BatchRecord(samples=samples, phases=phases, fault=config.fault)


@dataclass(frozen=True)
class CampaignTruth:
    """Side-channel ground truth, aligned with train + eval concatenation."""

    batch_ids: tuple[str, ...]
    phases: np.ndarray
    faults: tuple[str, ...]
    train_length: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=np.int64))

    @property
    def length(self) -> int:
        return len(self.batch_ids)

    def is_transition(self) -> np.ndarray:
        return np.isin(self.phases, TRANSITION_PHASE_IDS)


def generate_campaign(
    n_train: int,
    n_validate: int,
    faults: tuple[str, ...] = (),
    seed: int = 0,
    **config_overrides,
) -> tuple[Dataset, Dataset, CampaignTruth]:
    """Generate training batches T1.., validation batches N1.. and faults E1..

    Returns the training dataset, the evaluation dataset (validation batches
    followed by fault batches) and the ground truth for both; phase labels
    never travel inside the datasets. Keyword overrides (noise, durations,
    jitters, fault magnitudes) are applied to every batch config.
    """
    if n_train < 1 or n_validate < 1:
        raise ValueError("need at least one training and one validation batch")
    for fault in faults:
        if fault not in FAULT_MODES[1:]:
            raise ValueError(f"unknown fault mode {fault!r}")
    kwargs = dict(config_overrides)

    plan = (
        [(f"T{i + 1}", FAULT_NONE) for i in range(n_train)]
        + [(f"N{i + 1}", FAULT_NONE) for i in range(n_validate)]
        + [(f"E{i + 1}", fault) for i, fault in enumerate(faults)]
    )
    children = np.random.SeedSequence(seed).spawn(len(plan))
    records = []
    for (name, fault), child in zip(plan, children):
        cfg = ProcessConfig(rng_seed=int(child.generate_state(1)[0]), fault=fault, **kwargs)
        records.append((name, generate_batch(cfg)))

    def _stack(items):
        samples = np.vstack([rec.samples for _, rec in items])
        ids = tuple(name for name, rec in items for _ in range(rec.length))
        return Dataset(samples, FEATURE_NAMES, ids)

    train_items = records[:n_train]
    eval_items = records[n_train:]
    train_ds = _stack(train_items)
    eval_ds = _stack(eval_items)
    batch_ids = tuple(name for name, rec in records for _ in range(rec.length))
    phases = np.concatenate([rec.phases for _, rec in records])
    fault_tags = tuple(rec.fault for _, rec in records for _ in range(rec.length))
    truth = CampaignTruth(
        batch_ids=batch_ids,
        phases=phases,
        faults=fault_tags,
        train_length=train_ds.length,
    )
    return train_ds, eval_ds, truth


def write_truth_csv(truth: CampaignTruth, path: str | Path) -> None:
    """Sidecar ground-truth CSV: index, batch, phase id, fault tag."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "batch", "phase", "fault"])
        for i in range(truth.length):
            writer.writerow([i, truth.batch_ids[i], int(truth.phases[i]), truth.faults[i]])
