import numpy as np
import pytest

from huls.dataset import Dataset, apply_normalization, fit_normalization
from huls.monitor import (
    AlarmPolicy,
    phase_trajectory,
    phases_to_csv,
    recovery_time,
    resolve_threshold,
    resolve_threshold_from_scores,
    score_stream,
    summary_to_csv,
    trace_to_csv,
)
from huls.pipeline import train_plain
from huls.som import SomConfig, find_bmu
from huls.umatrix import assign_cluster


def _dataset(samples, batches=None):
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    names = tuple(f"f{i}" for i in range(samples.shape[1]))
    batches = batches or ("b",) * samples.shape[0]
    return Dataset(samples, names, batches)


def _tiny_model(seed=1):
    rng = np.random.default_rng(seed)
    left = rng.normal(0.2, 0.02, size=(30, 2))
    right = rng.normal(0.8, 0.02, size=(30, 2))
    raw = _dataset(np.vstack([left, right]))
    params = fit_normalization(raw)
    scaled = apply_normalization(raw, params)
    cfg = SomConfig(m=5, n=5, epochs=60, alpha0=0.05, sigma0=2.0, rng_seed=seed)
    model = train_plain(scaled, cfg, phi=10.0, normalization=params)
    return model, raw


class TestResolveThreshold:
    def test_fixed_policy_echoes(self):
        policy = AlarmPolicy(rule="fixed", threshold=0.5)
        assert resolve_threshold_from_scores(np.array([1.0, 2.0]), policy) == 0.5

    def test_mean_plus_3sigma_with_constant_scores(self):
        policy = AlarmPolicy(rule="train_mean_plus_3sigma")
        scores = np.full(20, 0.7)
        assert resolve_threshold_from_scores(scores, policy) == pytest.approx(0.7, abs=1e-12)

    def test_quantile_linear_interpolation(self):
        policy = AlarmPolicy(rule="train_quantile", quantile=0.99)
        scores = np.arange(100, dtype=float)
        got = resolve_threshold_from_scores(scores, policy)
        assert got == pytest.approx(98.01, abs=1e-12)

    def test_resolves_from_model_and_data(self):
        model, raw = _tiny_model()
        policy = AlarmPolicy(rule="train_quantile", quantile=0.9)
        got = resolve_threshold(model, raw, policy)
        assert got == pytest.approx(np.quantile(model.training_scores, 0.9), rel=1e-12)

    def test_empty_scores_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            resolve_threshold_from_scores(np.array([]), AlarmPolicy())

    def test_unknown_rule_rejected(self):
        with pytest.raises(ValueError, match="rule"):
            AlarmPolicy(rule="magic")

    def test_fixed_without_threshold_rejected(self):
        with pytest.raises(ValueError, match="threshold"):
            resolve_threshold_from_scores(np.ones(3), AlarmPolicy(rule="fixed"))


class TestScoreStream:
    def test_sample_on_som_weight_scores_zero(self):
        # model without stored normalization scores its inputs as-is, so a
        # sample placed exactly on a neuron weight gives e = 0
        rng = np.random.default_rng(4)
        data = _dataset(rng.uniform(size=(40, 2)))
        cfg = SomConfig(m=4, n=4, epochs=30, alpha0=0.05, sigma0=2.0, rng_seed=4)
        model = train_plain(data, cfg, phi=10.0, normalization=None)
        w = model.som.weights[2, 2]
        probe = Dataset(w[None, :], data.feature_names, ("q",))
        trace = score_stream(model, probe, AlarmPolicy(threshold=0.5))
        assert trace.scores[0] == 0.0
        assert not trace.alarms[0]
        expected_cluster = assign_cluster(model.clusters, tuple(trace.bmu_positions[0]))
        assert trace.phases[0] == expected_cluster

    def test_far_sample_raises_alarm(self):
        model, raw = _tiny_model()
        thr = resolve_threshold(model, raw, AlarmPolicy())
        far = Dataset(np.full((1, 2), 100.0), raw.feature_names, ("q",))
        trace = score_stream(model, far, AlarmPolicy().resolved(thr))
        assert trace.alarms[0]
        assert trace.scores[0] > thr

    def test_alarm_flag_consistent_with_threshold(self):
        model, raw = _tiny_model()
        thr = resolve_threshold(model, raw, AlarmPolicy(quantile=0.5))
        trace = score_stream(model, raw, AlarmPolicy().resolved(thr))
        assert np.array_equal(trace.alarms, trace.scores > thr)

    def test_training_scores_bounded_by_max_training_score(self):
        model, raw = _tiny_model()
        trace = score_stream(model, raw, AlarmPolicy(threshold=1.0))
        assert trace.scores.max() <= model.training_scores.max() + 1e-15

    def test_permutation_equivariance(self):
        model, raw = _tiny_model()
        # reversing the (single-batch) stream reverses the trace exactly
        rev = Dataset(raw.samples[::-1], raw.feature_names, raw.batch_ids)
        a = score_stream(model, raw, AlarmPolicy(threshold=0.5))
        b = score_stream(model, rev, AlarmPolicy(threshold=0.5))
        assert np.array_equal(b.scores, a.scores[::-1])
        assert np.array_equal(b.phases, a.phases[::-1])

    def test_unresolved_policy_rejected(self):
        model, raw = _tiny_model()
        with pytest.raises(ValueError, match="unresolved"):
            score_stream(model, raw, AlarmPolicy())

    def test_feature_name_mismatch_names_columns(self):
        model, raw = _tiny_model()
        other = Dataset(raw.samples, ("x", "y"), raw.batch_ids)
        with pytest.raises(ValueError, match="x"):
            score_stream(model, other, AlarmPolicy(threshold=0.5))

    def test_scores_match_find_bmu(self):
        model, raw = _tiny_model()
        scaled = apply_normalization(raw, model.normalization)
        trace = score_stream(model, raw, AlarmPolicy(threshold=0.5))
        for i in (0, 10, 59):
            ref = find_bmu(model.som, scaled.samples[i])
            assert trace.scores[i] == ref.distance
            assert tuple(trace.bmu_positions[i]) == ref.position

    def test_mean_trace_score_equals_quantization_error(self):
        from huls.som import quantization_error

        model, raw = _tiny_model()
        scaled = apply_normalization(raw, model.normalization)
        trace = score_stream(model, raw, AlarmPolicy(threshold=0.5))
        assert abs(trace.scores.mean() - quantization_error(model.som, scaled)) <= 1e-12


class TestPhaseTrajectory:
    def _trace(self, phases, batches):
        n = len(phases)
        from huls.monitor import MonitoringTrace

        return MonitoringTrace(
            batch_ids=tuple(batches),
            bmu_positions=np.ones((n, 2), dtype=np.int64),
            scores=np.zeros(n),
            phases=np.asarray(phases),
            alarms=np.zeros(n, dtype=bool),
            threshold=1.0,
        )

    def test_constant_phase_single_run(self):
        trace = self._trace([2] * 10, ["b"] * 10)
        assert phase_trajectory(trace) == [(2, 0, 10)]

    def test_rle_example(self):
        trace = self._trace([1, 1, 2, 2, 2, 1], ["b"] * 6)
        assert phase_trajectory(trace) == [(1, 0, 2), (2, 2, 3), (1, 5, 1)]

    def test_runs_break_at_batch_boundaries(self):
        trace = self._trace([1, 1, 1, 1], ["a", "a", "b", "b"])
        assert phase_trajectory(trace) == [(1, 0, 2), (1, 2, 2)]

    def test_durations_sum_to_batch_lengths(self):
        rng = np.random.default_rng(2)
        phases = rng.integers(1, 4, size=30)
        batches = ["a"] * 12 + ["b"] * 18
        runs = phase_trajectory(self._trace(phases, batches))
        totals = {}
        for label, start, duration in runs:
            totals.setdefault(batches[start], 0)
            totals[batches[start]] += duration
        assert totals == {"a": 12, "b": 18}

    def test_recovery_time(self):
        trace = self._trace([1] * 6, ["b"] * 6)
        object.__setattr__(trace, "alarms", np.array([0, 1, 0, 1, 0, 0], dtype=bool))
        assert recovery_time(trace, "b") == 2

    def test_recovery_time_without_alarms_is_zero(self):
        trace = self._trace([1] * 4, ["b"] * 4)
        assert recovery_time(trace, "b") == 0


class TestExports:
    def test_trace_csv_columns(self):
        model, raw = _tiny_model()
        trace = score_stream(model, raw, AlarmPolicy(threshold=0.5))
        lines = trace_to_csv(trace).splitlines()
        assert lines[0] == "index,batch,e,c,alarm"
        assert len(lines) == trace.length + 1

    def test_summary_has_one_row_per_batch(self):
        model, raw = _tiny_model()
        two = Dataset(raw.samples, raw.feature_names, ("a",) * 30 + ("b",) * 30)
        trace = score_stream(model, two, AlarmPolicy(threshold=0.5))
        lines = summary_to_csv(trace).splitlines()
        assert lines[0] == "batch,samples,alarms,alarm_rate,recovery_samples"
        assert len(lines) == 3

    def test_phase_table_row_per_run(self):
        model, raw = _tiny_model()
        trace = score_stream(model, raw, AlarmPolicy(threshold=0.5))
        lines = phases_to_csv(trace).splitlines()
        assert lines[0] == "batch,phase,start,duration"
        assert len(lines) == len(phase_trajectory(trace)) + 1
