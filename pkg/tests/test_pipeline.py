import numpy as np
import pytest

from huls.dataset import Dataset
from huls.itm import itm_train, resampled_set
from huls.pipeline import (
    MODE_HULS,
    MODE_PLAIN,
    compare_models,
    evaluate_model,
    train_huls,
    train_plain,
)
from huls.som import SomConfig, init_linear
from huls.som import train as som_train
from huls.umatrix import compute_umatrix, watershed


def _dataset(samples, batches=None):
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    names = tuple(f"f{i}" for i in range(samples.shape[1]))
    batches = batches or ("b",) * samples.shape[0]
    return Dataset(samples, names, batches)


def _increasing_gap_dataset(count=40, dim=2):
    gaps = 0.02 * 1.05 ** np.arange(count - 1)
    xs = np.concatenate([[0.0], np.cumsum(gaps)])[:count]
    samples = np.stack([xs, np.zeros(count)], axis=1)[:, :dim]
    return _dataset(samples)


CFG = SomConfig(m=6, n=6, epochs=40, alpha0=0.05, sigma0=2.0, rng_seed=1)


class TestTrainHuls:
    def test_som_trains_on_itm_nodes_only(self):
        rng = np.random.default_rng(0)
        data = _dataset(rng.uniform(size=(60, 2)))
        model = train_huls(data, CFG, beta=0.2, phi=10.0)
        assert model.mode == MODE_HULS
        assert model.itm is not None
        # composition: rebuilding the stages by hand gives identical output
        graph = itm_train(data, 0.2)
        nodes = resampled_set(graph)
        som = som_train(init_linear(CFG, nodes.samples), nodes)
        assert np.array_equal(model.som.weights, som.weights)
        u = compute_umatrix(som)
        assert np.array_equal(model.umatrix.heights, u.heights)
        cmap = watershed(u, som, 10.0)
        assert np.array_equal(model.clusters.labels, cmap.labels)
        assert model.clusters.num_clusters == cmap.num_clusters

    def test_beta_larger_than_diameter_degenerates_to_two_nodes(self):
        rng = np.random.default_rng(3)
        data = _dataset(rng.uniform(size=(30, 2)))
        model = train_huls(data, CFG, beta=10.0, phi=5.0)
        assert model.itm.node_count == 2
        assert model.training_scores.shape == (30,)

    def test_training_scores_cover_input(self):
        data = _increasing_gap_dataset()
        model = train_huls(data, CFG, beta=0.005, phi=5.0)
        assert model.training_scores.shape == (data.length,)
        assert np.all(model.training_scores >= 0)

    def test_balanced_data_resampling_noop_matches_plain(self):
        # strictly growing gaps with beta below the smallest gap: the ITM
        # keeps every sample in order, so both pipelines see identical input
        data = _increasing_gap_dataset()
        hm = train_huls(data, CFG, beta=0.005, phi=10.0)
        pm = train_plain(data, CFG, phi=10.0)
        assert np.array_equal(resampled_set(hm.itm).samples, data.samples)
        assert np.array_equal(hm.som.weights, pm.som.weights)
        assert hm.num_clusters == pm.num_clusters

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            _dataset(np.zeros((0, 2)))

    def test_duplicated_mass_hurts_plain_som_coverage(self):
        # classic unbalanced case: one point duplicated en masse plus a few
        # rare distinct points; resampling restores coverage of the rare ones
        rng = np.random.default_rng(5)
        blob = np.zeros((300, 2)) + 0.5
        rare = rng.uniform(2.0, 3.0, size=(10, 2))
        data = _dataset(np.vstack([blob, rare]))
        cfg = SomConfig(m=5, n=5, epochs=60, alpha0=0.05, sigma0=2.0, rng_seed=2)
        hm = train_huls(data, cfg, beta=0.05, phi=10.0)
        pm = train_plain(data, cfg, phi=10.0)
        h = evaluate_model(hm, data)
        p = evaluate_model(pm, data)
        assert h.e_q < p.e_q


class TestTrainPlain:
    def test_mode_and_no_itm(self):
        data = _increasing_gap_dataset()
        model = train_plain(data, CFG, phi=10.0)
        assert model.mode == MODE_PLAIN
        assert model.itm is None
        assert model.beta is None

    def test_deterministic(self):
        data = _increasing_gap_dataset()
        a = train_plain(data, CFG, phi=10.0)
        b = train_plain(data, CFG, phi=10.0)
        assert np.array_equal(a.som.weights, b.som.weights)
        assert np.array_equal(a.clusters.labels, b.clusters.labels)


class TestCompare:
    def test_model_compared_with_itself_gives_identical_rows(self):
        data = _increasing_gap_dataset()
        model = train_plain(data, CFG, phi=10.0)
        report = compare_models(model, model, data)
        assert report.rows[0] == report.rows[1]

    def test_csv_schema(self):
        data = _increasing_gap_dataset()
        model = train_plain(data, CFG, phi=10.0)
        text = compare_models(model, model, data).to_csv()
        lines = text.splitlines()
        assert lines[0] == "model,e_q,e_t,num_clusters"
        assert len(lines) == 3
        cells = lines[1].split(",")
        assert cells[0] == MODE_PLAIN
        float(cells[1]), float(cells[2]), int(cells[3])

    def test_dimension_mismatch_rejected(self):
        a = train_plain(_increasing_gap_dataset(dim=2), CFG, phi=10.0)
        b = train_plain(_increasing_gap_dataset(dim=1), CFG, phi=10.0)
        with pytest.raises(ValueError, match="feature space"):
            compare_models(a, b, _increasing_gap_dataset(dim=2))
