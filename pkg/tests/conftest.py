import hypothesis
import numpy as np
import pytest

from huls.som import SomConfig, SomModel

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def _warm_numba():
    # compile the training kernel once so per-test timings stay honest
    from huls.dataset import Dataset
    from huls.som import init_random, train

    cfg = SomConfig(m=2, n=2, epochs=1, alpha0=0.1, sigma0=1.0, rng_seed=0)
    model = init_random(cfg, 1, (np.zeros(1), np.ones(1)))
    train(model, Dataset(np.array([[0.5]]), ("x",), ("b",)))


def make_model(weights, update_counts=None, alpha0=0.02, sigma0=2.0, epochs=1, seed=0):
    """SomModel from an explicit (m, n, d) weight grid, counts default to 1."""
    weights = np.asarray(weights, dtype=np.float64)
    m, n, d = weights.shape
    if update_counts is None:
        update_counts = np.ones((m, n), dtype=np.int64)
    cfg = SomConfig(m=m, n=n, epochs=epochs, alpha0=alpha0, sigma0=sigma0, rng_seed=seed)
    return SomModel(
        weights=weights,
        update_counts=np.asarray(update_counts, dtype=np.int64),
        config=cfg,
        dim=d,
    )
