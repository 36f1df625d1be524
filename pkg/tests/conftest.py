import numpy as np
import pytest

from stresscast.config import config_from_dict
from stresscast.ingest import classify_sensors
from stresscast.pipeline import (
    annotate_train_stats,
    apply_standardizer,
    fit_standardizer,
    sample_windows,
    split_time,
)
from stresscast.synth import make_synthetic

SMALL_T = 12
SMALL_HORIZON = 4


class Prepared:
    """Standardized table plus windows for a small synthetic run."""

    def __init__(self, rows=400, n_continuous=2, n_discrete=1, seed=3, t=SMALL_T, horizon=SMALL_HORIZON):
        self.dataset = make_synthetic(
            rows=rows, n_continuous=n_continuous, n_discrete=n_discrete, seed=seed, name="fixture"
        )
        self.t = t
        self.horizon = horizon
        self.seed = seed
        self.metas = classify_sensors(self.dataset)
        cfg = config_from_dict({"window": {"t": t, "horizon": horizon}})
        self.split = cfg.split
        self.segments = split_time(self.dataset.rows, self.split, min_segment_rows=t + horizon)
        self.train_seg, self.val_seg, self.test_seg = self.segments
        self.std = fit_standardizer(self.dataset.values, self.train_seg)
        self.table = apply_standardizer(self.std, self.dataset.values)
        annotate_train_stats(self.metas, self.std)
        self.test_windows = sample_windows(self.table, self.test_seg, t, horizon, 16, seed)


@pytest.fixture(scope="session")
def prepared():
    return Prepared()


@pytest.fixture(scope="session")
def small_dataset(prepared):
    return prepared.dataset


def random_window(rng, t=SMALL_T, horizon=SMALL_HORIZON, n=3):
    from stresscast.pipeline import WindowSample

    X = rng.standard_normal((t, n))
    Y = rng.standard_normal((horizon, n))
    X.flags.writeable = False
    Y.flags.writeable = False
    return WindowSample(X=X, Y=Y, origin=int(rng.integers(0, 10_000)))
