import time

import pytest

from pbfml import models, pipeline
from pbfml.dataset import minmax_scale, train_test_split
from pbfml.synth import SynthConfig

FULL_SCALE_KINDS = (
    "gaussian_nb",
    "logistic_regression",
    "svm_linear",
    "decision_tree",
    "random_forest",
    "adaboost",
    "bagging",
)


@pytest.fixture(scope="session")
def full_scale_run():
    """One default-scale synthetic build with models fitted on it.

    Built once per session because rendering 117 x 27 layers and fitting
    seven classifiers takes around a minute; the wall time is recorded so
    the runtime budget can be checked.
    """
    t0 = time.perf_counter()
    ds, median, coupons, truth = pipeline.synthetic_dataset(SynthConfig(seed=0))
    train, test = train_test_split(ds, 0.2, seed=0)
    train_s, test_s, _ = minmax_scale(train, test)

    fitted, accuracy = {}, {}
    for kind in FULL_SCALE_KINDS:
        model = models.fit(models.ModelSpec(kind, seed=0), train_s)
        fitted[kind] = model
        accuracy[kind] = float((model.predict(test_s.X) == test_s.labels).mean())
    elapsed = time.perf_counter() - t0

    return {
        "dataset": ds,
        "median": median,
        "train": train_s,
        "test": test_s,
        "models": fitted,
        "accuracy": accuracy,
        "elapsed_s": elapsed,
    }
