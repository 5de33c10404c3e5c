import numpy as np
import pytest

from ruleflow import AttributeSchema
from ruleflow.data import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def unit_schema():
    """Three anonymous numeric features already in [0, 1]."""
    return [AttributeSchema(f"x{j}", "numeric", 0.0, 1.0) for j in range(3)]


@pytest.fixture
def unit_dataset(unit_schema, rng):
    rows = rng.uniform(size=(40, 3))
    labels = (rows[:, 0] > 0.5).astype(int)
    return Dataset(unit_schema, rows, labels, ["c0", "c1"])


def make_unit_dataset(rows, labels, n_features=None, n_classes=None):
    n_features = n_features or rows.shape[1]
    schema = [AttributeSchema(f"x{j}", "numeric", 0.0, 1.0)
              for j in range(n_features)]
    k = n_classes or int(max(labels)) + 1
    return Dataset(schema, rows, np.asarray(labels, dtype=int),
                   [f"c{i}" for i in range(max(k, 2))])
