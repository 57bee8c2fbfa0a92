import json
import math

import numpy as np
import pytest

from levyscale.bench import PARAM_SETS, rational_model, theta_model
from levyscale.model import model_from_dict

GRID = np.arange(1, 101) / 20.0


def stable(alpha=1.5):
    """psi(t) = t**alpha."""
    return model_from_dict({"components": [
        {"type": "stable", "c": 1 / math.gamma(-alpha), "alpha": alpha}]})


def brownian(sigma=1.0, mu=0.0):
    comps = [{"type": "gaussian", "sigma": sigma}]
    if mu:
        comps.append({"type": "drift", "mu": mu})
    return model_from_dict({"components": comps})


@pytest.fixture(scope="session")
def theta():
    return theta_model(0.25)


@pytest.fixture(scope="session")
def theta0():
    return theta_model(0.0)


@pytest.fixture(scope="session")
def rational():
    return rational_model()


@pytest.fixture(scope="session")
def set1():
    return PARAM_SETS[1].model()


@pytest.fixture(scope="session")
def set4():
    return PARAM_SETS[4].model()


@pytest.fixture
def model_file(tmp_path):
    def write(model_dict, name="model.json"):
        path = tmp_path / name
        path.write_text(json.dumps(model_dict))
        return str(path)
    return write
