import json
import os

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA_DIR = os.path.join(ROOT, "data")


@pytest.fixture(scope="session")
def oracles():
    with open(os.path.join(DATA_DIR, "golden", "oracles.json")) as f:
        return json.load(f)


@pytest.fixture(scope="session")
def toy_model_path():
    return os.path.join(DATA_DIR, "models", "toy-n1-p3.json")


@pytest.fixture(scope="session")
def profile_path():
    def _path(name):
        return os.path.join(DATA_DIR, "profiles", f"{name}.json")

    return _path


@pytest.fixture(scope="session")
def model_path():
    def _path(name):
        return os.path.join(DATA_DIR, "models", f"{name}.json")

    return _path


@pytest.fixture(scope="session")
def golden():
    def _load(name):
        with open(os.path.join(DATA_DIR, "golden", f"{name}.json")) as f:
            return json.load(f)

    return _load
