import pathlib

import pytest

from potl.generate import chain_model
from potl.model import load_model

ROOT = pathlib.Path(__file__).resolve().parent.parent


@pytest.fixture
def chain():
    return chain_model()


@pytest.fixture(scope="session")
def attack_graph():
    return load_model(str(ROOT / "models" / "attack-graph.json"))


@pytest.fixture(scope="session")
def attack_graph_path():
    return str(ROOT / "models" / "attack-graph.json")


@pytest.fixture(scope="session")
def chain_path():
    return str(ROOT / "models" / "chain.json")


@pytest.fixture(scope="session")
def golden_path():
    return ROOT / "tests" / "golden" / "attack_graph_oracle.json"
