import numpy as np
import pytest

from distwcc.graph import Graph
from helpers import BOWTIE, complete


@pytest.fixture
def k3():
    return complete(3)


@pytest.fixture
def bowtie():
    return Graph.from_edges(BOWTIE)


@pytest.fixture
def path3():
    return Graph.from_edges([(0, 1), (1, 2)])


@pytest.fixture
def star4():
    return Graph.from_edges([(0, 1), (0, 2), (0, 3), (0, 4)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
