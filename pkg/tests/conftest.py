import numpy as np
import pytest

from abcnas.datasets import load_dataset
from abcnas.evaluation import SurrogateStrategy
from abcnas.space import ArchitectureSpace, dense


@pytest.fixture
def small_space():
    return ArchitectureSpace(3, [dense(8), dense(16), dense(32), dense(64)])


@pytest.fixture
def surrogate(small_space):
    return SurrogateStrategy(small_space, 0)


@pytest.fixture(scope="session")
def moons():
    return load_dataset("moons", seed=0)


@pytest.fixture(scope="session")
def blobs():
    return load_dataset("blobs", seed=0, noise=0.5)


class Constant:
    """Evaluation strategy that returns the same objective for every position."""

    def __init__(self, value=1.0):
        self.value = value
        self.calls = 0

    def evaluate(self, position):
        from abcnas.colony import EvaluationResult

        self.calls += 1
        return EvaluationResult(self.value)


class Counting:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def evaluate(self, position):
        self.calls += 1
        return self.inner.evaluate(position)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
