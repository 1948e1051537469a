"""Continuous box domain and classical benchmark functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .colony import ColonyError, EvaluationResult


def sample_coordinate(lower: float, upper: float, u: float) -> float:
    return lower + u * (upper - lower)


def perturb(position: np.ndarray, partner: np.ndarray, index: int, phi: float) -> np.ndarray:
    """Move one coordinate relative to a partner source: x_i + phi * (x_i - partner_i)."""
    out = np.array(position, dtype=np.float64, copy=True)
    out[index] = out[index] + phi * (out[index] - partner[index])
    return out


class ContinuousBox:
    """Axis-aligned box ``[lower_i, upper_i]`` searched with the classical ABC moves."""

    uses_partner = True

    def __init__(self, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=np.float64))
        upper = np.atleast_1d(np.asarray(upper, dtype=np.float64))
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ColonyError("lower and upper must be 1-d vectors of the same length")
        if lower.size == 0 or not np.all(lower < upper):
            raise ColonyError("box requires lower_i < upper_i in every dimension")
        self.lower = lower
        self.upper = upper

    @classmethod
    def cube(cls, low: float, high: float, dimension: int) -> "ContinuousBox":
        return cls(np.full(dimension, low), np.full(dimension, high))

    @property
    def dimension(self) -> int:
        return self.lower.size

    def random_position(self, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(self.dimension)
        return self.lower + u * (self.upper - self.lower)

    def neighbor(self, position, partner, rng: np.random.Generator) -> np.ndarray:
        position = np.asarray(position, dtype=np.float64)
        partner = np.asarray(partner, dtype=np.float64)
        if position.shape != (self.dimension,) or partner.shape != (self.dimension,):
            raise ColonyError(
                f"dimension mismatch: box has {self.dimension}, got {position.shape} and {partner.shape}"
            )
        index = int(rng.integers(self.dimension))
        phi = float(rng.uniform(-1.0, 1.0))
        return self.clamp(perturb(position, partner, index, phi))

    def clamp(self, position: np.ndarray) -> np.ndarray:
        return np.clip(position, self.lower, self.upper)

    def contains(self, position) -> bool:
        p = np.asarray(position)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))

    def encode(self, position) -> str:
        return " ".join(repr(float(v)) for v in position)

    def decode(self, text: str) -> np.ndarray:
        return np.array([float(v) for v in text.split()], dtype=np.float64)


def sphere(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(x * x))


def rosenbrock(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def rastrigin(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


@dataclass(frozen=True)
class BenchmarkFunction:
    name: str
    evaluate: Callable[[np.ndarray], float]
    optimum: Callable[[int], np.ndarray]
    optimum_value: float = 0.0
    default_bounds: tuple[float, float] = (-5.0, 5.0)


BENCHMARKS = {
    "sphere": BenchmarkFunction("sphere", sphere, lambda n: np.zeros(n), 0.0, (-5.0, 5.0)),
    "rosenbrock": BenchmarkFunction("rosenbrock", rosenbrock, lambda n: np.ones(n), 0.0, (-5.0, 10.0)),
    "rastrigin": BenchmarkFunction("rastrigin", rastrigin, lambda n: np.zeros(n), 0.0, (-5.12, 5.12)),
}


def get_benchmark(name: str) -> BenchmarkFunction:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise ColonyError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}") from None


def evaluate_benchmark(fn: BenchmarkFunction | str, position) -> float:
    if isinstance(fn, str):
        fn = get_benchmark(fn)
    return fn.evaluate(position)


class BenchmarkStrategy:
    """Pass-through evaluation of a benchmark function."""

    def __init__(self, fn: BenchmarkFunction | str):
        self.fn = get_benchmark(fn) if isinstance(fn, str) else fn

    def evaluate(self, position) -> EvaluationResult:
        return EvaluationResult(self.fn.evaluate(position))
