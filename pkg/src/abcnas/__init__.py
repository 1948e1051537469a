"""Seedable Artificial Bee Colony optimizer for continuous benchmarks and architecture search."""

from .colony import (
    BestRecord,
    Colony,
    ColonyConfig,
    ColonyError,
    ColonyState,
    EvaluationResult,
    FoodSource,
    HistoryRecord,
    PersistenceError,
    fitness_transform,
    roulette_select,
    run,
    selection_probabilities,
)

__version__ = "0.1.0"

__all__ = [
    "BestRecord",
    "Colony",
    "ColonyConfig",
    "ColonyError",
    "ColonyState",
    "EvaluationResult",
    "FoodSource",
    "HistoryRecord",
    "PersistenceError",
    "fitness_transform",
    "roulette_select",
    "run",
    "selection_probabilities",
]
