"""Artificial Bee Colony optimization loop, generic over a search domain.

A domain supplies ``random_position(rng)``, ``neighbor(position, partner, rng)``,
``encode(position) -> str`` and ``decode(str) -> position``; it may set
``uses_partner = False`` when its neighbor rule ignores the partner source.
An evaluation strategy supplies ``evaluate(position) -> EvaluationResult``.

All random draws come from one ``numpy.random.Generator`` owned by the
colony state, in a fixed order: initialization, then per iteration the
employee neighbors (source order), the onlooker selections and neighbors
(onlooker order) and the scout resamples (source order). Every phase draws
its whole batch of candidates before any of them is evaluated, so dispatching
evaluations to worker threads does not change the outcome.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Protocol, Sequence

import numpy as np

logger = logging.getLogger(__name__)

FAILED_OBJECTIVE = 1e9

PHASE_SCOUT = "scout"
PHASE_EMPLOYEE = "employee"
PHASE_ONLOOKER = "onlooker"
PHASE_FULL_TRAIN = "full_train"


class ColonyError(ValueError):
    """Invalid input to one of the colony operations."""


class PersistenceError(RuntimeError):
    """A history sink failed; ``best`` holds the in-memory record at that time."""

    def __init__(self, message: str, best: "BestRecord | None" = None):
        super().__init__(message)
        self.best = best


class SearchDomain(Protocol):
    def random_position(self, rng: np.random.Generator) -> Any: ...

    def neighbor(self, position: Any, partner: Any, rng: np.random.Generator) -> Any: ...

    def encode(self, position: Any) -> str: ...

    def decode(self, text: str) -> Any: ...


@dataclass
class EvaluationResult:
    objective: float
    metrics: dict = field(default_factory=dict)
    cache_hit: bool = False


class EvaluationStrategy(Protocol):
    def evaluate(self, position: Any) -> EvaluationResult: ...


# ---------------------------------------------------------------------------
# Fitness and selection
# ---------------------------------------------------------------------------


def fitness_transform(objective: float) -> float:
    """Map a lower-is-better objective onto a strictly positive fitness."""
    f = float(objective)
    if not math.isfinite(f):
        raise ColonyError(f"objective must be finite, got {objective!r}")
    if f >= 0:
        return 1.0 / (1.0 + f)
    return 1.0 + abs(f)


def selection_probabilities(fitnesses: Sequence[float]) -> np.ndarray:
    fit = np.asarray(fitnesses, dtype=np.float64)
    if fit.ndim != 1 or fit.size == 0:
        raise ColonyError("fitnesses must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(fit)) or np.any(fit <= 0):
        raise ColonyError("fitnesses must be finite and strictly positive")
    return fit / fit.sum()


def roulette_index(probabilities: Sequence[float], u: float) -> int:
    """Smallest index whose cumulative probability exceeds ``u``."""
    cumulative = np.cumsum(probabilities)
    idx = int(np.searchsorted(cumulative, u, side="right"))
    return min(idx, len(cumulative) - 1)


def roulette_select(probabilities: Sequence[float], rng: np.random.Generator) -> int:
    total = float(np.sum(probabilities))
    if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
        raise ColonyError(f"probabilities must sum to 1, got {total}")
    return roulette_index(probabilities, rng.random())


# ---------------------------------------------------------------------------
# State
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColonyConfig:
    num_food_sources: int = 7
    num_onlookers: int = 7
    abandonment_limit: int = 5
    iterations: int = 10
    seed: int = 0
    # Hard cap on evaluation-strategy invocations; cache hits are free.
    evaluation_budget: int | None = None

    def __post_init__(self):
        for name in ("num_food_sources", "abandonment_limit", "iterations"):
            if getattr(self, name) < 1:
                raise ColonyError(f"{name} must be >= 1")
        if self.num_onlookers < 0:
            raise ColonyError("num_onlookers must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ColonyError("seed must be a 64-bit unsigned integer")
        if self.evaluation_budget is not None and self.evaluation_budget < 1:
            raise ColonyError("evaluation_budget must be >= 1")


@dataclass
class FoodSource:
    position: Any
    objective: float
    fitness: float
    trials: int = 0


@dataclass
class BestRecord:
    position: Any
    objective: float
    fitness: float
    metrics: dict = field(default_factory=dict)


@dataclass
class ColonyState:
    config: ColonyConfig
    sources: list[FoodSource]
    global_best: BestRecord
    iteration: int
    rng: np.random.Generator
    evaluations: int = 0  # strategy invocations
    events: int = 0  # history records, cache hits included
    budget_exhausted: bool = False

    def to_dict(self, domain: SearchDomain) -> dict:
        return {
            "config": {
                "num_food_sources": self.config.num_food_sources,
                "num_onlookers": self.config.num_onlookers,
                "abandonment_limit": self.config.abandonment_limit,
                "iterations": self.config.iterations,
                "seed": self.config.seed,
                "evaluation_budget": self.config.evaluation_budget,
            },
            "sources": [
                {
                    "position": domain.encode(s.position),
                    "objective": s.objective,
                    "fitness": s.fitness,
                    "trials": s.trials,
                }
                for s in self.sources
            ],
            "global_best": {
                "position": domain.encode(self.global_best.position),
                "objective": self.global_best.objective,
                "fitness": self.global_best.fitness,
                "metrics": self.global_best.metrics,
            },
            "iteration": self.iteration,
            "rng_state": self.rng.bit_generator.state,
            "evaluations": self.evaluations,
            "events": self.events,
            "budget_exhausted": self.budget_exhausted,
        }

    @classmethod
    def from_dict(cls, data: dict, domain: SearchDomain) -> "ColonyState":
        rng = np.random.Generator(np.random.PCG64())
        rng.bit_generator.state = data["rng_state"]
        best = data["global_best"]
        return cls(
            config=ColonyConfig(**data["config"]),
            sources=[
                FoodSource(domain.decode(s["position"]), s["objective"], s["fitness"], s["trials"])
                for s in data["sources"]
            ],
            global_best=BestRecord(
                domain.decode(best["position"]), best["objective"], best["fitness"], dict(best.get("metrics", {}))
            ),
            iteration=data["iteration"],
            rng=rng,
            evaluations=data["evaluations"],
            events=data["events"],
            budget_exhausted=data["budget_exhausted"],
        )


@dataclass
class HistoryRecord:
    iteration: int
    phase: str
    source_index: int
    candidate: str
    objective: float
    fitness: float
    trials: int
    cache_hit: bool
    elapsed_seconds: float
    is_global_best: bool


HISTORY_FIELDS = [
    "iteration",
    "phase",
    "source_index",
    "candidate",
    "objective",
    "fitness",
    "trials",
    "cache_hit",
    "elapsed_seconds",
    "is_global_best",
]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


@dataclass
class _Candidate:
    source_index: int
    position: Any
    key: str
    result: EvaluationResult | None = None
    seconds: float = 0.0


class Colony:
    """Drives the employee, onlooker and scout phases over a ``ColonyState``.

    Args:
        config: colony sizes, limits and seed.
        domain: search domain providing sampling and neighbor moves.
        strategy: maps a position to an ``EvaluationResult`` (lower is better).
        cache: optional mapping-like visited cache with ``lookup``/``store``.
        sinks: callables receiving every ``HistoryRecord`` as it is produced.
        workers: evaluation threads per phase batch; 1 keeps everything inline.
        record_timing: write wall-clock seconds into history records. Off by
            default so that history is byte-reproducible.
    """

    def __init__(
        self,
        config: ColonyConfig,
        domain: SearchDomain,
        strategy: EvaluationStrategy,
        cache=None,
        sinks: Iterable[Callable[[HistoryRecord], None]] = (),
        workers: int = 1,
        record_timing: bool = False,
        state: ColonyState | None = None,
    ):
        self.config = config
        self.domain = domain
        self.strategy = strategy
        self.cache = cache
        self.sinks = list(sinks)
        self.workers = max(1, int(workers))
        self.record_timing = record_timing
        self.state = state

    # -- evaluation --------------------------------------------------------

    def _safe_evaluate(self, position) -> tuple[EvaluationResult, float]:
        start = time.perf_counter()
        try:
            result = self.strategy.evaluate(position)
            objective = float(result.objective)
            if not math.isfinite(objective):
                raise ValueError(f"non-finite objective {objective!r}")
        except Exception as exc:  # noqa: BLE001 - a bad candidate never stops the search
            logger.warning("evaluation failed for %s: %s", self.domain.encode(position), exc)
            result = EvaluationResult(FAILED_OBJECTIVE, {"failed": True, "error": str(exc)})
        return result, time.perf_counter() - start

    def _evaluate_batch(self, batch: list[_Candidate], state: ColonyState | None) -> list[_Candidate]:
        """Fill in results, consulting the cache first; returns the processed prefix.

        When the evaluation budget would be exceeded the batch is truncated
        just before the first candidate that needs a fresh evaluation.
        """
        budget = self.config.evaluation_budget
        used = state.evaluations if state is not None else 0
        # Without a cache every candidate is evaluated, duplicates included.
        pending: dict[object, list[_Candidate]] = {}
        processed = []
        for i, cand in enumerate(batch):
            group = cand.key if self.cache is not None else i
            hit = self.cache.lookup(cand.key) if self.cache is not None else None
            if hit is not None:
                cand.result = EvaluationResult(hit.objective, dict(hit.metrics), cache_hit=True)
            elif group in pending:
                pending[group].append(cand)
            else:
                if budget is not None and used + 1 > budget:
                    if state is not None:
                        state.budget_exhausted = True
                    break
                used += 1
                pending[group] = [cand]
            processed.append(cand)

        firsts = [group[0] for group in pending.values()]
        if self.workers > 1 and len(firsts) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                outcomes = list(pool.map(lambda c: self._safe_evaluate(c.position), firsts))
        else:
            outcomes = [self._safe_evaluate(c.position) for c in firsts]

        for group, (result, seconds) in zip(pending.values(), outcomes):
            group[0].result, group[0].seconds = result, seconds
            for dup in group[1:]:
                dup.result = EvaluationResult(result.objective, dict(result.metrics), cache_hit=True)
            if self.cache is not None:
                self.cache.store(group[0].key, result.objective, fitness_transform(result.objective), result.metrics)
        if state is not None:
            state.evaluations = used
        return processed

    def _emit(self, state: ColonyState, phase: str, cand: _Candidate, trials: int, improved_best: bool):
        record = HistoryRecord(
            iteration=state.iteration,
            phase=phase,
            source_index=cand.source_index,
            candidate=cand.key,
            objective=float(cand.result.objective),
            fitness=fitness_transform(cand.result.objective),
            trials=trials,
            cache_hit=cand.result.cache_hit,
            elapsed_seconds=round(cand.seconds, 6) if self.record_timing else 0.0,
            is_global_best=improved_best,
        )
        state.events += 1
        for sink in self.sinks:
            try:
                sink(record)
            except Exception as exc:
                raise PersistenceError(f"history sink failed: {exc}", best=state.global_best) from exc

    def _update_best(self, state: ColonyState, cand: _Candidate) -> bool:
        objective = float(cand.result.objective)
        fitness = fitness_transform(objective)
        if state.global_best is None or fitness > state.global_best.fitness:
            state.global_best = BestRecord(cand.position, objective, fitness, dict(cand.result.metrics))
            return True
        return False

    def _candidate(self, index: int, position) -> _Candidate:
        return _Candidate(index, position, self.domain.encode(position))

    # -- phases ------------------------------------------------------------

    def initialize(self) -> ColonyState:
        """Scouts sample the initial food sources; each is evaluated once."""
        rng = make_rng(self.config.seed)
        batch = [
            self._candidate(m, self.domain.random_position(rng)) for m in range(self.config.num_food_sources)
        ]
        state = ColonyState(self.config, [], None, 0, rng)  # type: ignore[arg-type]
        self.state = state
        processed = self._evaluate_batch(batch, state)
        if len(processed) < len(batch):
            raise ColonyError("evaluation_budget is smaller than the number of food sources")
        for cand in processed:
            objective = float(cand.result.objective)
            fitness = fitness_transform(objective)
            state.sources.append(FoodSource(cand.position, objective, fitness, 0))
            improved = self._update_best(state, cand)
            self._emit(state, PHASE_SCOUT, cand, 0, improved)
        return state

    def _partner(self, state: ColonyState, m: int):
        if not getattr(self.domain, "uses_partner", True):
            return None
        n = len(state.sources)
        if n == 1:
            return state.sources[m].position
        k = int(state.rng.integers(n - 1))
        if k >= m:
            k += 1
        return state.sources[k].position

    def _neighbor(self, state: ColonyState, m: int) -> _Candidate:
        partner = self._partner(state, m)
        return self._candidate(m, self.domain.neighbor(state.sources[m].position, partner, state.rng))

    def _greedy_merge(self, state: ColonyState, phase: str, processed: list[_Candidate]):
        for cand in processed:
            source = state.sources[cand.source_index]
            objective = float(cand.result.objective)
            fitness = fitness_transform(objective)
            if fitness > source.fitness:
                source.position, source.objective, source.fitness = cand.position, objective, fitness
                source.trials = 0
            else:
                source.trials += 1
            improved = self._update_best(state, cand)
            self._emit(state, phase, cand, source.trials, improved)

    def employee_phase(self) -> ColonyState:
        state = self.state
        batch = [self._neighbor(state, m) for m in range(len(state.sources))]
        self._greedy_merge(state, PHASE_EMPLOYEE, self._evaluate_batch(batch, state))
        return state

    def onlooker_phase(self) -> ColonyState:
        state = self.state
        if self.config.num_onlookers == 0 or state.budget_exhausted:
            return state
        probs = selection_probabilities([s.fitness for s in state.sources])
        batch = []
        for _ in range(self.config.num_onlookers):
            m = roulette_index(probs, state.rng.random())
            batch.append(self._neighbor(state, m))
        self._greedy_merge(state, PHASE_ONLOOKER, self._evaluate_batch(batch, state))
        return state

    def scout_phase(self) -> ColonyState:
        state = self.state
        if state.budget_exhausted:
            return state
        limit = self.config.abandonment_limit
        batch = [
            self._candidate(m, self.domain.random_position(state.rng))
            for m, s in enumerate(state.sources)
            if s.trials >= limit
        ]
        for cand in self._evaluate_batch(batch, state):
            objective = float(cand.result.objective)
            fitness = fitness_transform(objective)
            state.sources[cand.source_index] = FoodSource(cand.position, objective, fitness, 0)
            improved = self._update_best(state, cand)
            self._emit(state, PHASE_SCOUT, cand, 0, improved)
        return state

    def step(self) -> ColonyState:
        """One full iteration: employees, onlookers, then scouts."""
        state = self.state
        state.iteration += 1
        self.employee_phase()
        if not state.budget_exhausted:
            self.onlooker_phase()
        if not state.budget_exhausted:
            self.scout_phase()
        return state

    @property
    def finished(self) -> bool:
        s = self.state
        return s is not None and (s.iteration >= self.config.iterations or s.budget_exhausted)

    def run(self, on_iteration: Callable[[ColonyState], bool | None] | None = None) -> ColonyState:
        """Initialize if needed, then iterate until done.

        ``on_iteration`` is called at every iteration barrier; returning True
        stops the loop early (the state stays resumable).
        """
        if self.state is None:
            self.initialize()
            if on_iteration is not None and on_iteration(self.state):
                return self.state
        while not self.finished:
            self.step()
            if on_iteration is not None and on_iteration(self.state):
                break
        return self.state


@dataclass
class RunResult:
    best_position: Any
    best_objective: float
    history: list[HistoryRecord]
    state: ColonyState


def run(config: ColonyConfig, domain: SearchDomain, strategy: EvaluationStrategy, sinks=(), **kwargs) -> RunResult:
    """Run a colony to completion and return its best candidate with the full history."""
    history: list[HistoryRecord] = []
    colony = Colony(config, domain, strategy, sinks=[history.append, *sinks], **kwargs)
    state = colony.run()
    return RunResult(state.global_best.position, state.global_best.objective, history, state)
