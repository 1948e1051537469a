"""Evaluation strategies for architecture candidates.

``SurrogateStrategy`` is an instantaneous, hash-defined objective used to
check the search loop against brute force. ``LfeStrategy`` trains each
candidate for a few epochs and scores it by validation error; the winner is
then trained to convergence with ``full_train_best``.
"""

from __future__ import annotations

import hashlib
import logging
import math
import time
from dataclasses import asdict, dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import nn
from .colony import EvaluationResult
from .datasets import Dataset
from .space import ArchitectureSpace

logger = logging.getLogger(__name__)

# Worst validation error; used for candidates that cannot be built or trained.
WORST_ERROR = 1.0


def stable_unit(*parts) -> float:
    """Platform-independent hash of ``parts`` mapped to [0, 1)."""
    digest = hashlib.blake2b(":".join(str(p) for p in parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2.0**64


def derive_seed(*parts) -> int:
    digest = hashlib.blake2b(":".join(str(p) for p in parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class SurrogateStrategy:
    """Deterministic stand-in objective with per-slot and adjacent-pair terms.

    score(arch) = sum_i w(i, op_i) + sum_i v(i, op_i, op_{i+1}), each term a
    hash of the seed, slot and token(s) in [0, 1). The objective is
    ``1 - score / max_score`` where ``max_score`` is the best attainable score
    over the whole space, so the optimum has objective exactly 0.
    """

    def __init__(self, space: ArchitectureSpace, seed: int = 0):
        self.space = space
        self.seed = seed

    def unary(self, slot: int, token: str) -> float:
        return stable_unit(self.seed, "w", slot, token)

    def pair(self, slot: int, left: str, right: str) -> float:
        return stable_unit(self.seed, "v", slot, left, right)

    def score(self, arch) -> float:
        total = sum(self.unary(i, t) for i, t in enumerate(arch))
        total += sum(self.pair(i, arch[i], arch[i + 1]) for i in range(len(arch) - 1))
        return total

    @cached_property
    def max_score(self) -> float:
        # Chain-structured max-sum over slots.
        tokens = self.space.tokens
        best = {t: self.unary(0, t) for t in tokens}
        for i in range(1, self.space.depth):
            best = {
                t: max(best[p] + self.pair(i - 1, p, t) for p in tokens) + self.unary(i, t) for t in tokens
            }
        return max(best.values())

    def objective(self, arch) -> float:
        value = 1.0 - self.score(arch) / self.max_score
        return min(1.0, max(0.0, value))

    def evaluate(self, position) -> EvaluationResult:
        arch = self.space.validate(position)
        return EvaluationResult(self.objective(arch), {"score": self.score(arch)})


def surrogate_evaluate(space: ArchitectureSpace, arch, surrogate_seed: int = 0) -> EvaluationResult:
    return SurrogateStrategy(space, surrogate_seed).evaluate(arch)


@dataclass(frozen=True)
class LfeConfig:
    epsilon_epochs: int = 7
    full_train_epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 0.01
    validation_fraction: float = 0.2
    patience: int = 10

    def __post_init__(self):
        if not 1 <= self.epsilon_epochs < 10:
            raise ValueError("epsilon_epochs must be in [1, 9]")
        if self.full_train_epochs < self.epsilon_epochs:
            raise ValueError("full_train_epochs must be >= epsilon_epochs")
        if self.batch_size < 1 or self.learning_rate <= 0 or self.patience < 1:
            raise ValueError("batch_size, learning_rate and patience must be positive")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must be in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


def _failed(reason: str, seconds: float) -> EvaluationResult:
    return EvaluationResult(
        WORST_ERROR,
        {"failed": True, "error": reason, "accuracy": 0.0, "params": 0, "epochs_run": 0, "seconds": seconds},
    )


def _train_candidate(space, arch, dataset: Dataset, epochs: int, cfg: LfeConfig, rng, patience=None):
    net = nn.build_network(space, arch, dataset.input_shape, dataset.num_classes, rng)
    history = nn.train(
        net,
        dataset.x_train,
        dataset.y_train,
        dataset.x_val,
        dataset.y_val,
        epochs=epochs,
        batch_size=cfg.batch_size,
        lr=cfg.learning_rate,
        rng=rng,
        patience=patience,
    )
    return net, history


def _result(net, history, seconds: float, dataset: Dataset, with_test: bool) -> EvaluationResult:
    val_acc, val_loss = nn.accuracy(net, dataset.x_val, dataset.y_val)
    if not math.isfinite(val_loss) or not all(math.isfinite(v) for v in history.train_loss):
        return _failed("training diverged", seconds)
    metrics = {
        "accuracy": val_acc,
        "loss": val_loss,
        "params": net.param_count,
        "epochs_run": history.epochs_run,
        "seconds": seconds,
        "loss_curve": list(history.train_loss),
        "val_accuracy_curve": list(history.val_accuracy),
    }
    if net.repairs:
        metrics["repairs"] = [f"{i}:{why}" for i, why in net.repairs]
    if with_test:
        test_acc, test_loss = nn.accuracy(net, dataset.x_test, dataset.y_test)
        metrics.update(test_accuracy=test_acc, test_loss=test_loss, stopped_early=history.stopped_early)
    return EvaluationResult(1.0 - val_acc, metrics)


def lfe_evaluate(space: ArchitectureSpace, arch, dataset: Dataset, cfg: LfeConfig, rng) -> EvaluationResult:
    """Partial training for ``cfg.epsilon_epochs``; objective is validation error."""
    start = time.perf_counter()
    try:
        net, history = _train_candidate(space, arch, dataset, cfg.epsilon_epochs, cfg, rng)
    except (nn.BuildError, nn.ShapeError, nn.TrainingConfigError, FloatingPointError) as exc:
        return _failed(str(exc), time.perf_counter() - start)
    return _result(net, history, time.perf_counter() - start, dataset, with_test=False)


def full_train_best(
    space: ArchitectureSpace,
    arch,
    dataset: Dataset,
    cfg: LfeConfig,
    rng,
    params_path: str | Path | None = None,
) -> EvaluationResult:
    """Train the winning candidate up to ``full_train_epochs`` with early stopping.

    The objective stays validation error; test-split accuracy and loss are
    reported in the metrics. Trained parameters are written to ``params_path``.
    """
    start = time.perf_counter()
    try:
        net, history = _train_candidate(
            space, arch, dataset, cfg.full_train_epochs, cfg, rng, patience=cfg.patience
        )
    except (nn.BuildError, nn.ShapeError, nn.TrainingConfigError, FloatingPointError) as exc:
        return _failed(str(exc), time.perf_counter() - start)
    result = _result(net, history, time.perf_counter() - start, dataset, with_test=True)
    if params_path is not None and not result.metrics.get("failed"):
        nn.save_parameters(net, params_path)
        result.metrics["params_path"] = str(params_path)
    return result


class LfeStrategy:
    """Lower-fidelity estimate: validation error after a short training run.

    Each candidate trains with its own generator seeded from ``(seed, encoding)``
    so repeated evaluations agree and concurrent calls share no state.
    """

    def __init__(self, space: ArchitectureSpace, dataset: Dataset, cfg: LfeConfig, seed: int = 0):
        self.space = space
        self.dataset = dataset
        self.cfg = cfg
        self.seed = seed

    def rng_for(self, arch) -> np.random.Generator:
        return np.random.default_rng(derive_seed(self.seed, self.space.encode(arch)))

    def evaluate(self, position) -> EvaluationResult:
        arch = self.space.validate(position)
        return lfe_evaluate(self.space, arch, self.dataset, self.cfg, self.rng_for(arch))

    def full_train(self, position, params_path=None) -> EvaluationResult:
        arch = self.space.validate(position)
        return full_train_best(self.space, arch, self.dataset, self.cfg, self.rng_for(arch), params_path)
