"""Run configuration: YAML file -> validated, fully resolved ``RunConfig``."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .benchmarks import BENCHMARKS
from .colony import ColonyConfig
from .datasets import DATASETS
from .evaluation import LfeConfig
from .space import KINDS, ArchitectureSpace, OperationSpec, SpaceError, default_vocabulary

# Keys that steer how a run executes but not what it computes.
RUNTIME_KEYS = ("output_dir", "checkpoint_every", "max_seconds", "workers", "record_timing")


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ColonySection(_Strict):
    num_food_sources: int = Field(7, ge=1)
    num_onlookers: Optional[int] = Field(None, ge=0)  # defaults to num_food_sources
    abandonment_limit: int = Field(5, ge=1)
    iterations: int = Field(10, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    evaluation_budget: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _fill(self):
        if self.num_onlookers is None:
            self.num_onlookers = self.num_food_sources
        return self

    def to_colony_config(self) -> ColonyConfig:
        return ColonyConfig(**self.model_dump())


class OperationSection(_Strict):
    id: str
    kind: Literal[KINDS]  # type: ignore[valid-type]
    filters: Optional[int] = None
    kernel: Optional[int] = None
    units: Optional[int] = None
    rate: Optional[float] = None

    def to_spec(self) -> OperationSpec:
        return OperationSpec(**self.model_dump())


class SpaceSection(_Strict):
    depth: int = Field(5, ge=1)
    vocabulary: list[OperationSection] = Field(
        default_factory=lambda: [OperationSection(**op.to_dict()) for op in default_vocabulary()]
    )

    def build(self) -> ArchitectureSpace:
        return ArchitectureSpace(self.depth, [op.to_spec() for op in self.vocabulary])


class BenchmarkSection(_Strict):
    function: Literal[tuple(BENCHMARKS)] = "sphere"  # type: ignore[valid-type]
    dimension: int = Field(10, ge=1)
    lower: Optional[float] = None
    upper: Optional[float] = None

    @model_validator(mode="after")
    def _bounds(self):
        low, high = BENCHMARKS[self.function].default_bounds
        if self.lower is None:
            self.lower = low
        if self.upper is None:
            self.upper = high
        if not self.lower < self.upper:
            raise ValueError("lower must be < upper")
        return self


class LfeSection(_Strict):
    epsilon_epochs: int = Field(7, ge=1, lt=10)
    full_train_epochs: int = Field(200, ge=1)
    batch_size: int = Field(32, ge=1)
    learning_rate: float = Field(0.01, gt=0)
    validation_fraction: float = Field(0.2, gt=0, lt=1)
    patience: int = Field(10, ge=1)

    @model_validator(mode="after")
    def _order(self):
        if self.epsilon_epochs > self.full_train_epochs:
            raise ValueError("epsilon_epochs must be <= full_train_epochs")
        return self

    def to_lfe_config(self) -> LfeConfig:
        return LfeConfig(**self.model_dump())


class EvaluationSection(_Strict):
    strategy: Optional[Literal["lfe", "surrogate", "benchmark"]] = None
    memoize: bool = True
    surrogate_seed: Optional[int] = Field(None, ge=0)
    seed: Optional[int] = Field(None, ge=0)  # training seed; defaults to colony.seed
    lfe: Optional[LfeSection] = None
    full_train: Optional[bool] = None


class DatasetSection(_Strict):
    name: Literal[DATASETS] = "moons"  # type: ignore[valid-type]
    seed: int = Field(0, ge=0)
    n_samples: int = Field(1000, ge=10)
    noise: Optional[float] = Field(None, ge=0)
    centers: int = Field(3, ge=2)
    test_fraction: float = Field(0.2, ge=0, lt=1)
    images: Optional[str] = None
    labels: Optional[str] = None
    limit: Optional[int] = Field(None, ge=1)


class RunConfig(_Strict):
    mode: Literal["nas", "benchmark"]
    colony: ColonySection = Field(default_factory=ColonySection)
    space: Optional[SpaceSection] = None
    benchmark: Optional[BenchmarkSection] = None
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    dataset: Optional[DatasetSection] = None
    output_dir: str = "runs/latest"
    checkpoint_every: int = Field(1, ge=0)
    max_seconds: Optional[float] = Field(None, gt=0)
    workers: int = Field(1, ge=1)
    record_timing: bool = False

    @model_validator(mode="after")
    def _resolve(self):
        ev = self.evaluation
        if self.mode == "benchmark":
            for key in ("space", "dataset"):
                if getattr(self, key) is not None:
                    raise ValueError(f"'{key}' is not allowed in benchmark mode")
            if ev.strategy not in (None, "benchmark"):
                raise ValueError(f"evaluation.strategy {ev.strategy!r} is not valid in benchmark mode")
            for key in ("lfe", "surrogate_seed", "full_train"):
                if getattr(ev, key) is not None:
                    raise ValueError(f"'evaluation.{key}' is not allowed in benchmark mode")
            ev.strategy = "benchmark"
            ev.memoize = False if "memoize" not in ev.model_fields_set else ev.memoize
            if self.benchmark is None:
                self.benchmark = BenchmarkSection()
            return self

        if self.benchmark is not None:
            raise ValueError("'benchmark' is not allowed in nas mode")
        if ev.strategy is None:
            ev.strategy = "lfe"
        if ev.strategy == "benchmark":
            raise ValueError("evaluation.strategy 'benchmark' is not valid in nas mode")
        if self.space is None:
            self.space = SpaceSection()
        if ev.strategy == "surrogate":
            if self.dataset is not None:
                raise ValueError("'dataset' is not used by the surrogate strategy")
            if ev.lfe is not None:
                raise ValueError("'evaluation.lfe' is not used by the surrogate strategy")
            if ev.full_train:
                raise ValueError("'evaluation.full_train' requires the lfe strategy")
            ev.full_train = False
            if ev.surrogate_seed is None:
                ev.surrogate_seed = 0
        else:
            if ev.surrogate_seed is not None:
                raise ValueError("'evaluation.surrogate_seed' is only used by the surrogate strategy")
            if ev.lfe is None:
                ev.lfe = LfeSection()
            if self.dataset is None:
                self.dataset = DatasetSection()
            if ev.full_train is None:
                ev.full_train = True
            if ev.seed is None:
                ev.seed = self.colony.seed
        try:
            self.space.build()
        except SpaceError as exc:
            raise ValueError(f"space: {exc}") from exc
        return self

    @property
    def colony_config(self) -> ColonyConfig:
        return self.colony.to_colony_config()

    def to_dict(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)

    def with_seed(self, seed: int) -> "RunConfig":
        data = self.to_dict()
        data["colony"]["seed"] = seed
        if data.get("evaluation", {}).get("seed") is not None and self.evaluation.seed == self.colony.seed:
            data["evaluation"]["seed"] = seed
        return parse_config(data)


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        msg = err["msg"]
        if err["type"] == "extra_forbidden":
            msg = "unknown key"
        parts.append(f"{loc}: {msg}" if loc else msg)
    return "; ".join(parts)


def parse_config(data) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None


def load_config(path, seed: int | None = None, output_dir: str | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: YAML parse error{where}: {getattr(exc, 'problem', exc)}") from None
    cfg = parse_config(data or {})
    if seed is not None:
        cfg = cfg.with_seed(seed)
    if output_dir is not None:
        cfg = cfg.model_copy(update={"output_dir": output_dir})
    return cfg


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def save_resolved(cfg: RunConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_config(cfg))
    return path


def config_hash(cfg: RunConfig) -> str:
    """Hash of everything that influences the search result."""
    data = {k: v for k, v in cfg.to_dict().items() if k not in RUNTIME_KEYS}
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()
