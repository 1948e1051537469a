"""Layer-based architecture search space with string encodings.

Candidates are fixed-depth sequences of operation tokens. Two candidates are
neighbors when they differ in exactly one slot. Instead of materializing the
space as a graph, positions carry their own encoding and a visited cache
remembers every evaluated encoding.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .colony import ColonyError

SEPARATOR = "|"
KINDS = ("conv", "maxpool", "dense", "dropout", "identity", "residual_block")

Architecture = tuple[str, ...]


class SpaceError(ColonyError):
    pass


class DecodeError(SpaceError):
    def __init__(self, message: str, position: int | None = None, token: str | None = None):
        super().__init__(message)
        self.position = position
        self.token = token


@dataclass(frozen=True)
class OperationSpec:
    id: str
    kind: str
    filters: int | None = None
    kernel: int | None = None
    units: int | None = None
    rate: float | None = None

    def __post_init__(self):
        if not self.id or SEPARATOR in self.id or any(c.isspace() for c in self.id):
            raise SpaceError(f"invalid operation id {self.id!r}")
        if self.kind not in KINDS:
            raise SpaceError(f"operation {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == "conv":
            if not self.filters or self.filters < 1 or not self.kernel or self.kernel < 1 or self.kernel % 2 == 0:
                raise SpaceError(f"conv {self.id!r} needs filters >= 1 and an odd kernel size")
        elif self.kind == "residual_block":
            if not self.filters or self.filters < 1:
                raise SpaceError(f"residual_block {self.id!r} needs filters >= 1")
        elif self.kind == "dense":
            if not self.units or self.units < 1:
                raise SpaceError(f"dense {self.id!r} needs units >= 1")
        elif self.kind == "dropout":
            if self.rate is None or not 0.0 < self.rate < 1.0:
                raise SpaceError(f"dropout {self.id!r} needs a rate in (0, 1)")

    def to_dict(self) -> dict:
        out = {"id": self.id, "kind": self.kind}
        for key in ("filters", "kernel", "units", "rate"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


def conv(filters: int, kernel: int = 3) -> OperationSpec:
    return OperationSpec(f"conv{kernel}x{filters}", "conv", filters=filters, kernel=kernel)


def dense(units: int) -> OperationSpec:
    return OperationSpec(f"dense{units}", "dense", units=units)


def dropout(rate: float) -> OperationSpec:
    return OperationSpec(f"dropout{rate:g}", "dropout", rate=rate)


def residual(filters: int) -> OperationSpec:
    return OperationSpec(f"resblock{filters}", "residual_block", filters=filters)


MAXPOOL = OperationSpec("maxpool2", "maxpool")
IDENTITY = OperationSpec("identity", "identity")


def default_vocabulary() -> list[OperationSpec]:
    return [
        conv(16),
        conv(32),
        conv(64),
        MAXPOOL,
        dense(64),
        dense(128),
        dropout(0.3),
        IDENTITY,
        residual(32),
        residual(64),
    ]


class ArchitectureSpace:
    """Fixed-depth sequences over an operation vocabulary.

    The classifier head (flatten + output layer) is not part of the encoding.
    """

    uses_partner = False

    def __init__(self, depth: int, vocabulary: list[OperationSpec] | None = None):
        if depth < 1:
            raise SpaceError("depth must be >= 1")
        vocabulary = list(default_vocabulary() if vocabulary is None else vocabulary)
        if not vocabulary:
            raise SpaceError("vocabulary must not be empty")
        ids = [op.id for op in vocabulary]
        if len(set(ids)) != len(ids):
            raise SpaceError(f"duplicate operation ids in vocabulary: {ids}")
        self.depth = depth
        self.vocabulary = vocabulary
        self.tokens = tuple(ids)
        self._by_id = {op.id: op for op in vocabulary}

    def __len__(self) -> int:
        return len(self.tokens) ** self.depth

    @property
    def size(self) -> int:
        return len(self)

    def op(self, token: str) -> OperationSpec:
        return self._by_id[token]

    def validate(self, arch) -> Architecture:
        arch = tuple(arch)
        if len(arch) != self.depth:
            raise DecodeError(f"expected {self.depth} operations, got {len(arch)}")
        for i, token in enumerate(arch):
            if token not in self._by_id:
                raise DecodeError(f"unknown operation {token!r} at position {i}", position=i, token=token)
        return arch

    def random_position(self, rng: np.random.Generator) -> Architecture:
        idx = rng.integers(len(self.tokens), size=self.depth)
        return tuple(self.tokens[i] for i in idx)

    random_architecture = random_position

    def neighbor(self, position, partner, rng: np.random.Generator) -> Architecture:
        """Swap one uniformly chosen slot for a different uniformly chosen token."""
        if len(self.tokens) < 2:
            raise SpaceError("no neighbors exist in a single-operation vocabulary")
        arch = list(position)
        slot = int(rng.integers(self.depth))
        current = self.tokens.index(arch[slot])
        pick = int(rng.integers(len(self.tokens) - 1))
        if pick >= current:
            pick += 1
        arch[slot] = self.tokens[pick]
        return tuple(arch)

    def neighbor_architecture(self, arch, rng: np.random.Generator) -> Architecture:
        return self.neighbor(arch, None, rng)

    def encode(self, position) -> str:
        return SEPARATOR.join(position)

    def decode(self, text: str) -> Architecture:
        return self.validate(text.split(SEPARATOR) if text else [])

    def enumerate_all(self) -> Iterator[Architecture]:
        return itertools.product(self.tokens, repeat=self.depth)


def hamming(a, b) -> int:
    if len(a) != len(b):
        raise ValueError("architectures of different depth")
    return sum(x != y for x, y in zip(a, b))


@dataclass
class CacheRecord:
    objective: float
    fitness: float
    metrics: dict = field(default_factory=dict)


class VisitedCache:
    """Evaluated encodings keyed by canonical string; first write wins."""

    def __init__(self):
        self._entries: dict[str, CacheRecord] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def lookup(self, key: str) -> CacheRecord | None:
        return self._entries.get(key)

    def store(self, key: str, objective: float, fitness: float, metrics: dict | None = None) -> CacheRecord:
        with self._lock:
            if key not in self._entries:
                self._entries[key] = CacheRecord(float(objective), float(fitness), dict(metrics or {}))
            return self._entries[key]

    def to_dict(self) -> dict:
        return {k: {"objective": r.objective, "fitness": r.fitness, "metrics": r.metrics} for k, r in self._entries.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "VisitedCache":
        cache = cls()
        for key, rec in data.items():
            cache._entries[key] = CacheRecord(rec["objective"], rec["fitness"], dict(rec.get("metrics", {})))
        return cache


def memoized_lookup(cache: VisitedCache, space: ArchitectureSpace, arch) -> CacheRecord | None:
    return cache.lookup(space.encode(arch))


def memoized_store(cache: VisitedCache, space: ArchitectureSpace, arch, record: CacheRecord) -> CacheRecord:
    return cache.store(space.encode(arch), record.objective, record.fitness, record.metrics)
