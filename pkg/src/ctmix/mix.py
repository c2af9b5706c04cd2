"""Instruction-mix vectors, their L1 difference, and the pairwise verdict.

Two traces are equivalent when their mix vectors are equal, i.e. when the
L1 distance between them is exactly zero. Order of instructions is ignored.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .classify import COLUMNS, NUM_CLASSES, InstructionClass


class Verdict(str, enum.Enum):
    CONSTANT_TIME_OBSERVED = "CONSTANT_TIME_OBSERVED"
    NON_CONSTANT_TIME = "NON_CONSTANT_TIME"
    INCONCLUSIVE = "INCONCLUSIVE"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class MixVector:
    counts: tuple[int, ...] = (0,) * NUM_CLASSES

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != NUM_CLASSES:
            raise ValueError(f"mix vector needs {NUM_CLASSES} counts, got {len(counts)}")
        if any(c < 0 for c in counts):
            raise ValueError("mix vector counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_mapping(cls, values: dict) -> MixVector:
        """Build from ``{InstructionClass or column name: count}``; missing classes are 0."""
        counts = [0] * NUM_CLASSES
        for key, value in values.items():
            if isinstance(key, str):
                key = COLUMNS.index(key)
            counts[int(key)] = value
        return cls(tuple(counts))

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __getitem__(self, cls: InstructionClass | int) -> int:
        return self.counts[int(cls)]

    def __add__(self, other: MixVector) -> MixVector:
        return MixVector(tuple(a + b for a, b in zip(self.counts, other.counts)))

    def as_dict(self) -> dict[str, int]:
        return dict(zip(COLUMNS, self.counts))


@dataclass(frozen=True)
class MixDiff:
    per_class: tuple[int, ...]

    @property
    def l1(self) -> int:
        return sum(abs(d) for d in self.per_class)

    @property
    def equal(self) -> bool:
        return self.l1 == 0

    def nonzero(self) -> list[tuple[InstructionClass, int]]:
        return [(InstructionClass(k), d) for k, d in enumerate(self.per_class) if d]

    def as_dict(self) -> dict[str, int]:
        return dict(zip(COLUMNS, self.per_class))


def build_mix(trace: Iterable) -> MixVector:
    """Count events per class. Accepts a Trace or any iterable of events."""
    counts = [0] * NUM_CLASSES
    classes = trace.classes() if hasattr(trace, "classes") else (e.cls for e in trace)
    for cls in classes:
        counts[cls] += 1
    return MixVector(tuple(counts))


def diff(a: MixVector, b: MixVector) -> MixDiff:
    return MixDiff(tuple(x - y for x, y in zip(a.counts, b.counts)))


@dataclass(frozen=True)
class PairCheck:
    verdict: Verdict
    pair: tuple | None = None
    diff: MixDiff | None = None


def pairwise_check(vectors: Sequence) -> PairCheck:
    """Compare every vector with the first one.

    ``vectors`` holds MixVectors or ``(label, MixVector)`` pairs (labels
    default to positions). Since equality is transitive, all vectors are
    pairwise equal iff each equals the first; on failure the reported pair
    is the lexicographically smallest violating one, ``(first, earliest j)``.
    """
    if not vectors:
        raise ValueError("pairwise_check needs at least one vector")
    labelled = [v if isinstance(v, tuple) else (k, v) for k, v in enumerate(vectors)]
    first_label, first = labelled[0]
    for label, vec in labelled[1:]:
        if vec != first:
            return PairCheck(Verdict.NON_CONSTANT_TIME, (first_label, label), diff(first, vec))
    return PairCheck(Verdict.CONSTANT_TIME_OBSERVED)
