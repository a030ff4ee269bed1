"""Shared domain types: tasks, per-tier evidence and the tier topology.

Lengths are bytes of serialized text. ``quality`` is a unit-interval score so
accuracy (0/1 per task) and BLEU-like scores aggregate the same way.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DuplicateTier, NonMonotoneCosts, TooFewTiers
from .netsim import AlwaysUp, AvailabilityModel


class TaskType(enum.Enum):
    SEQ2CLASS = "seq2class"
    SEQ2SEQ = "seq2seq"

    @classmethod
    def parse(cls, value: str | TaskType) -> TaskType:
        if isinstance(value, TaskType):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown task type {value!r}; expected 'seq2class' or 'seq2seq'") from None


@dataclass(frozen=True, slots=True)
class TierEvidence:
    """What one tier's model produced for a task.

    Exactly one of ``confidence``, ``logits`` (Seq2Class) or ``token_logprobs``
    (Seq2Seq, natural-log probabilities of the emitted tokens) is set.
    """

    tier: int
    output_len: int
    quality: float
    confidence: float | None = None
    logits: tuple[float, ...] | None = None
    token_logprobs: tuple[float, ...] | None = None

    def __post_init__(self):
        present = [v is not None for v in (self.confidence, self.logits, self.token_logprobs)]
        if sum(present) != 1:
            raise ValueError(
                f"tier {self.tier}: exactly one of confidence/logits/token_logprobs must be set"
            )
        if self.tier < 1:
            raise ValueError(f"tier index must be >= 1, got {self.tier}")
        if self.output_len < 0:
            raise ValueError(f"tier {self.tier}: output_len must be non-negative")
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError(f"tier {self.tier}: quality must lie in [0, 1], got {self.quality}")
        if self.confidence is not None and not 0.0 < self.confidence <= 1.0:
            raise ValueError(f"tier {self.tier}: confidence must lie in (0, 1], got {self.confidence}")
        if self.logits is not None:
            object.__setattr__(self, "logits", tuple(float(v) for v in self.logits))
            if not self.logits:
                raise ValueError(f"tier {self.tier}: logits must be non-empty")
        if self.token_logprobs is not None:
            object.__setattr__(self, "token_logprobs", tuple(float(v) for v in self.token_logprobs))
            if not self.token_logprobs:
                raise ValueError(f"tier {self.tier}: token_logprobs must be non-empty")

    @property
    def kind(self) -> str:
        if self.confidence is not None:
            return "confidence"
        return "logits" if self.logits is not None else "token_logprobs"


@dataclass(frozen=True, slots=True)
class Task:
    task_id: str
    task_type: TaskType
    input_len: int
    tier_evidence: tuple[TierEvidence, ...]

    def __post_init__(self):
        object.__setattr__(self, "tier_evidence", tuple(self.tier_evidence))
        if self.input_len < 0:
            raise ValueError(f"task {self.task_id}: input_len must be non-negative")
        for expected, ev in enumerate(self.tier_evidence, start=1):
            if ev.tier != expected:
                raise ValueError(
                    f"task {self.task_id}: tier evidence must cover tiers 1..n in order "
                    f"(position {expected} holds tier {ev.tier})"
                )

    @property
    def n_tiers(self) -> int:
        return len(self.tier_evidence)

    def evidence(self, tier: int) -> TierEvidence:
        return self.tier_evidence[tier - 1]


@dataclass(frozen=True)
class TierNodeConfig:
    tier: int
    compute_cost: float
    availability: AvailabilityModel = field(default_factory=AlwaysUp)


@dataclass(frozen=True)
class TierTopology:
    tiers: tuple[TierNodeConfig, ...]

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))

    @property
    def n(self) -> int:
        return len(self.tiers)

    @property
    def costs(self) -> tuple[float, ...]:
        return tuple(t.compute_cost for t in self.tiers)

    def cost(self, tier: int) -> float:
        return self.tiers[tier - 1].compute_cost

    @classmethod
    def from_costs(cls, costs: Sequence[float],
                   availability: Sequence[AvailabilityModel] | None = None) -> TierTopology:
        availability = list(availability) if availability is not None else [AlwaysUp()] * len(costs)
        if len(availability) != len(costs):
            raise ValueError("availability list must match the number of tiers")
        return validate_topology(cls(tuple(
            TierNodeConfig(i, float(c), a) for i, (c, a) in enumerate(zip(costs, availability), start=1)
        )))


def validate_topology(topology: TierTopology) -> TierTopology:
    if topology.n < 2:
        raise TooFewTiers(f"topology needs at least 2 tiers, got {topology.n}")
    seen = set()
    for t in topology.tiers:
        if t.tier in seen:
            raise DuplicateTier(f"tier {t.tier} appears more than once")
        seen.add(t.tier)
    if [t.tier for t in topology.tiers] != list(range(1, topology.n + 1)):
        raise DuplicateTier(f"tier indices must be exactly 1..{topology.n} in order")
    costs = topology.costs
    for c in costs:
        if not math.isfinite(c) or c < 0:
            raise NonMonotoneCosts(f"compute costs must be finite and non-negative, got {c}")
    for lo, hi in zip(costs, costs[1:]):
        if not hi > lo:
            raise NonMonotoneCosts(f"compute costs must strictly increase with tier: {list(costs)}")
    return topology


def tier_names(n: int) -> list[str]:
    """Column labels: device first, cloud last, edge (or edge1, edge2, ...) between."""
    if n == 2:
        return ["device", "cloud"]
    if n == 3:
        return ["device", "edge", "cloud"]
    return ["device"] + [f"edge{i}" for i in range(1, n - 1)] + ["cloud"]
