"""Tier availability models and per-node communication accounting.

Every transmitted payload is charged to both the sender and the receiver, so a
ledger's total is twice the bytes that crossed links.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Union

from .errors import ConfigError

if TYPE_CHECKING:
    from .core import Task
    from .policy import RoutingOutcome


@dataclass(frozen=True)
class AlwaysUp:
    pass


@dataclass(frozen=True)
class Bernoulli:
    p_up: float

    def __post_init__(self):
        if not 0.0 <= self.p_up <= 1.0:
            raise ConfigError(f"Bernoulli p_up must lie in [0, 1], got {self.p_up}")


@dataclass(frozen=True)
class Schedule:
    """Down during every inclusive ``(start, end)`` task-index interval."""

    down_intervals: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        intervals = tuple(sorted((int(a), int(b)) for a, b in self.down_intervals))
        for a, b in intervals:
            if a > b:
                raise ConfigError(f"schedule interval ({a}, {b}) has start > end")
        for (_, b0), (a1, _) in zip(intervals, intervals[1:]):
            if a1 <= b0:
                raise ConfigError("schedule intervals overlap")
        object.__setattr__(self, "down_intervals", intervals)

    def is_down(self, task_index: int) -> bool:
        return any(a <= task_index <= b for a, b in self.down_intervals)


AvailabilityModel = Union[AlwaysUp, Bernoulli, Schedule]


def sample_availability(model: AvailabilityModel, tier: int, task_index: int, rng_draw: float) -> bool:
    if isinstance(model, AlwaysUp):
        return True
    if isinstance(model, Bernoulli):
        return rng_draw < model.p_up
    if isinstance(model, Schedule):
        return not model.is_down(task_index)
    raise TypeError(f"unknown availability model {model!r}")


@dataclass
class CommLedger:
    """Bytes sent plus received at each tier; index 0 is tier 1."""

    per_tier_bytes: list[int] = field(default_factory=list)

    @classmethod
    def zeros(cls, n: int) -> CommLedger:
        return cls([0] * n)

    @property
    def total_bytes(self) -> int:
        return sum(self.per_tier_bytes)

    def tier_bytes(self, tier: int) -> int:
        return self.per_tier_bytes[tier - 1]

    def add(self, outcome: RoutingOutcome, task: Task, strict_assumption5: bool = False) -> None:
        if not outcome.forward_hops:
            return
        b = self.per_tier_bytes
        x = task.input_len
        for a, c in outcome.forward_hops:
            b[a - 1] += x
            b[c - 1] += x
        y = task.tier_evidence[0].output_len if strict_assumption5 else outcome.output_len
        for a, c in outcome.return_hops:
            b[a - 1] += y
            b[c - 1] += y

    def merge(self, other: CommLedger) -> CommLedger:
        if len(self.per_tier_bytes) != len(other.per_tier_bytes):
            raise ValueError("cannot merge ledgers with different tier counts")
        return CommLedger([a + b for a, b in zip(self.per_tier_bytes, other.per_tier_bytes)])

    __add__ = merge

    def to_dict(self) -> dict:
        return {"per_tier_bytes": list(self.per_tier_bytes), "total_bytes": self.total_bytes}


def account(outcome: RoutingOutcome, task: Task, n: int | None = None,
            strict_assumption5: bool = False) -> CommLedger:
    """Per-task ledger delta for one routed task.

    ``n`` defaults to the number of tiers the task carries evidence for. In
    strict mode the returned payload is tier 1's output length regardless of
    which tier answered, which is what the closed-form predictors assume.
    """
    ledger = CommLedger.zeros(n if n is not None else len(task.tier_evidence))
    ledger.add(outcome, task, strict_assumption5)
    return ledger
