"""Sliding-window confidence history and the dynamic quantile threshold.

A :class:`ConfidenceQueue` keeps its FIFO order and a sorted mirror side by
side, so the threshold is O(1) after an O(k) insert instead of a full sort per
task. At k=10000 that is the difference between seconds and minutes.
"""

from __future__ import annotations

import bisect
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .errors import ConfigError


class _ColdStart:
    __slots__ = ()

    def __repr__(self) -> str:
        return "COLD_START"

    def __reduce__(self):
        return "COLD_START"


COLD_START = _ColdStart()
"""Returned by :func:`threshold` while the queue holds fewer than ``min_samples``."""


@dataclass(frozen=True)
class ThresholdConfig:
    beta: float
    k: int = 10000
    min_samples: int = 2
    insert_before_threshold: bool = True

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"beta must lie in (0, 1), got {self.beta}")
        if self.k < 1:
            raise ConfigError(f"queue capacity k must be >= 1, got {self.k}")
        if self.min_samples < 2:
            raise ConfigError(f"min_samples must be >= 2, got {self.min_samples}")
        if self.min_samples > self.k:
            raise ConfigError(f"min_samples ({self.min_samples}) exceeds k ({self.k})")


class ConfidenceQueue:
    """Bounded FIFO of confidence scores; the oldest entry is evicted when full."""

    __slots__ = ("k", "_fifo", "_sorted")

    def __init__(self, k: int, entries: Iterable[float] = ()):
        if k < 1:
            raise ConfigError(f"queue capacity k must be >= 1, got {k}")
        self.k = k
        self._fifo: deque[float] = deque()
        self._sorted: list[float] = []
        for c in entries:
            self.push(c)

    def push(self, c: float) -> ConfidenceQueue:
        c = float(c)
        if len(self._fifo) == self.k:
            old = self._fifo.popleft()
            del self._sorted[bisect.bisect_left(self._sorted, old)]
        self._fifo.append(c)
        bisect.insort(self._sorted, c)
        return self

    def __len__(self) -> int:
        return len(self._fifo)

    @property
    def entries(self) -> list[float]:
        return list(self._fifo)

    @property
    def sorted_entries(self) -> list[float]:
        return list(self._sorted)

    def threshold(self, beta: float, min_samples: int = 2):
        m = len(self._sorted)
        if m < min_samples or m == 0:
            return COLD_START
        return interpolated_quantile(self._sorted, beta)

    def to_json(self) -> dict:
        return {"k": self.k, "entries": list(self._fifo)}

    @classmethod
    def from_json(cls, data: dict) -> ConfidenceQueue:
        return cls(int(data["k"]), data["entries"])

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfidenceQueue) and self.k == other.k and self._fifo == other._fifo

    def __repr__(self) -> str:
        return f"ConfidenceQueue(k={self.k}, len={len(self)})"


def interpolated_quantile(sorted_values: list[float], beta: float) -> float:
    """Linear-interpolation beta-quantile of an ascending list with m >= 1 entries.

    Uses ``r = beta * (m - 1)`` on the current length m. Values of r within
    1e-12 of an integer are snapped so exact order statistics stay exact.
    """
    m = len(sorted_values)
    r = beta * (m - 1)
    nearest = round(r)
    if abs(r - nearest) <= 1e-12 * max(1.0, r):
        r = float(nearest)
    lo = math.floor(r)
    hi = min(math.ceil(r), m - 1)
    frac = r - lo
    a = sorted_values[lo]
    b = sorted_values[hi]
    if frac == 0.0 or a == b:
        return a
    t = a + (b - a) * frac
    return min(max(t, a), b)


def push(queue: ConfidenceQueue, c: float) -> ConfidenceQueue:
    return queue.push(c)


def threshold(queue: ConfidenceQueue, cfg: ThresholdConfig):
    return queue.threshold(cfg.beta, cfg.min_samples)


class QueueSet(dict):
    """Queues keyed by ``(tier, task_type)``, created empty on first use."""

    def __init__(self, k: int):
        super().__init__()
        self.k = k

    def __missing__(self, key):
        q = self[key] = ConfidenceQueue(self.k)
        return q

    def to_json(self) -> list[dict]:
        return [
            {"tier": tier, "task_type": getattr(tt, "value", tt), **q.to_json()}
            for (tier, tt), q in sorted(self.items(), key=lambda kv: (kv[0][0], getattr(kv[0][1], "value", kv[0][1])))
        ]
