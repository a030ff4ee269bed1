"""Routing decisions for RecServe and the five comparison baselines.

All routing functions are pure apart from the queue set they are handed: any
randomness (ColServe coin flips, tier availability) is drawn by the caller and
passed in, so a run can be replayed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

from .confidence import score
from .core import Task, TierTopology
from .errors import ConfigError, MissingTierEvidence
from .history import COLD_START, QueueSet, ThresholdConfig


@dataclass(frozen=True)
class EndServe:
    label = "EndServe"

    @property
    def param(self) -> str:
        return ""


@dataclass(frozen=True)
class EdgeServe:
    label = "EdgeServe"

    @property
    def param(self) -> str:
        return ""


@dataclass(frozen=True)
class CloudServe:
    label = "CloudServe"

    @property
    def param(self) -> str:
        return ""


@dataclass(frozen=True)
class ColServe:
    alpha: float
    label = "ColServe"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"ColServe alpha must lie in (0, 1), got {self.alpha}")

    @property
    def param(self) -> str:
        return f"alpha={self.alpha:g}"


@dataclass(frozen=True)
class CasServe:
    thresholds: tuple[float, ...]
    label = "CasServe"

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if not self.thresholds:
            raise ConfigError("CasServe needs one threshold per non-top tier")
        for t in self.thresholds:
            if not 0.0 < t < 1.0:
                raise ConfigError(f"CasServe thresholds must lie in (0, 1), got {t}")

    @property
    def param(self) -> str:
        return "thresholds=" + "/".join(f"{t:g}" for t in self.thresholds)


@dataclass(frozen=True)
class RecServe:
    cfg: ThresholdConfig
    unavailability_tolerant: bool = False
    label = "RecServe"

    @property
    def param(self) -> str:
        p = f"beta={self.cfg.beta:g}"
        return p + ";ut" if self.unavailability_tolerant else p


Method = Union[EndServe, EdgeServe, CloudServe, ColServe, CasServe, RecServe]
HOP_BY_HOP = (ColServe, CasServe, RecServe)


def check_method(method: Method, n: int) -> None:
    if isinstance(method, CasServe) and len(method.thresholds) != n - 1:
        raise ConfigError(f"CasServe needs {n - 1} thresholds for {n} tiers, got {len(method.thresholds)}")


@dataclass(frozen=True)
class RoutingOutcome:
    final_tier: int
    forward_hops: tuple[tuple[int, int], ...]
    return_hops: tuple[tuple[int, int], ...]
    per_tier_confidence: Mapping[int, float]
    quality: float
    compute_cost: float
    output_len: int
    inference_tiers: tuple[int, ...] = field(default=())


def _reverse(hops):
    return tuple((b, a) for a, b in reversed(hops))


def _check_evidence(task: Task, n: int) -> None:
    if len(task.tier_evidence) < n:
        raise MissingTierEvidence(
            f"task {task.task_id} has evidence for {len(task.tier_evidence)} tiers, topology has {n}"
        )


def _outcome(task: Task, topology: TierTopology, final: int, forward, conf, ran) -> RoutingOutcome:
    forward = tuple(forward)
    ev = task.tier_evidence[final - 1]
    return RoutingOutcome(
        final_tier=final,
        forward_hops=forward,
        return_hops=_reverse(forward),
        per_tier_confidence=conf,
        quality=ev.quality,
        compute_cost=sum(topology.tiers[t - 1].compute_cost for t in ran),
        output_len=ev.output_len,
        inference_tiers=tuple(ran),
    )


def route_recserve(task: Task, topology: TierTopology, queues: QueueSet, cfg: ThresholdConfig,
                   tolerant: bool = False, availability: Sequence[bool] | None = None) -> RoutingOutcome:
    """Recursive confidence-threshold routing starting at tier 1.

    ``availability[i - 1]`` says whether tier i accepts offloads for this task;
    it is only consulted when ``tolerant`` is set.
    """
    n = topology.n
    _check_evidence(task, n)
    tt = task.task_type
    forward = []
    conf = {}
    tier = 1
    while True:
        c = score(task.tier_evidence[tier - 1], tt)
        conf[tier] = c
        q = queues[(tier, tt)]
        if tier == n:
            q.push(c)
            break
        if cfg.insert_before_threshold:
            q.push(c)
            t = q.threshold(cfg.beta, cfg.min_samples)
        else:
            t = q.threshold(cfg.beta, cfg.min_samples)
            q.push(c)
        if t is COLD_START or c >= t:
            break
        if tolerant and availability is not None and not availability[tier]:
            break
        forward.append((tier, tier + 1))
        tier += 1
    return _outcome(task, topology, tier, forward, conf, range(1, tier + 1))


def route_baseline(task: Task, topology: TierTopology, method: Method,
                   draws: Sequence[float] | None = None) -> RoutingOutcome:
    """Route one task under a baseline method.

    ``draws`` supplies one uniform [0, 1) value per non-top tier for ColServe;
    tier i offloads iff ``draws[i - 1] < alpha``.
    """
    n = topology.n
    _check_evidence(task, n)
    tt = task.task_type
    if isinstance(method, EndServe):
        return _outcome(task, topology, 1, (), {1: score(task.tier_evidence[0], tt)}, (1,))
    if isinstance(method, EdgeServe):
        return _outcome(task, topology, 2, ((1, 2),), {2: score(task.tier_evidence[1], tt)}, (2,))
    if isinstance(method, CloudServe):
        return _outcome(task, topology, n, ((1, n),), {n: score(task.tier_evidence[n - 1], tt)}, (n,))
    if isinstance(method, ColServe):
        if draws is None or len(draws) < n - 1:
            raise ValueError(f"ColServe needs {n - 1} uniform draws per task")
        tier = 1
        while tier < n and draws[tier - 1] < method.alpha:
            tier += 1
        forward = [(i, i + 1) for i in range(1, tier)]
        return _outcome(task, topology, tier, forward, {tier: score(task.tier_evidence[tier - 1], tt)}, (tier,))
    if isinstance(method, CasServe):
        check_method(method, n)
        forward = []
        conf = {}
        tier = 1
        while True:
            c = score(task.tier_evidence[tier - 1], tt)
            conf[tier] = c
            if tier == n or c >= method.thresholds[tier - 1]:
                break
            forward.append((tier, tier + 1))
            tier += 1
        return _outcome(task, topology, tier, forward, conf, range(1, tier + 1))
    raise TypeError(f"route_baseline does not handle {method!r}")


def route(task: Task, topology: TierTopology, method: Method, queues: QueueSet | None = None,
          availability: Sequence[bool] | None = None, draws: Sequence[float] | None = None) -> RoutingOutcome:
    if isinstance(method, RecServe):
        if queues is None:
            raise ValueError("RecServe routing needs a queue set")
        return route_recserve(task, topology, queues, method.cfg, method.unavailability_tolerant, availability)
    return route_baseline(task, topology, method, draws)
