"""Online feedback calibration of beta against a per-task communication budget.

Each round runs R tasks at the current beta, measures the mean per-task burden
and rescales beta by ``gamma ** -eta`` where gamma = measured / budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from .core import Task, TierTopology
from .errors import ConfigError, InsufficientWorkload, UnachievableBudget
from .history import QueueSet, ThresholdConfig
from .netsim import CommLedger
from .policy import route_recserve
from .theory import TheoryInputs, expected_comm


@dataclass(frozen=True)
class CalibrationConfig:
    budget: float
    eta: float = 0.5
    window: int = 5000
    epsilon: float = 0.05
    max_rounds: int = 15
    beta_clamp: tuple[float, float] = (0.01, 0.6)
    mean_payload: float | None = None
    warmup_tasks: int = 0
    strict_assumption5: bool = False

    def __post_init__(self):
        lo, hi = self.beta_clamp
        if not 0.0 < lo < hi < 1.0:
            raise ConfigError(f"beta_clamp must satisfy 0 < lo < hi < 1, got {self.beta_clamp}")
        if not self.budget > 0:
            raise ConfigError(f"budget must be positive, got {self.budget}")
        if self.eta < 0:
            raise ConfigError(f"eta must be non-negative, got {self.eta}")
        if self.window < 1 or self.max_rounds < 1:
            raise ConfigError("window and max_rounds must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.warmup_tasks < 0:
            raise ConfigError("warmup_tasks must be non-negative")


@dataclass(frozen=True)
class CalibrationRound:
    round: int
    beta: float
    burden: float
    gamma: float


@dataclass
class CalibrationTrace:
    rounds: list[CalibrationRound] = field(default_factory=list)
    converged: bool = False
    final_beta: float = float("nan")
    budget: float = float("nan")

    def to_rows(self) -> list[dict]:
        return [{"round": r.round, "beta": r.beta, "burden": r.burden, "gamma": r.gamma} for r in self.rounds]


def clamp(beta: float, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    return min(max(beta, lo), hi)


def initial_beta(budget: float, mean_payload: float, n: int = 3,
                 beta_clamp: tuple[float, float] = (0.01, 0.6)) -> float:
    """beta whose theoretical per-task burden equals ``budget``.

    Roots below the clamp are lifted to its lower edge; a root above the upper
    edge means the budget cannot be met inside the allowed range.
    """
    if not budget > 0 or not mean_payload > 0:
        raise UnachievableBudget("budget and mean_payload must be positive")
    lo, hi = beta_clamp
    target = budget / (2.0 * mean_payload)
    if n == 3:
        root = (-1.0 + math.sqrt(1.0 + 4.0 * target)) / 2.0
    else:
        # expected_comm is increasing in beta; bisect on (0, 1)
        f = lambda b: expected_comm(TheoryInputs(b, n, mean_payload)) - budget
        a, b = 1e-12, 1.0 - 1e-12
        if f(b) < 0:
            raise UnachievableBudget(f"budget {budget} exceeds the maximum theoretical burden")
        for _ in range(200):
            mid = 0.5 * (a + b)
            a, b = (mid, b) if f(mid) < 0 else (a, mid)
        root = 0.5 * (a + b)
    if root > hi * (1.0 + 1e-12):
        raise UnachievableBudget(
            f"budget {budget} needs beta={root:.6g}, above the allowed maximum {hi}"
        )
    return clamp(root, beta_clamp)


def update_beta(beta: float, gamma: float, eta: float,
                beta_clamp: tuple[float, float] | None = None) -> float:
    new = beta / gamma ** eta
    return clamp(new, beta_clamp) if beta_clamp is not None else new


def calibrate(tasks: Iterable[Task], topology: TierTopology, cfg: CalibrationConfig,
              template: ThresholdConfig) -> CalibrationTrace:
    """Run the feedback loop over ``tasks``; queues persist across rounds.

    The first ``cfg.warmup_tasks`` tasks fill the queues at the initial beta
    and are not measured. If ``cfg.mean_payload`` is unset it is estimated from
    the warmup tasks (or the first window when there is no warmup).
    """
    stream: Iterator[Task] = iter(tasks)
    n = topology.n
    queues = QueueSet(template.k)

    warm = [t for _, t in zip(range(cfg.warmup_tasks), stream)]
    first_window: list[Task] = []
    payload = cfg.mean_payload
    if payload is None:
        sample = warm
        if not sample:
            first_window = [t for _, t in zip(range(cfg.window), stream)]
            sample = first_window
        if not sample:
            raise InsufficientWorkload("workload is empty")
        payload = sum(t.input_len + t.tier_evidence[0].output_len for t in sample) / len(sample)

    beta = initial_beta(cfg.budget, payload, n, cfg.beta_clamp)

    tcfg = replace(template, beta=beta)
    for task in warm:
        route_recserve(task, topology, queues, tcfg)

    trace = CalibrationTrace(budget=cfg.budget)
    pending = iter(first_window)
    for t in range(1, cfg.max_rounds + 1):
        tcfg = replace(template, beta=beta)
        ledger = CommLedger.zeros(n)
        count = 0
        while count < cfg.window:
            task = next(pending, None) or next(stream, None)
            if task is None:
                raise InsufficientWorkload(
                    f"workload ran out in round {t} after {count} of {cfg.window} tasks"
                )
            outcome = route_recserve(task, topology, queues, tcfg)
            ledger.add(outcome, task, cfg.strict_assumption5)
            count += 1
        burden = ledger.total_bytes / cfg.window
        gamma = burden / cfg.budget
        trace.rounds.append(CalibrationRound(t, beta, burden, gamma))
        if abs(gamma - 1.0) <= cfg.epsilon:
            trace.converged = True
            trace.final_beta = beta
            return trace
        if gamma == 0.0:
            beta = cfg.beta_clamp[1]
        else:
            beta = update_beta(beta, gamma, cfg.eta, cfg.beta_clamp)
    trace.final_beta = beta
    return trace
