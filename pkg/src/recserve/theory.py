"""Closed-form predictors for RecServe under the idealized workload assumptions.

With a well-filled queue each non-top tier offloads with probability ~beta, so
a task completes at tier i with probability beta**(i-1) * (1 - beta) (tier n
absorbs the remaining beta**(n-1)). Everything here follows from that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import NonMonotoneCosts, OutOfRange

GOLDEN_BOUND = (math.sqrt(5.0) - 1.0) / 2.0


def _check_beta(beta: float) -> None:
    if not 0.0 < beta < 1.0:
        raise OutOfRange(f"beta must lie in (0, 1), got {beta}")


def _check_n(n: int) -> None:
    if n < 2:
        raise OutOfRange(f"need at least 2 tiers, got {n}")


def _check_costs(costs: Sequence[float]) -> None:
    for lo, hi in zip(costs, costs[1:]):
        if not hi > lo:
            raise NonMonotoneCosts(f"costs must strictly increase: {list(costs)}")


@dataclass(frozen=True)
class TheoryInputs:
    beta: float
    n: int
    mean_payload: float
    costs: tuple[float, ...] = ()

    def __post_init__(self):
        _check_beta(self.beta)
        _check_n(self.n)
        if not self.mean_payload > 0:
            raise OutOfRange(f"mean_payload must be positive, got {self.mean_payload}")
        object.__setattr__(self, "costs", tuple(float(c) for c in self.costs))
        if self.costs:
            if len(self.costs) != self.n:
                raise OutOfRange(f"expected {self.n} costs, got {len(self.costs)}")
            _check_costs(self.costs)


def completion_probs(beta: float, n: int) -> list[float]:
    _check_beta(beta)
    _check_n(n)
    probs = [beta ** (i - 1) * (1.0 - beta) for i in range(1, n)]
    probs.append(beta ** (n - 1))
    return probs


def cloudserve_comm(mean_payload: float) -> float:
    """Expected per-task burden when every task goes straight to the cloud."""
    return 2.0 * mean_payload


def expected_comm(inputs: TheoryInputs) -> float:
    b, n = inputs.beta, inputs.n
    s = sum((i - 1) * b ** (i - 1) * (1.0 - b) for i in range(2, n))
    s += (n - 1) * b ** (n - 1)
    return 2.0 * inputs.mean_payload * s


def expected_comm_n3(beta: float, mean_payload: float) -> float:
    _check_beta(beta)
    return 2.0 * mean_payload * beta * (1.0 + beta)


def comm_ratio(beta: float, n: int = 3) -> float:
    """RecServe / CloudServe expected burden; ``beta * (1 + beta)`` for three tiers."""
    _check_beta(beta)
    if n == 3:
        return beta * (1.0 + beta)
    return expected_comm(TheoryInputs(beta, n, 1.0)) / cloudserve_comm(1.0)


def comm_beta_bound() -> float:
    return GOLDEN_BOUND


def expected_comp(inputs: TheoryInputs) -> float:
    if not inputs.costs:
        raise OutOfRange("expected_comp needs per-tier costs")
    b, n, costs = inputs.beta, inputs.n, inputs.costs
    probs = completion_probs(b, n)
    cum = 0.0
    total = 0.0
    for p, c in zip(probs, costs):
        cum += c
        total += p * cum
    return total


def expected_comp_n3(beta: float, costs: Sequence[float]) -> float:
    _check_beta(beta)
    device, edge, cloud = costs
    return device + beta * edge + beta * beta * cloud


def comp_beta_bound(costs: Sequence[float]) -> float:
    """Largest beta for which three-tier RecServe is cheaper to compute than cloud-only."""
    if len(costs) != 3:
        raise OutOfRange("comp_beta_bound is defined for three tiers")
    device, edge, cloud = (float(c) for c in costs)
    if device < 0:
        raise NonMonotoneCosts("costs must be non-negative")
    _check_costs((device, edge, cloud))
    return (-edge + math.sqrt(edge * edge + 4.0 * cloud * (cloud - device))) / (2.0 * cloud)


def theory_table(betas: Sequence[float], n: int, mean_payload: float,
                 costs: Sequence[float]) -> list[dict]:
    """Rows for the ``theory`` CLI subcommand."""
    rows = []
    comp_bound = comp_beta_bound(costs) if n == 3 else None
    for b in betas:
        inputs = TheoryInputs(b, n, mean_payload, tuple(costs))
        row = {"beta": b}
        for i, p in enumerate(completion_probs(b, n), start=1):
            row[f"p_complete_t{i}"] = p
        row["comm_ratio"] = comm_ratio(b, n)
        row["expected_comm"] = expected_comm(inputs)
        row["expected_comp"] = expected_comp(inputs)
        row["comm_beta_bound"] = GOLDEN_BOUND if n == 3 else None
        row["comp_beta_bound"] = comp_bound
        rows.append(row)
    return rows
