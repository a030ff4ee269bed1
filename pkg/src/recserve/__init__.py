"""Recursive confidence-driven offloading across device, edge and cloud tiers."""

from .core import Task, TaskType, TierEvidence, TierNodeConfig, TierTopology, validate_topology
from .history import COLD_START, ConfidenceQueue, QueueSet, ThresholdConfig
from .netsim import AlwaysUp, Bernoulli, CommLedger, Schedule, account, sample_availability
from .policy import (
    CasServe,
    CloudServe,
    ColServe,
    EdgeServe,
    EndServe,
    RecServe,
    RoutingOutcome,
    route,
    route_baseline,
    route_recserve,
)

__version__ = "0.1.0"

__all__ = [
    "COLD_START",
    "AlwaysUp",
    "Bernoulli",
    "CasServe",
    "CloudServe",
    "ColServe",
    "CommLedger",
    "ConfidenceQueue",
    "EdgeServe",
    "EndServe",
    "QueueSet",
    "RecServe",
    "RoutingOutcome",
    "Schedule",
    "Task",
    "TaskType",
    "ThresholdConfig",
    "TierEvidence",
    "TierNodeConfig",
    "TierTopology",
    "account",
    "route",
    "route_baseline",
    "route_recserve",
    "sample_availability",
    "validate_topology",
]
