"""Experiment runner: stream a workload through each method and aggregate metrics.

Within a replica every method sees the same task list and the same
availability draws, so method rows are directly comparable. Replicas get
derived seeds and are averaged; they may run on a thread pool, and results are
merged in replica order so output never depends on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .core import Task, TierTopology, tier_names
from .errors import ConfigError
from .history import QueueSet
from .netsim import CommLedger, sample_availability
from .policy import ColServe, Method, RecServe, check_method, route
from .workload import SyntheticSpec, tasks_from

_AVAIL_STREAM = 1
_COLSERVE_STREAM = 2


@dataclass
class ExperimentConfig:
    topology: TierTopology
    workload: SyntheticSpec | str | Path
    methods: list[Method]
    warmup_tasks: int = 0
    replicas: int = 1
    seed: int = 0
    strict_assumption5: bool = False
    out: str | None = None
    format: str = "csv"
    echo: dict = field(default_factory=dict)

    def validate(self) -> ExperimentConfig:
        if not self.methods:
            raise ConfigError("at least one method is required")
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if self.warmup_tasks < 0:
            raise ConfigError("warmup_tasks must be non-negative")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        for m in self.methods:
            check_method(m, self.topology.n)
        if isinstance(self.workload, SyntheticSpec):
            if self.workload.n_tiers != self.topology.n:
                raise ConfigError(
                    f"workload has {self.workload.n_tiers} tiers, topology has {self.topology.n}"
                )
            if self.warmup_tasks >= self.workload.n_tasks:
                raise ConfigError("warmup_tasks must be smaller than the workload size")
        return self


@dataclass
class MethodResult:
    """Metrics for one method over the measured (post-warmup) tasks of one replica."""

    method: str
    param: str
    n: int
    task_count: int = 0
    quality_sum: float = 0.0
    compute_sum: float = 0.0
    ledger: CommLedger = None
    completions: list[int] = None
    arrivals: list[int] = None
    offloads: list[int] = None

    def __post_init__(self):
        n = self.n
        self.ledger = self.ledger or CommLedger.zeros(n)
        self.completions = self.completions or [0] * n
        self.arrivals = self.arrivals or [0] * n
        self.offloads = self.offloads or [0] * n

    def record(self, outcome, task: Task, strict: bool) -> None:
        self.task_count += 1
        self.quality_sum += outcome.quality
        self.compute_sum += outcome.compute_cost
        self.completions[outcome.final_tier - 1] += 1
        self.arrivals[0] += 1
        for a, b in outcome.forward_hops:
            self.offloads[a - 1] += 1
            self.arrivals[b - 1] += 1
        self.ledger.add(outcome, task, strict)

    def summary(self) -> dict[str, Any]:
        tc = self.task_count
        return {
            "task_count": tc,
            "mean_quality": self.quality_sum / tc if tc else None,
            "comm": list(self.ledger.per_tier_bytes),
            "comm_total": self.ledger.total_bytes,
            "mean_compute_cost": self.compute_sum / tc if tc else None,
            "completion": [c / tc if tc else None for c in self.completions],
            "offload": [o / a if a else None for o, a in zip(self.offloads[:-1], self.arrivals[:-1])],
        }


@dataclass
class MethodSummary:
    method: str
    param: str
    task_count: float
    mean_quality: float | None
    comm: list[float]
    comm_total: float
    mean_compute_cost: float | None
    completion: list[float | None]
    offload: list[float | None]

    def comm_tier(self, tier: int) -> float:
        return self.comm[tier - 1]


@dataclass
class ExperimentReport:
    n: int
    seed: int
    replicas: int
    methods: list[MethodSummary]
    config: dict = field(default_factory=dict)

    def by_label(self, method: str, param: str = "") -> MethodSummary:
        for m in self.methods:
            if m.method == method and m.param == param:
                return m
        raise KeyError(f"{method} {param}")


def _num(v):
    if v is None:
        return None
    if isinstance(v, float) and v.is_integer() and abs(v) < 2 ** 53:
        return int(v)
    return v


def _mean(values: list):
    present = [v for v in values if v is not None]
    if not present:
        return None
    if len(present) == 1:
        return present[0]
    return sum(present) / len(present)


def run_replica(config: ExperimentConfig, replica: int) -> list[MethodResult]:
    tasks = tasks_from(config.workload, replica)
    topo = config.topology
    n = topo.n
    if tasks and tasks[0].n_tiers != n:
        raise ConfigError(f"workload has {tasks[0].n_tiers} tiers, topology has {n}")
    if config.warmup_tasks >= len(tasks) and tasks:
        raise ConfigError("warmup_tasks must be smaller than the workload size")
    N = len(tasks)
    models = [t.availability for t in topo.tiers]

    avail_draws = np.random.default_rng([config.seed, replica, _AVAIL_STREAM]).random((N, n)).tolist()
    availability = [
        [sample_availability(models[i], i + 1, j, row[i]) for i in range(n)]
        for j, row in enumerate(avail_draws)
    ]

    results = []
    for mi, method in enumerate(config.methods):
        res = MethodResult(method.label, method.param, n)
        queues = QueueSet(method.cfg.k) if isinstance(method, RecServe) else None
        draws = None
        if isinstance(method, ColServe):
            draws = np.random.default_rng(
                [config.seed, replica, _COLSERVE_STREAM, mi]).random((N, max(n - 1, 1))).tolist()
        for j, task in enumerate(tasks):
            outcome = route(task, topo, method, queues, availability[j], draws[j] if draws else None)
            if j >= config.warmup_tasks:
                res.record(outcome, task, config.strict_assumption5)
        results.append(res)
    return results


def run(config: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    config.validate()
    if threads > 1 and config.replicas > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_replica = list(pool.map(lambda r: run_replica(config, r), range(config.replicas)))
    else:
        per_replica = [run_replica(config, r) for r in range(config.replicas)]

    n = config.topology.n
    methods = []
    for mi in range(len(config.methods)):
        sums = [rep[mi].summary() for rep in per_replica]
        first = per_replica[0][mi]
        methods.append(MethodSummary(
            method=first.method,
            param=first.param,
            task_count=_num(_mean([s["task_count"] for s in sums])),
            mean_quality=_mean([s["mean_quality"] for s in sums]),
            comm=[_num(_mean([float(s["comm"][i]) for s in sums])) for i in range(n)],
            comm_total=_num(_mean([float(s["comm_total"]) for s in sums])),
            mean_compute_cost=_mean([s["mean_compute_cost"] for s in sums]),
            completion=[_mean([s["completion"][i] for s in sums]) for i in range(n)],
            offload=[_mean([s["offload"][i] for s in sums]) for i in range(n - 1)],
        ))
    return ExperimentReport(n=n, seed=config.seed, replicas=config.replicas, methods=methods,
                            config=config.echo)


# -- report output ----------------------------------------------------------

def report_columns(n: int) -> list[str]:
    names = tier_names(n)
    return (
        ["method", "param", "task_count", "mean_quality"]
        + [f"comm_{x}" for x in names]
        + ["comm_total", "mean_compute_cost"]
        + [f"completion_{x}" for x in names]
        + [f"offload_{x}" for x in names[:-1]]
        + ["seed"]
    )


def report_rows(report: ExperimentReport) -> list[dict]:
    cols = report_columns(report.n)
    rows = []
    for m in report.methods:
        values = ([m.method, m.param, m.task_count, m.mean_quality] + list(m.comm)
                  + [m.comm_total, m.mean_compute_cost] + list(m.completion) + list(m.offload)
                  + [report.seed])
        rows.append(dict(zip(cols, values)))
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(columns: Sequence[str], rows: list[dict], comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def config_comment(config: dict) -> str:
    return "config " + json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)


def render_report(report: ExperimentReport, fmt: str = "csv") -> str:
    if fmt == "json":
        doc = {"seed": report.seed, "replicas": report.replicas, "config": report.config,
               "columns": report_columns(report.n), "rows": report_rows(report)}
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    return _write_csv(report_columns(report.n), report_rows(report),
                      config_comment(report.config) if report.config else None)


COMPARE_COLUMNS = ["method", "param", "quality", "comm_total"]


def compare(config: ExperimentConfig, threads: int = 1) -> list[dict]:
    """Long-format trade-off rows, one per configured method."""
    if len(config.methods) < 2:
        raise ConfigError("compare needs at least two methods")
    report = run(config, threads)
    return [{"method": m.method, "param": m.param, "quality": m.mean_quality, "comm_total": m.comm_total}
            for m in report.methods]


def render_compare(rows: list[dict], fmt: str = "csv", config: dict | None = None) -> str:
    if fmt == "json":
        return json.dumps({"config": config or {}, "rows": rows}, indent=2) + "\n"
    return _write_csv(COMPARE_COLUMNS, rows, config_comment(config) if config else None)


def render_rows(columns: Sequence[str], rows: list[dict], fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    return _write_csv(columns, rows)
