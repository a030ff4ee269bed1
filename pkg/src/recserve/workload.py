"""Task streams: synthetic generators and JSONL trace files.

Synthetic confidences are Beta-distributed per tier. A nonzero
``length_confidence_corr`` couples each tier's confidence to the input length
through a Gaussian copula, which keeps the Beta marginals intact while
breaking the independence the closed-form predictors rely on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

import numpy as np
from scipy import stats

from .core import Task, TaskType, TierEvidence
from .errors import InconsistentTierCount, InvalidSpec, ParseError, SchemaViolation

# -- distributions ----------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise InvalidSpec(f"constant length must be non-negative, got {self.value}")

    def from_normal(self, z: np.ndarray) -> np.ndarray:
        return np.full(z.shape, int(self.value), dtype=np.int64)

    def mean(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Uniform:
    """Integer lengths uniform on ``lo..hi`` inclusive."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo < 0 or self.lo > self.hi:
            raise InvalidSpec(f"uniform needs 0 <= lo <= hi, got lo={self.lo} hi={self.hi}")

    def from_normal(self, z: np.ndarray) -> np.ndarray:
        u = stats.norm.cdf(z)
        width = self.hi - self.lo + 1
        return np.minimum(self.lo + np.floor(u * width), self.hi).astype(np.int64)

    def mean(self) -> float:
        return (self.lo + self.hi) / 2.0


@dataclass(frozen=True)
class LogNormal:
    """Lengths ``round(exp(mu + sigma * Z))``."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidSpec(f"lognormal sigma must be positive, got {self.sigma}")

    def from_normal(self, z: np.ndarray) -> np.ndarray:
        return np.rint(np.exp(self.mu + self.sigma * z)).astype(np.int64)

    def mean(self) -> float:
        return math.exp(self.mu + self.sigma ** 2 / 2.0)


LengthDist = Union[Constant, Uniform, LogNormal]


@dataclass(frozen=True)
class BetaDist:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidSpec(f"Beta parameters must be positive, got a={self.a} b={self.b}")


@dataclass(frozen=True)
class QualityModel:
    """quality = clamp(q0 + q1 * confidence, 0, 1)."""

    q0: float = 0.5
    q1: float = 0.5


def _default_conf():
    return (BetaDist(4.0, 2.0), BetaDist(5.0, 2.0), BetaDist(6.0, 2.0))


def _default_quality():
    return (QualityModel(0.5, 0.4), QualityModel(0.6, 0.35), QualityModel(0.7, 0.28))


@dataclass(frozen=True)
class SyntheticSpec:
    n_tasks: int
    task_type: TaskType = TaskType.SEQ2CLASS
    input_len_dist: LengthDist = Uniform(50, 150)
    output_len_dist: LengthDist | tuple[LengthDist, ...] = Constant(20)
    confidence_dist: tuple[BetaDist, ...] = field(default_factory=_default_conf)
    quality_model: tuple[QualityModel, ...] = field(default_factory=_default_quality)
    length_confidence_corr: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "task_type", TaskType.parse(self.task_type))
        object.__setattr__(self, "confidence_dist", tuple(self.confidence_dist))
        if isinstance(self.quality_model, QualityModel):
            object.__setattr__(self, "quality_model", (self.quality_model,) * len(self.confidence_dist))
        object.__setattr__(self, "quality_model", tuple(self.quality_model))
        if not isinstance(self.output_len_dist, (Constant, Uniform, LogNormal)):
            object.__setattr__(self, "output_len_dist", tuple(self.output_len_dist))
        if self.n_tasks < 1:
            raise InvalidSpec(f"n_tasks must be >= 1, got {self.n_tasks}")
        n = len(self.confidence_dist)
        if n < 2:
            raise InvalidSpec("need a confidence distribution for at least 2 tiers")
        if len(self.quality_model) != n:
            raise InvalidSpec(f"expected {n} quality models, got {len(self.quality_model)}")
        if isinstance(self.output_len_dist, tuple) and len(self.output_len_dist) != n:
            raise InvalidSpec(f"expected {n} output length distributions, got {len(self.output_len_dist)}")
        if not -1.0 <= self.length_confidence_corr <= 1.0:
            raise InvalidSpec(f"length_confidence_corr must lie in [-1, 1], got {self.length_confidence_corr}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidSpec("seed must be an unsigned 64-bit integer")

    @property
    def n_tiers(self) -> int:
        return len(self.confidence_dist)

    def output_dist(self, tier: int) -> LengthDist:
        if isinstance(self.output_len_dist, tuple):
            return self.output_len_dist[tier - 1]
        return self.output_len_dist

    def mean_payload(self) -> float:
        """E[|x| + |y|] using tier 1's output-length distribution."""
        return self.input_len_dist.mean() + self.output_dist(1).mean()


def generate(spec: SyntheticSpec) -> Iterator[Task]:
    """Deterministic task stream for ``spec``; the same spec always yields the same tasks."""
    rng = np.random.default_rng(spec.seed)
    N, n = spec.n_tasks, spec.n_tiers
    z_len = rng.standard_normal(N)
    input_len = spec.input_len_dist.from_normal(z_len)

    tiny = np.nextafter(0.0, 1.0)
    conf = np.empty((n, N))
    corr = spec.length_confidence_corr
    if corr == 0.0:
        for i, d in enumerate(spec.confidence_dist):
            conf[i] = rng.beta(d.a, d.b, N)
    else:
        # Spearman -> Pearson for a Gaussian copula
        rho = 2.0 * math.sin(math.pi * corr / 6.0)
        for i, d in enumerate(spec.confidence_dist):
            z = rho * z_len + math.sqrt(max(0.0, 1.0 - rho * rho)) * rng.standard_normal(N)
            conf[i] = stats.beta.ppf(stats.norm.cdf(z), d.a, d.b)
    np.clip(conf, tiny, 1.0, out=conf)

    out_len = np.empty((n, N), dtype=np.int64)
    for i in range(n):
        out_len[i] = spec.output_dist(i + 1).from_normal(rng.standard_normal(N))

    quality = np.empty((n, N))
    for i, qm in enumerate(spec.quality_model):
        p = np.clip(qm.q0 + qm.q1 * conf[i], 0.0, 1.0)
        if spec.task_type is TaskType.SEQ2CLASS:
            quality[i] = (rng.random(N) < p).astype(float)
        else:
            quality[i] = p

    width = len(str(N - 1))
    tt = spec.task_type
    conf_l, out_l, q_l, in_l = conf.T.tolist(), out_len.T.tolist(), quality.T.tolist(), input_len.tolist()
    for j in range(N):
        cj, oj, qj = conf_l[j], out_l[j], q_l[j]
        evidence = tuple(
            TierEvidence(tier=i + 1, output_len=oj[i], quality=qj[i], confidence=cj[i]) for i in range(n)
        )
        yield Task(f"t{j:0{width}d}", tt, in_l[j], evidence)


# -- JSONL traces -----------------------------------------------------------

_TASK_KEYS = {"task_id", "task_type", "input_len_bytes", "tiers"}
_TIER_KEYS = {"tier", "confidence", "logits", "token_logprobs", "output_len_bytes", "quality"}
_EVIDENCE_KEYS = ("confidence", "logits", "token_logprobs")


def task_to_record(task: Task) -> dict:
    tiers = []
    for ev in task.tier_evidence:
        rec = {"tier": ev.tier}
        if ev.confidence is not None:
            rec["confidence"] = ev.confidence
        elif ev.logits is not None:
            rec["logits"] = list(ev.logits)
        else:
            rec["token_logprobs"] = list(ev.token_logprobs)
        rec["output_len_bytes"] = ev.output_len
        rec["quality"] = ev.quality
        tiers.append(rec)
    return {
        "task_id": task.task_id,
        "task_type": task.task_type.value,
        "input_len_bytes": task.input_len,
        "tiers": tiers,
    }


def dumps_task(task: Task) -> str:
    return json.dumps(task_to_record(task), separators=(",", ":"), allow_nan=False)


def write_trace(tasks: Iterable[Task], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for task in tasks:
            fh.write(dumps_task(task))
            fh.write("\n")
            count += 1
    return count


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def parse_record(obj, line: int | None = None) -> Task:
    """Validate one decoded JSON object against the trace schema."""
    if not isinstance(obj, dict):
        raise SchemaViolation("record must be a JSON object", line)
    unknown = set(obj) - _TASK_KEYS
    if unknown:
        raise SchemaViolation(f"unknown field(s) {sorted(unknown)}", line, sorted(unknown)[0])
    for key in ("task_id", "task_type", "input_len_bytes", "tiers"):
        if key not in obj:
            raise SchemaViolation(f"missing field {key!r}", line, key)
    if not isinstance(obj["task_id"], str):
        raise SchemaViolation("task_id must be a string", line, "task_id")
    try:
        task_type = TaskType.parse(obj["task_type"]) if isinstance(obj["task_type"], str) else None
    except ValueError:
        task_type = None
    if task_type is None:
        raise SchemaViolation("task_type must be 'seq2class' or 'seq2seq'", line, "task_type")
    if not _is_int(obj["input_len_bytes"]) or obj["input_len_bytes"] < 0:
        raise SchemaViolation("input_len_bytes must be a non-negative integer", line, "input_len_bytes")
    tiers = obj["tiers"]
    if not isinstance(tiers, list) or not tiers:
        raise SchemaViolation("tiers must be a non-empty list", line, "tiers")

    evidence = []
    for pos, rec in enumerate(tiers, start=1):
        where = f"tiers[{pos - 1}]"
        if not isinstance(rec, dict):
            raise SchemaViolation(f"{where} must be an object", line, "tiers")
        unknown = set(rec) - _TIER_KEYS
        if unknown:
            raise SchemaViolation(f"{where}: unknown field(s) {sorted(unknown)}", line, sorted(unknown)[0])
        for key in ("tier", "output_len_bytes", "quality"):
            if key not in rec:
                raise SchemaViolation(f"{where}: missing field {key!r}", line, key)
        if not _is_int(rec["tier"]) or rec["tier"] != pos:
            raise SchemaViolation(f"{where}: tier must equal {pos} (tiers ascending from 1)", line, "tier")
        if not _is_int(rec["output_len_bytes"]) or rec["output_len_bytes"] < 0:
            raise SchemaViolation(f"{where}: output_len_bytes must be a non-negative integer", line,
                                  "output_len_bytes")
        if not _is_num(rec["quality"]) or not 0.0 <= rec["quality"] <= 1.0:
            raise SchemaViolation(f"{where}: quality must be a number in [0, 1]", line, "quality")
        present = [k for k in _EVIDENCE_KEYS if k in rec and rec[k] is not None]
        if len(present) != 1:
            raise SchemaViolation(f"{where}: exactly one of confidence/logits/token_logprobs required",
                                  line, "confidence")
        kind = present[0]
        value = rec[kind]
        if kind == "confidence":
            if not _is_num(value) or not 0.0 < value <= 1.0:
                raise SchemaViolation(f"{where}: confidence must be a number in (0, 1]", line, kind)
            value = float(value)
        else:
            if not isinstance(value, list) or not value or not all(_is_num(v) for v in value):
                raise SchemaViolation(f"{where}: {kind} must be a non-empty list of numbers", line, kind)
            value = tuple(float(v) for v in value)
        evidence.append(TierEvidence(tier=pos, output_len=rec["output_len_bytes"],
                                     quality=float(rec["quality"]), **{kind: value}))
    try:
        return Task(obj["task_id"], task_type, obj["input_len_bytes"], tuple(evidence))
    except ValueError as exc:
        raise SchemaViolation(str(exc), line) from None


def parse_line(text: str, line: int | None = None) -> Task:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line) from None
    return parse_record(obj, line)


def load_trace(path: str | Path) -> Iterator[Task]:
    """Yield tasks from a JSONL trace in file order. Blank lines are skipped."""
    n_tiers = None
    with open(path, encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            task = parse_line(text, lineno)
            if n_tiers is None:
                n_tiers = task.n_tiers
            elif task.n_tiers != n_tiers:
                raise InconsistentTierCount(
                    f"record has {task.n_tiers} tiers, earlier records have {n_tiers}", lineno
                )
            yield task


def derive_seed(seed: int, replica: int) -> int:
    """Replica 0 keeps ``seed``; later replicas get independent 64-bit seeds."""
    if replica == 0:
        return seed
    return int(np.random.SeedSequence([seed, replica]).generate_state(1, np.uint64)[0])


def tasks_from(source: SyntheticSpec | str | Path, replica: int = 0) -> list[Task]:
    if isinstance(source, SyntheticSpec):
        return list(generate(replace(source, seed=derive_seed(source.seed, replica))))
    return list(load_trace(source))


def mean_payload_of(tasks: Sequence[Task]) -> float:
    if not tasks:
        raise ValueError("no tasks")
    return sum(t.input_len + t.tier_evidence[0].output_len for t in tasks) / len(tasks)
