"""Confidence scores from raw model evidence.

Seq2Class uses the maximum softmax probability over class logits. Seq2Seq uses
``1 / (1 + PPL)`` where PPL is the perplexity of the emitted token sequence,
so Seq2Seq scores never exceed 0.5.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import TaskType, TierEvidence
from .errors import (
    EmptyLogits,
    EmptySequence,
    EvidenceTypeMismatch,
    NonFiniteLogit,
    NonFiniteLogProb,
    PositiveLogProb,
)


def softmax(logits: Sequence[float]) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    if z.size == 0:
        raise EmptyLogits("logits must be non-empty")
    if not np.all(np.isfinite(z)):
        raise NonFiniteLogit("logits must all be finite")
    e = np.exp(z - z.max())
    return e / e.sum()


def seq2class_confidence(logits: Sequence[float]) -> float:
    z = np.asarray(logits, dtype=float)
    if z.size == 0:
        raise EmptyLogits("logits must be non-empty")
    if not np.all(np.isfinite(z)):
        raise NonFiniteLogit("logits must all be finite")
    # max prob = 1 / sum(exp(z - max)); avoids normalising the whole vector
    return float(1.0 / np.exp(z - z.max()).sum())


def seq2seq_perplexity(token_logprobs: Sequence[float]) -> float:
    lp = np.asarray(token_logprobs, dtype=float)
    if lp.size == 0:
        raise EmptySequence("token_logprobs must be non-empty")
    if not np.all(np.isfinite(lp)):
        raise NonFiniteLogProb("token log-probabilities must be finite")
    if np.any(lp > 0.0):
        raise PositiveLogProb("token log-probabilities must be <= 0")
    return math.exp(-math.fsum(lp.tolist()) / lp.size)


def seq2seq_confidence(token_logprobs: Sequence[float]) -> float:
    return 1.0 / (1.0 + seq2seq_perplexity(token_logprobs))


def score(evidence: TierEvidence, task_type: TaskType) -> float:
    if evidence.confidence is not None:
        return evidence.confidence
    if evidence.logits is not None:
        if task_type is not TaskType.SEQ2CLASS:
            raise EvidenceTypeMismatch(f"tier {evidence.tier}: logits evidence on a {task_type.value} task")
        return seq2class_confidence(evidence.logits)
    if task_type is not TaskType.SEQ2SEQ:
        raise EvidenceTypeMismatch(f"tier {evidence.tier}: token_logprobs evidence on a {task_type.value} task")
    return seq2seq_confidence(evidence.token_logprobs)
