"""
BLEU, detection failure probability, decryption bit length and a few
bookkeeping scores used by the harness.
"""
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .corpus import tokenize
from .errors import MetricDomainError

Triple = Tuple[str, str, str]


@dataclass(frozen=True)
class BleuConfig:
    max_n: int = 4
    weights: Optional[Tuple[float, ...]] = None   # None: uniform 1/max_n

    def __post_init__(self):
        if self.max_n < 1:
            raise MetricDomainError(f'max_n must be >= 1, got {self.max_n}')
        if self.weights is None:
            object.__setattr__(self, 'weights', (1.0 / self.max_n,) * self.max_n)
        if len(self.weights) != self.max_n:
            raise MetricDomainError(f'{len(self.weights)} weights for max_n={self.max_n}')
        if abs(sum(self.weights) - 1.0) > 1e-9 or min(self.weights) < 0:
            raise MetricDomainError('BLEU weights must be non-negative and sum to 1')


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def modified_precision(candidate: Sequence[str], reference: Sequence[str], n: int) -> float:
    cand = _ngrams(candidate, n)
    total = sum(cand.values())
    if total == 0:
        return 0.0
    ref = _ngrams(reference, n)
    return sum(min(count, ref[gram]) for gram, count in cand.items()) / total


def bleu(candidate: str, reference: str, cfg: BleuConfig = BleuConfig()) -> float:
    """
    exp(min(1 - len(candidate) / len(reference), 0) + sum_n u_n ln P_n), no smoothing.
    Orders longer than the candidate are dropped and the remaining weights renormalized.

    The length term only penalizes candidates longer than the reference, so a short
    candidate is scored on precision alone: bleu('london', 'Alan Turing was born in London.')
    is 1.0.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    orders = min(cfg.max_n, len(cand))
    weights = np.asarray(cfg.weights[:orders])
    weights = weights / weights.sum()
    log_p = 0.0
    for n, weight in zip(range(1, orders + 1), weights):
        p_n = modified_precision(cand, ref, n)
        if p_n == 0:
            return 0.0
        log_p += weight * math.log(p_n)
    score = math.exp(min(1.0 - len(cand) / len(ref), 0.0) + log_p)
    return min(max(score, 0.0), 1.0)


def detection_failure_probability(dep: float, delta_i: float, delta_all: float, freq: float) -> float:
    """P_fail = 1 - dep ** ((delta_i / delta_all) * freq)."""
    if not 0 < dep <= 1:
        raise MetricDomainError(f'dep must be in (0, 1], got {dep}')
    for name, value in (('delta_i', delta_i), ('delta_all', delta_all), ('freq', freq)):
        if not value > 0:
            raise MetricDomainError(f'{name} must be positive, got {value}')
    return 1.0 - dep ** ((delta_i / delta_all) * freq)


def decryption_bit_length(keyspace_bits: int, delta: int, sigma: float) -> int:
    """max(keyspace bits, delta + ceil(log2(6 sigma)))."""
    if not sigma > 0:
        raise MetricDomainError(f'sigma must be positive, got {sigma}')
    return max(int(keyspace_bits), int(delta) + math.ceil(math.log2(6.0 * sigma)))


def symbol_error_rate(sent_bits: np.ndarray, received_bits: np.ndarray) -> float:
    """Fraction of QPSK dibits that differ in at least one bit."""
    sent = np.asarray(sent_bits, dtype=np.uint8).reshape(-1, 2)
    received = np.asarray(received_bits, dtype=np.uint8).reshape(-1, 2)
    if sent.shape != received.shape:
        raise MetricDomainError(f'bit streams differ in length: {sent.size} vs {received.size}')
    if sent.size == 0:
        return 0.0
    return float(np.any(sent != received, axis=1).mean())


@dataclass(frozen=True)
class TripleScores:
    precision: float
    recall: float
    f1: float


def triple_scores(predicted: Iterable[Triple], reference: Iterable[Triple]) -> TripleScores:
    pred = set(tuple(t) for t in predicted)
    ref = set(tuple(t) for t in reference)
    hits = len(pred & ref)
    precision = hits / len(pred) if pred else 0.0
    recall = hits / len(ref) if ref else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return TripleScores(precision, recall, f1)
