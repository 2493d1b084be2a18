"""Label-masked teacher-to-student distillation.

The student is fitted to the teacher's logits at every class except the
annotated one, so a wrong annotation cannot inject its logit into the
student. The mean maximal student probability, tracked per epoch, rises
while the teacher generalizes and falls once it starts fitting sample
details; the windowed detector below finds that turning point online.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateAgreementError, RejectedInputError
from .nn_core import _as_labels, _as_logits

AGREEMENT_MIN_MASS = 1e-300  # below this row mass the product is unrecoverable


def student_loss(teacher_logits, student_logits, labels) -> tuple[float, np.ndarray]:
    """Mean squared error between teacher and student logits at classes != label.

    The teacher logits are treated as constants. Returns the loss and its
    gradient with respect to the student logits; the gradient at each
    sample's labeled class is exactly zero.
    """
    t = _as_logits(teacher_logits, "teacher_logits")
    s = _as_logits(student_logits, "student_logits")
    if t.shape != s.shape:
        raise RejectedInputError(f"logit shapes differ: {t.shape} vs {s.shape}")
    n, c = t.shape
    if c < 2:
        raise RejectedInputError("need at least 2 classes to mask one out")
    if n == 0:
        raise RejectedInputError("student_loss needs at least one sample")
    y = _as_labels(labels, n, c)
    diff = t - s
    diff[np.arange(n), y] = 0.0
    denom = (c - 1) * n
    loss = float((diff * diff).sum() / denom)
    grad = (-2.0 / denom) * diff
    return loss, grad


def mean_max_probability(probs) -> float:
    """Mean over samples of the largest class probability."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] == 0:
        raise RejectedInputError("probs must be a non-empty 2-D batch")
    return float(np.mean(p.max(axis=1)))


@dataclass(frozen=True)
class TippingPoint:
    """Epoch of the trace maximum and the (later) epoch it was confirmed."""

    epoch: int
    detected_at: int


@dataclass
class MaxProbTrace:
    """Epoch-ordered mean-max-probability values with window half-width k.

    Single-owner accumulator: only the training thread appends. Once the
    detector fires it latches; later appends never change the result.
    """

    k: int
    values: list[float] = field(default_factory=list)
    _latched: TippingPoint | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.k < 1:
            raise RejectedInputError(f"window half-width k must be >= 1, got {self.k}")
        for v in self.values:
            self._check(v)

    @staticmethod
    def _check(value: float):
        if not (0.0 < value <= 1.0):
            raise RejectedInputError(f"trace values must lie in (0, 1], got {value}")

    def append(self, value: float):
        self._check(value)
        self.values.append(float(value))

    def __len__(self) -> int:
        return len(self.values)


def detect_tipping_point(trace: MaxProbTrace) -> TippingPoint | None:
    """First epoch whose value is the maximum of the 2k+1 epochs centered on it.

    Scans causally: at epoch i the candidate is epoch i-k, confirmed when its
    value is >= every value in [i-2k, i] (ties resolve to the earliest
    candidate). Returns None while no full window has confirmed a maximum.
    """
    if trace._latched is not None:
        return trace._latched
    v = trace.values
    k = trace.k
    for i in range(2 * k, len(v)):
        center = i - k
        window_max = max(v[i - 2 * k : i + 1])
        if v[center] >= window_max:
            tp = TippingPoint(epoch=center, detected_at=i)
            trace._latched = tp
            return tp
    return None


def agreement(probs_t, probs_s) -> np.ndarray:
    """Renormalized elementwise product of teacher and student probabilities."""
    pt = np.asarray(probs_t, dtype=np.float64)
    ps = np.asarray(probs_s, dtype=np.float64)
    if pt.shape != ps.shape or pt.ndim != 2:
        raise RejectedInputError(f"probability shapes differ: {pt.shape} vs {ps.shape}")
    for name, p in (("probs_t", pt), ("probs_s", ps)):
        if p.shape[0] and np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-6:
            raise RejectedInputError(f"{name} rows must sum to 1 within 1e-6")
    prod = pt * ps
    mass = prod.sum(axis=1)
    if np.any(mass < AGREEMENT_MIN_MASS):
        raise DegenerateAgreementError("teacher/student probability product underflowed")
    return prod / mass[:, None]
