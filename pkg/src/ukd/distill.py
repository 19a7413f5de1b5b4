"""Distillation losses and uncertainty statistics.

Three loss components drive each student: hard cross-entropy against the
labels, temperature-scaled KL toward the frozen teacher weighted per sample
by the teacher's own confidence, and temperature-scaled KL toward the other
student with gradients stopped through the peer. Confidence is one minus
normalized predictive entropy of the teacher's raw (temperature 1) softmax.

KL argument order follows the uncommon student-first convention by default;
``direction="conventional"`` flips to reference-first. Both keep the
gradient path through the live student distribution only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DistributionError, LabelError, ParameterError, ShapeError
from .gradcore import (
    Tensor,
    detach,
    exp,
    log_softmax,
    mean,
    mul,
    row_sum,
    scale,
    sub,
)

KL_DIRECTIONS = ("as_paper", "conventional")


@dataclass
class UncertaintyStats:
    """Per-sample predictive entropy (nats) and confidence weights, with means."""

    entropy: np.ndarray
    weight: np.ndarray
    mean_entropy: float
    mean_weight: float
    num_classes: int


@dataclass
class LossBreakdown:
    """One batch's loss components and the weights that combined them."""

    hard: float
    teacher: float
    peer: float
    total: float
    alpha: float
    beta: float
    gamma: float
    tau: float

    def __post_init__(self):
        vals = (self.hard, self.teacher, self.peer, self.total)
        if not all(np.isfinite(v) for v in vals):
            raise ContractError(f"non-finite loss component in {vals}")
        if any(v < -1e-12 for v in vals):
            raise ContractError(f"negative loss component in {vals}")


def _as_probs(probs) -> np.ndarray:
    p = probs.data if isinstance(probs, Tensor) else np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] < 2:
        raise ShapeError(f"need [batch, C>=2] probabilities, got shape {p.shape}")
    if (p < 0.0).any():
        raise DistributionError("probabilities must be nonnegative")
    sums = p.sum(axis=1)
    if np.abs(sums - 1.0).max() > 1e-9:
        raise DistributionError(f"rows must sum to 1 within 1e-9, worst sum {sums[np.abs(sums - 1.0).argmax()]!r}")
    return p


def entropy(probs) -> np.ndarray:
    """Per-row -sum(p ln p) in nats, with 0·ln0 taken as 0."""
    p = _as_probs(probs)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    return np.maximum(-terms.sum(axis=1), 0.0)


def confidence_weight(H, num_classes: int) -> np.ndarray:
    """w = 1 - H/ln(num_classes), clamped into [0, 1]."""
    if num_classes < 2:
        raise ParameterError(f"num_classes must be >= 2, got {num_classes}")
    h = np.asarray(H, dtype=np.float64)
    max_h = np.log(num_classes)
    if (h < -1e-9).any() or (h > max_h + 1e-9).any():
        raise DistributionError(f"entropy outside [0, ln {num_classes}]")
    return np.clip(1.0 - h / max_h, 0.0, 1.0)


def uncertainty_stats(probs) -> UncertaintyStats:
    """Entropy and confidence of each row of a probability matrix, plus means."""
    p = _as_probs(probs)
    h = entropy(p)
    w = confidence_weight(h, p.shape[1])
    return UncertaintyStats(
        entropy=h,
        weight=w,
        mean_entropy=float(h.mean()),
        mean_weight=float(w.mean()),
        num_classes=p.shape[1],
    )


def _check_log_dist(ld: np.ndarray, name: str) -> None:
    sums = np.exp(ld).sum(axis=1)
    if np.abs(sums - 1.0).max() > 1e-9:
        raise DistributionError(f"{name} is not a log-distribution (exp-row-sum off by > 1e-9)")


def kl_div(log_q, log_p) -> np.ndarray:
    """Per-row KL(q || p) from two log-distributions; a plain value, no graph."""
    lq = log_q.data if isinstance(log_q, Tensor) else np.asarray(log_q, dtype=np.float64)
    lp = log_p.data if isinstance(log_p, Tensor) else np.asarray(log_p, dtype=np.float64)
    if lq.shape != lp.shape or lq.ndim != 2:
        raise ShapeError(f"log-distributions must share a [batch, C] shape, got {lq.shape} and {lp.shape}")
    _check_log_dist(lq, "log_q")
    _check_log_dist(lp, "log_p")
    return (np.exp(lq) * (lq - lp)).sum(axis=1)


def _kl_rows(log_a: Tensor, log_b: Tensor) -> Tensor:
    """Graph-linked per-row KL(a || b) for log-distribution tensors."""
    return row_sum(mul(exp(log_a), sub(log_a, log_b)))


def _check_tau(tau: float) -> float:
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    return float(tau)


def _check_direction(direction: str) -> str:
    if direction not in KL_DIRECTIONS:
        raise ParameterError(f"direction {direction!r} not in {KL_DIRECTIONS}")
    return direction


def hard_loss(student_logits: Tensor, labels) -> Tensor:
    """Mean cross-entropy of the unsoftened student distribution vs labels."""
    labels = np.asarray(labels)
    if not np.issubdtype(labels.dtype, np.integer):
        raise LabelError(f"labels must be integers, got dtype {labels.dtype}")
    batch, c = student_logits.shape
    if labels.shape != (batch,):
        raise ShapeError(f"labels shape {labels.shape} does not match batch {batch}")
    if (labels < 0).any() or (labels >= c).any():
        raise LabelError(f"labels must lie in [0, {c})")
    onehot = np.zeros((batch, c))
    onehot[np.arange(batch), labels] = 1.0
    picked = row_sum(mul(log_softmax(student_logits, 1.0), Tensor(onehot)))
    return scale(mean(picked), -1.0)


def teacher_loss(student_logits: Tensor, teacher_logits: Tensor, w, tau: float,
                 direction: str = "as_paper") -> Tensor:
    """Confidence-weighted KL between softened student and teacher distributions.

    Per sample: w_i · tau² · KL_i, averaged over the batch. Gradients flow
    into the student logits only; the teacher side is detached regardless of
    how its logits were produced.
    """
    tau = _check_tau(tau)
    _check_direction(direction)
    w = np.asarray(w, dtype=np.float64)
    batch = student_logits.shape[0]
    if w.shape != (batch,):
        raise ShapeError(f"weight shape {w.shape} does not match batch {batch}")
    if (w < 0.0).any() or (w > 1.0).any():
        raise ParameterError("confidence weights must lie in [0, 1]")
    lq = log_softmax(student_logits, tau)
    lp = detach(log_softmax(teacher_logits, tau))
    rows = _kl_rows(lq, lp) if direction == "as_paper" else _kl_rows(lp, lq)
    return scale(mean(mul(rows, Tensor(w))), tau * tau)


def peer_loss(self_logits: Tensor, peer_logits: Tensor, tau: float,
              direction: str = "as_paper") -> Tensor:
    """Mean tau²-scaled KL toward the other student, gradients stopped at the peer."""
    tau = _check_tau(tau)
    _check_direction(direction)
    lq_self = log_softmax(self_logits, tau)
    lq_peer = detach(log_softmax(peer_logits, tau))
    rows = _kl_rows(lq_self, lq_peer) if direction == "as_paper" else _kl_rows(lq_peer, lq_self)
    return scale(mean(rows), tau * tau)


def total_loss(hard: Tensor | None, teacher: Tensor | None, peer: Tensor | None,
               alpha: float, beta: float, gamma: float, *,
               tau: float = 1.0) -> tuple[Tensor, LossBreakdown]:
    """alpha·hard + beta·teacher + gamma·peer as one scalar, plus the record.

    A zero-weighted component never enters the combined graph, so it cannot
    perturb gradients or reproducibility; its value is still recorded when
    the tensor was computed. A None component requires weight zero.
    """
    weights = {"alpha": alpha, "beta": beta, "gamma": gamma}
    for name, value in weights.items():
        if value < 0:
            raise ParameterError(f"{name} must be nonnegative, got {value}")
    live = []
    floats = []
    for term, weight in ((hard, alpha), (teacher, beta), (peer, gamma)):
        if term is None:
            if weight != 0.0:
                raise ParameterError("a missing loss component must have weight 0")
            floats.append(0.0)
            continue
        floats.append(float(term.data))
        if weight != 0.0:
            live.append(scale(term, weight))
    if live:
        combined = live[0]
        for part in live[1:]:
            combined = combined + part
    else:
        combined = Tensor(0.0)
    breakdown = LossBreakdown(
        hard=floats[0], teacher=floats[1], peer=floats[2], total=float(combined.data),
        alpha=float(alpha), beta=float(beta), gamma=float(gamma), tau=float(tau),
    )
    return combined, breakdown
