"""What the distillation losses actually compute, on a batch you can read.

Three samples, four classes, teacher confidence falling from near-certain
to uniform. The confidence weights should fall in the same order.
"""

import numpy as np

from ukd import (
    Tensor,
    backward,
    hard_loss,
    kl_div,
    log_softmax,
    peer_loss,
    teacher_loss,
    total_loss,
    uncertainty_stats,
)

teacher_logits = Tensor(np.array([
    [8.0, 0.0, 0.0, 0.0],   # near one-hot
    [2.0, 1.5, 0.0, 0.0],   # two plausible classes
    [0.1, 0.0, 0.1, 0.0],   # basically uniform
]))
labels = np.array([0, 0, 2])

# Uncertainty is measured on the teacher's plain (tau=1) output distribution.
teacher_probs = np.exp(log_softmax(teacher_logits, 1.0).data)
stats = uncertainty_stats(teacher_probs)
print("entropy per sample (nats):", np.round(stats.entropy, 4))
print("confidence weight:        ", np.round(stats.weight, 4))
print("max possible entropy ln(4):", round(float(np.log(4)), 4))

# Student logits, deliberately imperfect.
student = Tensor(np.array([
    [3.0, 1.0, 0.0, 0.0],
    [0.5, 2.0, 0.0, 0.0],
    [0.0, 0.0, 0.5, 0.0],
]), requires_grad=True)
peer = Tensor(np.array([
    [2.0, 0.0, 1.0, 0.0],
    [1.0, 1.0, 0.0, 0.0],
    [0.0, 0.5, 0.0, 0.0],
]))

tau = 4.0
hard = hard_loss(student, labels)
soft = teacher_loss(student, teacher_logits, stats.weight, tau)
mutual = peer_loss(student, peer, tau)
print("hard:", round(float(hard.data), 6),
      " teacher:", round(float(soft.data), 6),
      " peer:", round(float(mutual.data), 6))

# The combined objective is a plain weighted sum; zero-weight terms are
# skipped entirely, they never even enter the graph. total_loss also hands
# back a LossBreakdown so every component lands in the metrics log.
alpha, beta, gamma = 0.4, 0.4, 0.2
total, breakdown = total_loss(hard, soft, mutual, alpha, beta, gamma, tau=tau)
recombined = alpha * breakdown.hard + beta * breakdown.teacher + gamma * breakdown.peer
print("total:", breakdown.total, " recombined:", recombined)

backward(total)
print("gradient flows to the student:", float(np.abs(student.grad).max()) > 0)

# The tau**2 factor keeps soft-target gradients comparable across
# temperatures: the teacher loss at tau=4 is exactly 16x the raw KL
# between the same softened distributions.
w1 = np.ones(3)
loss_t4 = float(teacher_loss(student, teacher_logits, w1, tau).data)
raw_kl = float(kl_div(log_softmax(student, tau), log_softmax(teacher_logits, tau)).mean())
print("teacher loss / raw softened KL:", loss_t4 / raw_kl)
