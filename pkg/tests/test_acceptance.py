"""Acceptance gate: the eight package-level criteria, one test each.

Each test registers a PASS/FAIL line (with measured numbers where the
criterion asks for them) that the conftest hook prints after the run.
Tolerances are pinned here and must not be loosened: 1e-4 relative for
finite differences, 1e-12 for closed forms and recombination, byte
equality for the reduction and reproducibility checks.
"""

import hashlib
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.special import log_softmax as sp_log_softmax

from ukd.cli import main
from ukd.data import DatasetSpec
from ukd.distill import (
    confidence_weight,
    entropy,
    hard_loss,
    peer_loss,
    teacher_loss,
    total_loss,
)
from ukd.gradcore import (
    Tensor,
    add,
    backward,
    exp,
    log_softmax,
    matmul,
    mean,
    mul,
    relu,
    row_sum,
    scale,
    sub,
    tensor_sum,
    zero_grad,
)
from ukd.harness import TrainConfig, ablate, train
from ukd.nets import LayerSpec, build, compression_ratio, forward

TINY_DATA = DatasetSpec(num_classes=4, samples_per_class=40, feature_dim=8,
                        overlap_sigma=0.5, seed=0, val_fraction=0.1)


def tiny(mode, **kw):
    kw.setdefault("epochs", 3)
    kw.setdefault("teacher_epochs", 3)
    kw.setdefault("batch_size", 32)
    kw.setdefault("dataset", TINY_DATA)
    return TrainConfig(mode=mode, **kw)


@contextmanager
def criterion(log, label):
    detail = []
    try:
        yield detail
    except BaseException:
        log(f"{label}: FAIL")
        raise
    suffix = f" ({detail[0]})" if detail else ""
    log(f"{label}: PASS{suffix}")


def _dir_files(path, names):
    return {name: (path / name).read_bytes() for name in names}


RUN_FILES = ("metrics.csv", "teacher.ukdc", "student_s1_final.ukdc",
             "student_s2_final.ukdc", "student_s1_best.ukdc",
             "student_s2_best.ukdc")


# --------------------------------------------------------------- criterion 1


def _numeric_grad(build_loss, leaf, h=1e-5):
    flat = leaf.data.ravel()
    g = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = float(build_loss().data)
        flat[i] = orig - h
        lo = float(build_loss().data)
        flat[i] = orig
        g[i] = (hi - lo) / (2.0 * h)
    return g.reshape(leaf.data.shape)


def _check(build_loss, leaves):
    """Analytic vs central-difference gradients; returns worst relative error."""
    zero_grad(leaves)
    backward(build_loss())
    worst = 0.0
    for leaf in leaves:
        numeric = _numeric_grad(build_loss, leaf)
        np.testing.assert_allclose(leaf.grad, numeric, rtol=1e-4, atol=1e-8)
        denom = np.maximum(np.abs(numeric), 1e-8)
        worst = max(worst, float(np.max(np.abs(leaf.grad - numeric) / denom)))
    return worst


def _op_instances(seed):
    """One gradient-check instance per differentiable op."""
    rng = np.random.default_rng(seed)
    t = lambda *shape: Tensor(rng.normal(size=shape), requires_grad=True)

    a, b = t(3, 4), t(4, 2)
    yield lambda: mean(matmul(a, b)), [a, b]

    x, w, bias = t(5, 3), t(3, 4), t(4)
    yield lambda: mean(add(matmul(x, w), bias)), [w, bias]

    p, q = t(4, 4), t(4, 4)
    yield lambda: mean(sub(p, q)), [p, q]
    yield lambda: mean(mul(p, q)), [p, q]
    yield lambda: mean(scale(p, -1.7)), [p]

    r = t(4, 5)
    r.data[np.abs(r.data) < 1e-2] += 3e-2  # keep clear of the relu kink
    yield lambda: mean(relu(r)), [r]

    e = Tensor(rng.normal(scale=0.5, size=(3, 4)), requires_grad=True)
    yield lambda: mean(exp(e)), [e]

    z = t(6, 5)
    pick = Tensor(rng.normal(size=(6, 5)))
    yield lambda: mean(mul(log_softmax(z, 1.0), pick)), [z]
    z4 = t(6, 5)
    yield lambda: mean(mul(log_softmax(z4, 4.0), pick)), [z4]

    s, u = t(3, 6), t(3, 6)
    yield lambda: mean(row_sum(mul(s, u))), [s, u]
    yield lambda: scale(tensor_sum(mul(s, u)), 0.25), [s, u]


def _loss_instances(seed):
    """One gradient-check instance per loss, plus the combined total through a net."""
    rng = np.random.default_rng(seed + 5000)
    labels = rng.integers(0, 6, size=5)
    weights = rng.uniform(0.0, 1.0, size=5)
    logits = Tensor(rng.normal(size=(5, 6)), requires_grad=True)
    t_logits = Tensor(rng.normal(size=(5, 6)))
    p_logits = Tensor(rng.normal(size=(5, 6)))

    yield lambda: hard_loss(logits, labels), [logits]
    yield lambda: teacher_loss(logits, t_logits, weights, 4.0), [logits]
    yield lambda: peer_loss(logits, p_logits, 4.0), [logits]

    net = build([LayerSpec(4, 8, "relu"), LayerSpec(8, 6, "none")], seed)
    x = Tensor(rng.normal(size=(5, 4)))

    def combined():
        z = forward(net, x)
        loss, _ = total_loss(hard_loss(z, labels),
                             teacher_loss(z, t_logits, weights, 4.0),
                             peer_loss(z, p_logits, 4.0),
                             0.4, 0.4, 0.2, tau=4.0)
        return loss

    yield combined, net.parameters


def test_criterion_1_gradient_suite(acceptance_log):
    with criterion(acceptance_log, "criterion 1, finite-difference gradient suite") as detail:
        started = time.perf_counter()
        instances = 0
        worst = 0.0
        for seed in range(8):
            for build_loss, leaves in _op_instances(seed):
                worst = max(worst, _check(build_loss, leaves))
                instances += 1
            for build_loss, leaves in _loss_instances(seed):
                worst = max(worst, _check(build_loss, leaves))
                instances += 1
        elapsed = time.perf_counter() - started
        assert instances >= 100
        assert elapsed < 30.0
        detail.append(f"{instances} instances, worst rel err {worst:.2e}, {elapsed:.1f}s")


# --------------------------------------------------------------- criterion 2


def test_criterion_2_closed_forms(acceptance_log):
    with criterion(acceptance_log, "criterion 2, closed-form checks") as detail:
        worst = 0.0
        for c in (2, 10, 100):
            h = float(entropy(np.full((1, c), 1.0 / c))[0])
            worst = max(worst, abs(h - math.log(c)))
            assert abs(h - math.log(c)) <= 1e-12
            assert confidence_weight(np.array([0.0]), c)[0] == 1.0
            assert confidence_weight(np.array([math.log(c)]), c)[0] == 0.0

        rng = np.random.default_rng(3)
        student = rng.normal(size=(6, 5))
        teacher = rng.normal(size=(6, 5))
        lq = sp_log_softmax(student / 4.0, axis=1)
        lp = sp_log_softmax(teacher / 4.0, axis=1)
        matched_kl = float(np.mean(np.sum(np.exp(lq) * (lq - lp), axis=1)))
        loss = teacher_loss(Tensor(student), Tensor(teacher),
                            np.ones(6), 4.0).data
        assert abs(float(loss) - 16.0 * matched_kl) <= 1e-12
        detail.append(f"uniform-entropy err <= {worst:.1e}, tau^2 factor 16 exact")


# --------------------------------------------------------------- criterion 3


def test_criterion_3_reduction_equivalences(acceptance_log, tmp_path, monkeypatch):
    with criterion(acceptance_log, "criterion 3, bitwise mode reductions") as detail:
        # baseline_kd == uncertainty_kd once the confidence weights are forced to 1
        train(tiny("baseline_kd"), tmp_path / "kd")
        monkeypatch.setattr("ukd.harness.confidence_for_mode",
                            lambda mode, stats: np.ones_like(stats.weight))
        train(tiny("uncertainty_kd"), tmp_path / "ukd_w1")
        monkeypatch.undo()
        assert _dir_files(tmp_path / "kd", RUN_FILES) == \
            _dir_files(tmp_path / "ukd_w1", RUN_FILES)

        # dual with gamma=0 == two independent uncertainty-weighted students
        train(tiny("dual", gamma=0.0), tmp_path / "dual_g0")
        train(tiny("uncertainty_kd", alpha=0.4, beta=0.4), tmp_path / "ukd")
        assert _dir_files(tmp_path / "dual_g0", RUN_FILES) == \
            _dir_files(tmp_path / "ukd", RUN_FILES)

        # beta=gamma=0 == plain supervised training
        train(tiny("dual", alpha=1.0, beta=0.0, gamma=0.0), tmp_path / "dual_sup")
        train(tiny("hard_only"), tmp_path / "hard")
        assert _dir_files(tmp_path / "dual_sup", RUN_FILES) == \
            _dir_files(tmp_path / "hard", RUN_FILES)
        detail.append("3 reductions, all run files byte-identical")


# --------------------------------------------------------------- criterion 4


def test_criterion_4_peer_gradient_isolation(acceptance_log):
    with criterion(acceptance_log, "criterion 4, peer-gradient isolation") as detail:
        rng = np.random.default_rng(11)
        s1 = build([LayerSpec(6, 12, "relu"), LayerSpec(12, 5, "none")], 1)
        s2 = build([LayerSpec(6, 9, "relu"), LayerSpec(9, 5, "none")], 2)
        x = Tensor(rng.normal(size=(8, 6)))
        zero_grad(s1.parameters)
        zero_grad(s2.parameters)
        # alpha = beta = 0: the peer term is the entire loss
        loss, _ = total_loss(None, None,
                             peer_loss(forward(s1, x), forward(s2, x), 4.0),
                             0.0, 0.0, 1.0, tau=4.0)
        backward(loss)
        peer_abs = max(float(np.max(np.abs(p.grad))) for p in s2.parameters)
        own_abs = max(float(np.max(np.abs(p.grad))) for p in s1.parameters)
        assert peer_abs == 0.0  # exactly zero on the raw arrays
        assert own_abs > 0.0
        detail.append(f"peer max |grad| = {peer_abs}, own max |grad| = {own_abs:.2e}")


# --------------------------------------------------------------- criterion 5


def test_criterion_5_compression_arithmetic(acceptance_log):
    with criterion(acceptance_log, "criterion 5, compression ratios") as detail:
        r1 = compression_ratio(25.6e6, 11.7e6)
        r2 = compression_ratio(25.6e6, 3.5e6)
        assert r1 == 2.19
        assert r2 == 7.31
        detail.append(f"25.6e6/11.7e6 = {r1:.2f}, 25.6e6/3.5e6 = {r2:.2f}")


# --------------------------------------------------------------- criterion 6


def test_criterion_6_directional_replication(acceptance_log, tmp_path):
    with criterion(acceptance_log, "criterion 6, directional replication") as detail:
        started = time.perf_counter()
        result = ablate(TrainConfig(mode="dual"), [0, 1, 2, 3, 4],
                        out_root=tmp_path / "ladder")
        elapsed = time.perf_counter() - started
        deltas = []
        for student in ("s1", "s2"):
            hard = result.means["hard_only"][student]
            for row in ("baseline_kd", "uncertainty_kd", "dual"):
                assert result.means[row][student] > hard, \
                    f"{row} does not beat hard_only for {student}"
            gain = result.means["dual"][student] - result.means["baseline_kd"][student]
            assert gain > 0.0, f"dual does not beat baseline_kd for {student}"
            kd_floor = min(result.means[row][student]
                           for row in ("baseline_kd", "uncertainty_kd", "dual"))
            deltas.append(f"{student}: minKD-hard {kd_floor - hard:+.4f}, "
                          f"dual-baseline {gain:+.4f}")
        assert elapsed < 540.0  # the ladder must leave headroom in the 10 min budget
        detail.append("; ".join(deltas) + f"; 5 seeds, {elapsed:.0f}s")


# --------------------------------------------------------------- criterion 7


def test_criterion_7_statistics_plumbing(acceptance_log):
    with criterion(acceptance_log, "criterion 7, statistics plumbing") as detail:
        cap = math.log(10)
        checked = 0
        for mode in ("uncertainty_kd", "dual"):
            result = train(TrainConfig(mode=mode, epochs=6), None)
            for record in result.records:
                assert 0.0 <= record.mean_weight <= 1.0
                assert 0.0 <= record.mean_entropy <= cap + 1e-12
            for student in ("s1", "s2"):
                for bd in result.breakdowns[student]:
                    lhs = bd.alpha * bd.hard + bd.beta * bd.teacher + bd.gamma * bd.peer
                    assert abs(bd.total - lhs) <= 1e-12
                    checked += 1
        detail.append(f"{checked} logged batches recombine within 1e-12")


# --------------------------------------------------------------- criterion 8


def test_criterion_8_command_reproducibility(acceptance_log, tmp_path, monkeypatch):
    with criterion(acceptance_log, "criterion 8, command-level reproducibility") as detail:
        tiny_flags = ["--classes", "4", "--per-class", "40", "--dim", "8",
                      "--sigma", "0.5", "--epochs", "3", "--teacher-epochs", "3",
                      "--batch-size", "32"]
        digests = {"a": {}, "b": {}}
        for tag in ("a", "b"):
            root = tmp_path / tag
            monkeypatch.setenv("UKD_RUN_ROOT", str(root))
            monkeypatch.chdir(_fresh_dir(tmp_path / f"cwd_{tag}"))
            assert main(["gen-data", "--classes", "4", "--per-class", "40",
                         "--dim", "8", "--sigma", "0.5", "--seed", "2",
                         "-o", "ds.ukdd"]) == 0
            digests[tag]["gen-data ds.ukdd"] = _sha("ds.ukdd")
            assert main(["train", "--mode", "dual"] + tiny_flags) == 0
            for name in RUN_FILES:
                digests[tag][f"train {name}"] = _sha(root / "dual-seed0" / name)
            assert main(["ablate", "--seeds", "1"] + tiny_flags) == 0
            digests[tag]["ablate ablation.csv"] = _sha(root / "ablation" / "ablation.csv")
            digests[tag]["ablate metrics.csv"] = _sha(
                root / "ablation" / "dual-block0" / "metrics.csv")
        assert digests["a"] == digests["b"]
        detail.append(f"{len(digests['a'])} artifacts byte-identical "
                      "across gen-data, train, ablate")


def _fresh_dir(path):
    path.mkdir(parents=True, exist_ok=True)
    return path


def _sha(path):
    import pathlib
    return hashlib.sha256(pathlib.Path(path).read_bytes()).hexdigest()
