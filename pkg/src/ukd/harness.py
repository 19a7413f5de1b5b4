"""Training protocols: teacher pretraining, single and dual student steps,
full runs with metrics and checkpoints, and the loss-component ablation ladder.

Reproducibility rests on named RNG streams. The dataset comes from
seeds.data, teacher init and pretraining order from seeds.teacher, student
inits from seeds.student1/student2, and the shared batch order plus
augmentation noise from seeds.shuffle. No step consumes randomness anywhere
else, which is what makes the mode-reduction equivalences hold bit for bit:
a dual run with gamma=0 performs, float by float, the same updates as two
single-student runs with the same seeds.

Metrics CSVs must be byte-identical across repeated runs, so the
wall_seconds column is written as 0.0; real timing goes to the run summary.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Dataset, DatasetSpec, augment, batches, generate
from .distill import (
    LossBreakdown,
    UncertaintyStats,
    hard_loss,
    peer_loss,
    teacher_loss,
    total_loss,
    uncertainty_stats,
)
from .errors import DataError, FormatError, NumericError, SpecError
from .gradcore import Tensor, backward, log_softmax, no_grad, zero_grad
from .nets import (
    LayerSpec,
    Network,
    build,
    compression_ratio,
    default_student1_spec,
    default_student2_spec,
    default_teacher_spec,
    forward,
    param_count,
)
from .optim import CosineSchedule, SgdState, lr_at, sgd_step

MODES = ("hard_only", "baseline_kd", "uncertainty_kd", "dual")

# Loss weights per mode: (alpha, beta, gamma).
MODE_WEIGHTS = {
    "hard_only": (1.0, 0.0, 0.0),
    "baseline_kd": (0.3, 0.7, 0.0),
    "uncertainty_kd": (0.3, 0.7, 0.0),
    "dual": (0.4, 0.4, 0.2),
}

ABLATION_ROWS = ("hard_only", "baseline_kd", "uncertainty_kd", "dual")

METRICS_HEADER = ("epoch,student,train_loss,hard,teacher,peer,total,train_top1,"
                  "val_top1,val_top5,mean_entropy,mean_weight,lr,wall_seconds")

UKDC_MAGIC = b"UKDC"
UKDC_VERSION = 1
ACTIVATION_CODES = {"none": 0, "relu": 1}
CODE_ACTIVATIONS = {v: k for k, v in ACTIVATION_CODES.items()}


@dataclass(frozen=True)
class Seeds:
    """The five independent RNG stream roots of one run."""

    data: int
    teacher: int
    student1: int
    student2: int
    shuffle: int

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise SpecError(f"seed {name} must be nonnegative, got {value}")

    @classmethod
    def from_block(cls, block: int) -> "Seeds":
        """Block n covers seeds n*1000 .. n*1000+4, one per stream."""
        if block < 0:
            raise SpecError(f"seed block must be nonnegative, got {block}")
        base = block * 1000
        return cls(base, base + 1, base + 2, base + 3, base + 4)


@dataclass
class TrainConfig:
    """Everything a run depends on; a run is a pure function of this object."""

    mode: str
    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None
    tau: float = 4.0
    epochs: int = 30
    batch_size: int = 64
    eta0: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-4
    kl_direction: str = "as_paper"
    teacher_epochs: int = 30
    augment_strength: float = 0.1
    augment_flip: bool = False
    seeds: Seeds = field(default_factory=lambda: Seeds.from_block(0))
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    teacher_spec: list[LayerSpec] | None = None
    student1_spec: list[LayerSpec] | None = None
    student2_spec: list[LayerSpec] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise SpecError(f"mode {self.mode!r} not in {MODES}")
        defaults = MODE_WEIGHTS[self.mode]
        if self.alpha is None:
            self.alpha = defaults[0]
        if self.beta is None:
            self.beta = defaults[1]
        if self.gamma is None:
            self.gamma = defaults[2]
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise SpecError(f"{name} must be nonnegative")
        if self.mode == "hard_only" and (self.beta != 0.0 or self.gamma != 0.0):
            raise SpecError("hard_only requires beta = gamma = 0")
        if self.mode in ("baseline_kd", "uncertainty_kd") and self.gamma != 0.0:
            raise SpecError(f"{self.mode} requires gamma = 0 (peer term is dual-only)")
        if not self.tau > 0:
            raise SpecError(f"tau must be positive, got {self.tau}")
        for name in ("epochs", "batch_size", "teacher_epochs"):
            if getattr(self, name) < 1:
                raise SpecError(f"{name} must be >= 1")
        if self.momentum < 0 or self.weight_decay < 0 or self.augment_strength < 0:
            raise SpecError("momentum, weight_decay, augment_strength must be nonnegative")
        if self.kl_direction not in ("as_paper", "conventional"):
            raise SpecError(f"kl_direction {self.kl_direction!r} invalid")
        if self.dataset.seed != self.seeds.data:
            raise SpecError(
                f"dataset.seed ({self.dataset.seed}) must equal seeds.data ({self.seeds.data}); "
                "the data stream has exactly one root"
            )
        dim, c = self.dataset.feature_dim, self.dataset.num_classes
        if self.teacher_spec is None:
            self.teacher_spec = default_teacher_spec(dim, c)
        if self.student1_spec is None:
            self.student1_spec = default_student1_spec(dim, c)
        if self.student2_spec is None:
            self.student2_spec = default_student2_spec(dim, c)
        for name in ("teacher_spec", "student1_spec", "student2_spec"):
            spec = getattr(self, name)
            if spec[0].in_dim != dim or spec[-1].out_dim != c:
                raise SpecError(f"{name} must map feature_dim {dim} to num_classes {c}")
        if self.student1_spec == self.student2_spec:
            raise SpecError("students must be heterogeneous (identical specs given)")


@dataclass
class MetricsRecord:
    """One (epoch, student) row of the metrics CSV."""

    epoch: int
    student: str
    train_loss: float
    hard: float
    teacher: float
    peer: float
    total: float
    train_top1: float
    val_top1: float
    val_top5: float
    mean_entropy: float
    mean_weight: float
    lr: float
    wall_seconds: float

    def csv_row(self) -> str:
        # wall_seconds is forced to 0.0 in files so identical runs produce
        # identical bytes; the true timing lives in the run summary.
        cells = [str(self.epoch), self.student] + [
            repr(v) for v in (
                self.train_loss, self.hard, self.teacher, self.peer, self.total,
                self.train_top1, self.val_top1, self.val_top5,
                self.mean_entropy, self.mean_weight, self.lr, 0.0,
            )
        ]
        return ",".join(cells)


@dataclass
class RunResult:
    """Everything a finished run produced, with or without a run directory."""

    run_dir: Path | None
    records: list[MetricsRecord]
    breakdowns: dict[str, list[LossBreakdown]]
    summary: dict
    teacher: Network
    students: dict[str, Network]


def confidence_for_mode(mode: str, stats: UncertaintyStats) -> np.ndarray:
    """Per-sample teacher weighting: all ones unless the mode is uncertainty-aware."""
    if mode in ("uncertainty_kd", "dual"):
        return stats.weight
    return np.ones_like(stats.weight)


def _named_term(name: str, fn):
    """Evaluate one loss term, naming it in any numeric failure."""
    try:
        return fn()
    except NumericError as err:
        raise NumericError(f"{name} loss term diverged: {err}") from err


def _student_loss(student_logits: Tensor, teacher_logits: Tensor, labels, w,
                  config: TrainConfig, peer_logits: Tensor | None = None):
    """Combined loss for one student; zero-weighted terms are never built."""
    hard = teach = peer = None
    if config.alpha != 0.0:
        hard = _named_term("hard", lambda: hard_loss(student_logits, labels))
    if config.beta != 0.0:
        teach = _named_term("teacher", lambda: teacher_loss(
            student_logits, teacher_logits, w, config.tau, config.kl_direction))
    if config.gamma != 0.0 and peer_logits is not None:
        peer = _named_term("peer", lambda: peer_loss(
            student_logits, peer_logits, config.tau, config.kl_direction))
    return total_loss(hard, teach, peer, config.alpha, config.beta, config.gamma,
                      tau=config.tau)


def _teacher_stats(teacher: Network, x: np.ndarray):
    """Frozen-teacher logits plus uncertainty statistics of its raw softmax."""
    t_logits = forward(teacher, Tensor(x))
    probs = np.exp(log_softmax(t_logits, 1.0).data)
    return t_logits, uncertainty_stats(probs)


def train_step_single(teacher: Network, student: Network, batch, config: TrainConfig,
                      opt: SgdState) -> tuple[LossBreakdown, UncertaintyStats]:
    """One supervised+teacher update of a lone student (no peer term)."""
    x, y = batch
    t_logits, stats = _teacher_stats(teacher, x)
    w = confidence_for_mode(config.mode, stats)
    logits = forward(student, Tensor(x))
    loss, breakdown = _student_loss(logits, t_logits, y, w, config)
    zero_grad(student.parameters)
    backward(loss)
    sgd_step(student.parameters, opt)
    return breakdown, stats


def train_step_dual(teacher: Network, s1: Network, s2: Network, batch,
                    config: TrainConfig, opt1: SgdState, opt2: SgdState,
                    ) -> tuple[LossBreakdown, LossBreakdown, UncertaintyStats]:
    """Synchronized forwards, then independent backwards and updates.

    Both students see the same inputs and the same teacher distribution; each
    treats the other's prediction as a fixed target (gradient-stopped), so
    neither update can leak into the other network.
    """
    x, y = batch
    if x.shape[0] == 0:
        raise DataError("empty batch")
    if not teacher.frozen:
        raise SpecError("teacher must be frozen before student training")
    t_logits, stats = _teacher_stats(teacher, x)
    w = confidence_for_mode(config.mode, stats)
    z1 = forward(s1, Tensor(x))
    z2 = forward(s2, Tensor(x))
    loss1, bd1 = _student_loss(z1, t_logits, y, w, config, peer_logits=z2)
    loss2, bd2 = _student_loss(z2, t_logits, y, w, config, peer_logits=z1)
    zero_grad(s1.parameters)
    backward(loss1)
    zero_grad(s2.parameters)
    backward(loss2)
    sgd_step(s1.parameters, opt1)
    sgd_step(s2.parameters, opt2)
    return bd1, bd2, stats


def pretrain_teacher(config: TrainConfig, ds: Dataset | None = None,
                     ) -> tuple[Network, float]:
    """Supervised training of the teacher, then freeze; returns (net, val top-1).

    All of the teacher's randomness (init, batch order, augmentation) comes
    from seeds.teacher, leaving the student streams untouched.
    """
    if ds is None:
        ds = generate(config.dataset)
    teacher = build(config.teacher_spec, config.seeds.teacher)
    sched = CosineSchedule(config.eta0, config.teacher_epochs)
    opt = SgdState.for_params(teacher.parameters, lr_at(sched, 0),
                              config.momentum, config.weight_decay)
    for epoch in range(config.teacher_epochs):
        opt.lr = lr_at(sched, epoch)
        aug_rng = np.random.default_rng([config.seeds.teacher, epoch, 1])
        for x, y in batches(ds, "train", config.batch_size, config.seeds.teacher, epoch):
            x = augment(x, config.augment_strength, aug_rng, config.augment_flip)
            loss = _named_term("hard", lambda: hard_loss(forward(teacher, Tensor(x)), y))
            zero_grad(teacher.parameters)
            backward(loss)
            sgd_step(teacher.parameters, opt)
    teacher.freeze()
    return teacher, evaluate(teacher, ds, "val")["top1"]


def evaluate(net: Network, ds: Dataset, split: str) -> dict[str, float]:
    """Top-1 and top-k accuracy (k = min(5, C)); ties go to the lowest class."""
    feats, labels = ds.split_arrays(split)
    if feats.shape[0] == 0:
        raise DataError(f"split {split!r} is empty")
    with no_grad():
        logits = np.vstack([
            forward(net, Tensor(feats[i: i + 512])).data
            for i in range(0, feats.shape[0], 512)
        ])
    k = min(5, logits.shape[1])
    order = np.argsort(-logits, axis=1, kind="stable")
    top1 = float((order[:, 0] == labels).mean())
    topk = float((order[:, :k] == labels[:, None]).any(axis=1).mean())
    return {"top1": top1, "top5": topk}


def train(config: TrainConfig, out_dir=None, teacher: Network | None = None) -> RunResult:
    """Run one full training per the config; write metrics/checkpoints if out_dir.

    A prebuilt frozen teacher may be passed to share pretraining across runs;
    it must be byte-identical to what pretrain_teacher(config) would build,
    which holds whenever data and teacher seeds (and teacher hypers) match.
    """
    started = time.perf_counter()
    ds = generate(config.dataset)
    if teacher is None:
        teacher, teacher_val = pretrain_teacher(config, ds)
    else:
        if not teacher.frozen:
            raise SpecError("injected teacher must be frozen")
        teacher_val = evaluate(teacher, ds, "val")["top1"]
    students = {
        "s1": build(config.student1_spec, config.seeds.student1),
        "s2": build(config.student2_spec, config.seeds.student2),
    }
    sched = CosineSchedule(config.eta0, config.epochs)
    opts = {
        name: SgdState.for_params(net.parameters, lr_at(sched, 0),
                                  config.momentum, config.weight_decay)
        for name, net in students.items()
    }
    records: list[MetricsRecord] = []
    breakdowns: dict[str, list[LossBreakdown]] = {"s1": [], "s2": []}
    best: dict[str, tuple[float, list[np.ndarray]]] = {"s1": (-1.0, []), "s2": (-1.0, [])}

    run_dir = Path(out_dir) if out_dir is not None else None
    metrics_fh = None
    if run_dir is not None:
        run_dir.mkdir(parents=True, exist_ok=True)
        metrics_fh = open(run_dir / "metrics.csv", "w", encoding="ascii", newline="\n")
        metrics_fh.write(METRICS_HEADER + "\n")

    try:
        for epoch in range(config.epochs):
            epoch_started = time.perf_counter()
            lr = lr_at(sched, epoch)
            opts["s1"].lr = opts["s2"].lr = lr
            sums = {name: np.zeros(4) for name in students}  # hard, teacher, peer, total
            entropy_sum = weight_sum = 0.0
            seen = 0
            aug_rng = np.random.default_rng([config.seeds.shuffle, epoch, 1])
            for x, y in batches(ds, "train", config.batch_size, config.seeds.shuffle, epoch):
                x = augment(x, config.augment_strength, aug_rng, config.augment_flip)
                bd1, bd2, stats = train_step_dual(
                    teacher, students["s1"], students["s2"], (x, y), config,
                    opts["s1"], opts["s2"])
                n = x.shape[0]
                for name, bd in (("s1", bd1), ("s2", bd2)):
                    breakdowns[name].append(bd)
                    sums[name] += n * np.array([bd.hard, bd.teacher, bd.peer, bd.total])
                entropy_sum += stats.entropy.sum()
                weight_sum += stats.weight.sum()
                seen += n
            wall = time.perf_counter() - epoch_started
            for name, net in students.items():
                train_eval = evaluate(net, ds, "train")
                val_eval = evaluate(net, ds, "val")
                means = sums[name] / seen
                record = MetricsRecord(
                    epoch=epoch, student=name,
                    train_loss=float(means[3]), hard=float(means[0]),
                    teacher=float(means[1]), peer=float(means[2]), total=float(means[3]),
                    train_top1=train_eval["top1"],
                    val_top1=val_eval["top1"], val_top5=val_eval["top5"],
                    mean_entropy=float(entropy_sum / seen),
                    mean_weight=float(weight_sum / seen),
                    lr=lr, wall_seconds=wall,
                )
                records.append(record)
                if metrics_fh is not None:
                    metrics_fh.write(record.csv_row() + "\n")
                if val_eval["top1"] > best[name][0]:
                    best[name] = (val_eval["top1"], [p.data.copy() for p in net.parameters])
    finally:
        if metrics_fh is not None:
            metrics_fh.close()

    summary = _summarize(config, teacher, teacher_val, students, records, best,
                         time.perf_counter() - started)
    if run_dir is not None:
        save_checkpoint(teacher, run_dir / "teacher.ukdc")
        for name, net in students.items():
            save_checkpoint(net, run_dir / f"student_{name}_final.ukdc")
            snapshot = Network(net.layers, _params_from_arrays(net, best[name][1]))
            save_checkpoint(snapshot, run_dir / f"student_{name}_best.ukdc")
        with open(run_dir / "summary.json", "w", encoding="ascii", newline="\n") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    return RunResult(run_dir, records, breakdowns, summary, teacher, students)


def _params_from_arrays(net: Network, arrays: list[np.ndarray]) -> dict[str, Tensor]:
    params: dict[str, Tensor] = {}
    for i in range(len(net.layers)):
        params[f"weight_{i}"] = Tensor(arrays[2 * i].copy(), requires_grad=True)
        params[f"bias_{i}"] = Tensor(arrays[2 * i + 1].copy(), requires_grad=True)
    return params


def _summarize(config, teacher, teacher_val, students, records, best, wall_total):
    teacher_params = param_count(teacher)
    final = {r.student: r for r in records if r.epoch == config.epochs - 1}
    student_block = {}
    for name, net in students.items():
        pc = param_count(net)
        student_block[name] = {
            "param_count": pc,
            "compression_ratio": compression_ratio(teacher_params, pc),
            "final_val_top1": final[name].val_top1,
            "final_val_top5": final[name].val_top5,
            "best_val_top1": best[name][0],
            "final_train_loss": final[name].train_loss,
        }
    any_final = final["s1"]
    return {
        "mode": config.mode,
        "epochs": config.epochs,
        "teacher": {"param_count": teacher_params, "val_top1": teacher_val},
        "students": student_block,
        "uncertainty": {
            "final_mean_entropy": any_final.mean_entropy,
            "final_mean_weight": any_final.mean_weight,
            "max_entropy": float(np.log(config.dataset.num_classes)),
        },
        "config": _config_echo(config),
        "total_wall_seconds": wall_total,
    }


def _config_echo(config: TrainConfig) -> dict:
    echo = asdict(config)
    for name in ("teacher_spec", "student1_spec", "student2_spec"):
        echo[name] = [[s.in_dim, s.out_dim, s.activation] for s in getattr(config, name)]
    return echo


# ---------------------------------------------------------------- ablation


@dataclass
class AblationResult:
    """Final val top-1 per ladder row, student, and seed, plus aggregates."""

    rows: list[str]
    seeds: list[int]
    finals: dict[str, dict[str, list[float]]]  # row -> student -> per-seed values
    means: dict[str, dict[str, float]]
    stds: dict[str, dict[str, float]]

    def csv_text(self) -> str:
        lines = ["row,student,mean_val_top1,std_val_top1," +
                 ",".join(f"seed{s}" for s in self.seeds)]
        for row in self.rows:
            for student in ("s1", "s2"):
                vals = self.finals[row][student]
                lines.append(",".join(
                    [row, student, repr(self.means[row][student]),
                     repr(self.stds[row][student])] + [repr(v) for v in vals]))
        return "\n".join(lines) + "\n"

    def table_text(self) -> str:
        width = max(len(r) for r in self.rows) + 2
        lines = [f"{'row':<{width}}{'student':<9}{'val_top1 (mean +/- std)':<26}"]
        for row in self.rows:
            for student in ("s1", "s2"):
                cell = f"{self.means[row][student]:.4f} +/- {self.stds[row][student]:.4f}"
                lines.append(f"{row:<{width}}{student:<9}{cell:<26}")
        return "\n".join(lines) + "\n"


def _ablation_config(base: TrainConfig, mode: str, block: int) -> TrainConfig:
    seeds = Seeds.from_block(block)
    return replace(
        base, mode=mode, alpha=None, beta=None, gamma=None, seeds=seeds,
        dataset=replace(base.dataset, seed=seeds.data),
    )


def _run_block(base: TrainConfig, block: int, out_root) -> dict[str, dict[str, float]]:
    """All four ladder rows for one seed block, sharing one pretrained teacher."""
    teacher: Network | None = None
    finals: dict[str, dict[str, float]] = {}
    for mode in ABLATION_ROWS:
        config = _ablation_config(base, mode, block)
        if teacher is None:
            teacher, _ = pretrain_teacher(config)
        run_dir = None if out_root is None else Path(out_root) / f"{mode}-block{block}"
        result = train(config, run_dir, teacher=teacher)
        finals[mode] = {
            name: result.summary["students"][name]["final_val_top1"]
            for name in ("s1", "s2")
        }
    return finals


def ablate(base_config: TrainConfig, seeds: list[int], out_root=None,
           jobs: int = 1) -> AblationResult:
    """The four-row loss-component ladder, averaged over seed blocks.

    Rows: hard labels only; plus teacher KD (weights fixed, confidence off);
    plus confidence weighting; plus the peer term (dual mode). Each block
    pretrains one teacher reused across its rows. jobs > 1 runs blocks in
    parallel processes; results are merged in block order either way.
    """
    if not seeds:
        raise SpecError("ablate needs at least one seed block")
    if jobs < 1:
        raise SpecError(f"jobs must be >= 1, got {jobs}")
    if out_root is not None:
        Path(out_root).mkdir(parents=True, exist_ok=True)
    if jobs == 1 or len(seeds) == 1:
        per_block = [_run_block(base_config, b, out_root) for b in seeds]
    else:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=min(jobs, len(seeds))) as pool:
            per_block = list(pool.map(_run_block, *zip(*[
                (base_config, b, out_root) for b in seeds])))
    finals = {
        row: {
            student: [blk[row][student] for blk in per_block]
            for student in ("s1", "s2")
        }
        for row in ABLATION_ROWS
    }
    means = {row: {s: float(np.mean(v)) for s, v in by.items()}
             for row, by in finals.items()}
    stds = {row: {s: float(np.std(v)) for s, v in by.items()}
            for row, by in finals.items()}
    result = AblationResult(list(ABLATION_ROWS), list(seeds), finals, means, stds)
    if out_root is not None:
        (Path(out_root) / "ablation.csv").write_text(result.csv_text(), encoding="ascii")
        (Path(out_root) / "ablation.txt").write_text(result.table_text(), encoding="ascii")
    return result


# ---------------------------------------------------------------- checkpoints


def save_checkpoint(net: Network, path) -> None:
    """UKDC: magic, version, layer table, then per-layer weights and biases."""
    buf = bytearray(UKDC_MAGIC)
    buf += struct.pack("<II", UKDC_VERSION, len(net.layers))
    for layer in net.layers:
        buf += struct.pack("<IIB", layer.in_dim, layer.out_dim,
                           ACTIVATION_CODES[layer.activation])
    for i in range(len(net.layers)):
        buf += net.params[f"weight_{i}"].data.astype("<f8").tobytes()
        buf += net.params[f"bias_{i}"].data.astype("<f8").tobytes()
    Path(path).write_bytes(bytes(buf))


def load_checkpoint(path) -> Network:
    """Rebuild a trainable network from a UKDC file; parameters are bit-exact."""
    blob = Path(path).read_bytes()
    if len(blob) < 12:
        raise FormatError(f"file truncated at offset {len(blob)}: header needs 12 bytes")
    if blob[:4] != UKDC_MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r} at offset 0, expected {UKDC_MAGIC!r}")
    version, n_layers = struct.unpack("<II", blob[4:12])
    if version != UKDC_VERSION:
        raise FormatError(f"unsupported version {version} at offset 4")
    if not 1 <= n_layers <= 1024:
        raise FormatError(f"implausible layer count {n_layers} at offset 8")
    offset = 12
    layers: list[LayerSpec] = []
    for i in range(n_layers):
        if offset + 9 > len(blob):
            raise FormatError(f"file truncated at offset {offset} in layer table")
        in_dim, out_dim, code = struct.unpack("<IIB", blob[offset: offset + 9])
        if code not in CODE_ACTIVATIONS:
            raise FormatError(f"unknown activation code {code} at offset {offset + 8}")
        if in_dim < 1 or out_dim < 1:
            raise FormatError(f"bad layer dims {in_dim}x{out_dim} at offset {offset}")
        if layers and layers[-1].out_dim != in_dim:
            raise FormatError(f"broken dimension chain at offset {offset}")
        layers.append(LayerSpec(in_dim, out_dim, CODE_ACTIVATIONS[code]))
        offset += 9
    params: dict[str, Tensor] = {}
    for i, layer in enumerate(layers):
        for name, shape in ((f"weight_{i}", (layer.in_dim, layer.out_dim)),
                            (f"bias_{i}", (layer.out_dim,))):
            size = 8 * int(np.prod(shape))
            if offset + size > len(blob):
                raise FormatError(f"file truncated at offset {offset} reading {name}")
            arr = np.frombuffer(blob[offset: offset + size], dtype="<f8").reshape(shape)
            params[name] = Tensor(arr.copy(), requires_grad=True)
            offset += size
    if offset != len(blob):
        raise FormatError(f"{len(blob) - offset} trailing bytes at offset {offset}")
    return Network(layers, params)
