"""Train one student against a frozen teacher, with and without distillation.

Default overlapping-Gaussians dataset at a reduced epoch budget, so the
whole script finishes in a few seconds. One seed only; the averaged
comparison lives in the ablation driver (see 05) and in the test suite.
"""

from ukd import DatasetSpec, Seeds, TrainConfig, pretrain_teacher, train

dataset = DatasetSpec()
seeds = Seeds.from_block(0)


def config(mode):
    return TrainConfig(mode=mode, dataset=dataset, seeds=seeds,
                       epochs=12, teacher_epochs=12)


# One teacher, shared by both runs so the comparison is apples to apples.
teacher, teacher_val = pretrain_teacher(config("hard_only"))
print(f"teacher val top-1: {teacher_val:.4f}")

hard = train(config("hard_only"), teacher=teacher)
ukd = train(config("uncertainty_kd"), teacher=teacher)

# Per-epoch trajectory of student 1 under uncertainty weighting. mean_weight
# is the batch-averaged teacher confidence; it moves with the data mix, not
# with training, since the teacher is frozen.
print("\nepoch  val_top1  mean_entropy  mean_weight")
for rec in ukd.records:
    if rec.student == "s1":
        print(f"{rec.epoch:>5}  {rec.val_top1:>8.4f}  {rec.mean_entropy:>12.4f}"
              f"  {rec.mean_weight:>11.4f}")

print("\nfinal val top-1, hard labels only vs uncertainty-weighted KD:")
for s in ("s1", "s2"):
    h = hard.summary["students"][s]["final_val_top1"]
    u = ukd.summary["students"][s]["final_val_top1"]
    print(f"  {s}: {h:.4f} -> {u:.4f}  (delta {u - h:+.4f})")
