"""The four-row ablation ladder, shrunk to two seed blocks.

Rows: hard labels only, plain KD, uncertainty-weighted KD, and the dual
objective. Every row in a block shares the same pretrained teacher and the
same data, so differences come from the objective alone. The full-budget
ladder (five blocks, default epochs) runs inside the test suite; this one
trades epochs for wall time and finishes in ten-odd seconds.
"""

from ukd import DatasetSpec, Seeds, TrainConfig, ablate

base = TrainConfig(mode="dual", dataset=DatasetSpec(), seeds=Seeds.from_block(0),
                   epochs=12, teacher_epochs=12)

result = ablate(base, seeds=[0, 1])

print(result.table_text())

print("per-seed final val top-1 (student s2):")
for row in result.rows:
    cells = "  ".join(f"{v:.4f}" for v in result.finals[row]["s2"])
    print(f"  {row:<15}{cells}")

print()
for s in ("s1", "s2"):
    delta = result.means["dual"][s] - result.means["hard_only"][s]
    print(f"dual vs hard_only, {s}: {delta:+.4f}")
