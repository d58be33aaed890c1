"""Metric walk-through: AUC, recall at fixed precision, quantile curve.

All metrics operate on plain (score, label) arrays, so they compose
with any classifier's output.
"""

import numpy as np

from toxkit.evaluation import (
    f1_improvement_pct,
    pearson_matrix,
    prf_at_threshold,
    quantile_report,
    recall_at_fixed_precision,
    roc_auc,
)


def main():
    rng = np.random.default_rng(4)
    labels = rng.integers(0, 2, size=400)
    # a decent classifier: noisy but correlated scores
    scores = np.clip(0.55 * labels + rng.normal(scale=0.25, size=400), 0, 1)

    print(f"AUC: {roc_auc(scores, labels):.4f}")
    prf = prf_at_threshold(scores, labels, 0.5)
    print(f"at threshold 0.5: P {prf.precision:.3f}  R {prf.recall:.3f}  F1 {prf.f1:.3f}")

    # operating point: best recall subject to precision >= max(baseline, floor)
    fp = recall_at_fixed_precision(scores, labels, baseline_precision=0.62, floor=0.3)
    print(f"recall {fp.recall:.3f} at threshold {fp.chosen_threshold:.3f} "
          f"(precision {fp.precision_at_threshold:.3f} >= target {fp.target_precision})")

    q = quantile_report(scores, labels, 10)
    print("toxic fraction per score decile:",
          " ".join(f"{f:.2f}" for f in q.toxic_fractions))
    print(f"score/verdict Pearson: {q.pearson:.3f}")

    weak = np.clip(scores + rng.normal(scale=0.35, size=400), 0, 1)
    providers, mat = pearson_matrix({"strong": scores, "weak": weak})
    print(f"cross-provider correlation: {mat[0][1]:.3f}")

    print(f"F1 0.19 -> 0.38 is {f1_improvement_pct(0.19, 0.38):+.0f}%")


if __name__ == "__main__":
    main()
