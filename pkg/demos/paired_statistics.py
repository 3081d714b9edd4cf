"""Confidence intervals and a paired test for filter comparisons.

Wilson intervals for task accuracies, and a Wilcoxon signed-rank test
on per-repository reductions of two filters.
"""

from ctxgate.analysis import wilcoxon_signed_rank, wilson_interval

for label, correct, n in [("filtered", 18, 25), ("unfiltered", 6, 25)]:
    lo, hi = wilson_interval(correct / n, n)
    print(f"{label:>10}: {correct}/{n}  95% CI [{lo:.3f}, {hi:.3f}]")

# reduction percentages per repository, hybrid vs size-only
hybrid = [96.1, 91.4, 88.0, 97.3, 93.5, 90.2, 85.7, 94.8, 92.0, 89.9]
size_only = [94.0, 90.1, 88.4, 95.2, 90.7, 87.5, 83.9, 93.6, 90.3, 88.1]
res = wilcoxon_signed_rank(list(zip(hybrid, size_only)))
print(f"W={res.w_statistic}  p={res.p_value:.4f}  n={res.n_effective}  exact={res.exact}")
