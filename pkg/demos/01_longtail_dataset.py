"""Build a long-tailed split and inspect counts, prior, and shot categories.

The per-class budget follows an exponential profile from n_max down to
n_max / ir; classes are assigned budgets in order of how much data they
actually have, so the head of the profile lands on the largest classes.
"""
import numpy as np

from cuekit import assign_shot_split, build_split, compute_prior, longtail_profile

# a balanced pool: 20 classes, 150 samples each
labels = np.repeat(np.arange(20), 150)

print("target profile for C=20, n_max=150, IR=100:")
print(" ", longtail_profile(20, 150, 100).tolist())

split = build_split(labels, num_classes=20, n_max=150, ir=100, seed=0)
counts = np.asarray(split.per_class_counts)
print("\nselected per-class counts:", counts.tolist())
print("imbalance ratio realized: %.1f" % (counts.max() / counts.min()))

prior = compute_prior(counts)
print("\nempirical prior (head 3):", np.round(prior[:3], 4).tolist())
print("empirical prior (tail 3):", np.round(prior[-3:], 5).tolist())
print("prior sums to:", prior.sum())

shot = assign_shot_split(counts)
for name in ("many", "medium", "few"):
    members = np.flatnonzero(shot == name)
    print(f"{name:>6}-shot classes: {members.tolist()}")

# the same seed always selects the same samples
again = build_split(labels, num_classes=20, n_max=150, ir=100, seed=0)
print("\nsame seed, same selection:", split.selected_indices == again.selected_indices)
