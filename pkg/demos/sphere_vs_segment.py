"""Bound the coefficients of a retrained logistic model without retraining.

Train on 600 points, then drop 30 and add 30. Compare the sphere and
segment intervals with the weights a full retrain actually produces.
"""
import numpy as np

from segsens import (ModificationPlan, TrainConfig, apply_modification, build_regions,
                     coefficient_sensitivity, plan_modification, retrain_oracle, train)
from segsens.bench import two_gaussians

full = two_gaussians(700, 5, separation=1.5, seed=3)
base, pool = full.subset(np.arange(600)), full.subset(np.arange(600, 700))
m = plan_modification(base, pool, ModificationPlan(p_up=0.1, add_fraction=0.5, seed=1))
print("added", m.n_added, "removed", m.n_removed)

C = 1.0
w0 = train("logistic", base, TrainConfig(C)).w
w1 = retrain_oracle("logistic", base, m, TrainConfig(C)).w

sphere, segment = build_regions("logistic", w0, base, m, C, mode="exact", d1=apply_modification(base, m))
print("radius", sphere.r, "psi", getattr(segment, "psi", None))

sph = coefficient_sensitivity(sphere)
seg = coefficient_sensitivity(segment)
print(f"{'j':>2} {'w1':>9} {'sphere':>22} {'segment':>22}")
for j in range(w1.size):
    print(f"{j:>2} {w1[j]:9.4f} [{sph.lower[j]:9.4f},{sph.upper[j]:9.4f}] [{seg.lower[j]:9.4f},{seg.upper[j]:9.4f}]")

# both intervals hold w1; the segment one is never wider
assert np.all(seg.contains(w1, 1e-9)) and np.all(sph.contains(w1, 1e-9))
print("mean width  sphere %.5f  segment %.5f" % (sph.mean_tightness, seg.mean_tightness))
