"""Which test predictions can change after an update?

A test label is certified when the whole interval of x.w1 sits on one side
of zero. Only the unknown ones would need the retrained model.
"""
import numpy as np

from segsens import (ModificationPlan, TrainConfig, apply_modification, build_regions, label_sensitivity,
                     plan_modification, retrain_oracle, train)
from segsens.bench import two_gaussians
from segsens.tasks import certified_agreement, oracle_signs

full = two_gaussians(1500, 10, separation=1.0, seed=8)
base, pool, test = full.subset(np.arange(1000)), full.subset(np.arange(1000, 1100)), full.subset(np.arange(1100, 1500))

C = 0.5
w0 = train("squared_hinge", base, TrainConfig(C)).w
for p_up in (0.005, 0.02, 0.1):
    m = plan_modification(base, pool, ModificationPlan(p_up, 0.5, seed=4))
    sphere, segment = build_regions("squared_hinge", w0, base, m, C, d1=apply_modification(base, m))
    w1 = retrain_oracle("squared_hinge", base, m, TrainConfig(C)).w
    truth = oracle_signs(test, w1)
    for name, region in (("sphere", sphere), ("segment", segment)):
        rep = label_sensitivity(region, test)
        print(f"P_up={p_up:<6} {name:8} unknown {rep.n_diff:4d}/{rep.n_test}  agreement {certified_agreement(rep, truth)}")
