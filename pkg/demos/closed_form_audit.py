"""How often does the closed-form half space really contain w1?

The closed form only touches the added and removed rows, so it is cheap,
but it is an approximation. The exact plane needs the full gradient.
"""
from segsens.bench import ExperimentConfig, SyntheticSpec, containment_audit, format_audit, run_experiment

for mode in ("exact", "paper_closed_form"):
    cfg = ExperimentConfig(loss="logistic", c_grid=(0.5, 1.0), p_up_grid=(0.001, 0.01, 0.1), trials=10,
                           half_space_mode=mode, task="coefficients", timing=False,
                           synthetic=SyntheticSpec(n_train=3000, n_test=10, dim=10, seed=2))
    result = run_experiment(cfg)
    print(mode)
    print(format_audit(containment_audit(result)))
    print()
