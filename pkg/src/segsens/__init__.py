"""Sensitivity bounds for L2-regularized linear classifiers under batch
addition and removal of training data."""

from .data_io import (Dataset, Instance, Modification, ModificationPlan, apply_modification,
                      augment_bias, load_libsvm, parse_libsvm, plan_modification)
from .losses import LossKind, loss_gradient, loss_value, objective, objective_gradient
from .regions import (BoundInterval, HalfSpace, HalfSpaceDegenerate, HalfSpaceMode,
                      ModificationGradients, RegionInconsistent, SegmentRegion, SphereRegion,
                      build_regions, cut_point, half_space, interval_tightening,
                      modification_gradients, segment_region, segment_test, sphere_region,
                      sphere_test)
from .tasks import (CoefficientBounds, Label, LabelSensitivityReport, certified_agreement,
                    coefficient_sensitivity, label_sensitivity)
from .trainer import ConvergenceError, TrainConfig, TrainedModel, retrain_oracle, train

__version__ = "0.1.0"
