"""Squared hinge and logistic losses, with per-instance and batched gradients."""
from __future__ import annotations

import enum

import numpy as np
from scipy.special import expit, log_expit

from .data_io import Dataset, Instance


class LossKind(enum.Enum):
    SQUARED_HINGE = "squared_hinge"
    LOGISTIC = "logistic"

    @classmethod
    def parse(cls, name: "str | LossKind") -> "LossKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {"l2svm": "squared_hinge", "svm": "squared_hinge", "hinge2": "squared_hinge",
                   "squaredhinge": "squared_hinge", "logreg": "logistic", "lr": "logistic"}
        return cls(aliases.get(key, key))


def _instance_vector(inst: Instance, dim: int) -> np.ndarray:
    x = np.zeros(dim)
    for idx, val in inst.features.items():
        if idx > dim:
            raise ValueError(f"feature index {idx} exceeds weight dimension {dim}")
        x[idx - 1] = val
    return x


# Scalar pieces as functions of the signed margin m = y * w.x.

def margin_loss(kind: LossKind, m: np.ndarray) -> np.ndarray:
    if kind is LossKind.SQUARED_HINGE:
        return np.maximum(1.0 - m, 0.0) ** 2
    return -log_expit(m)


def margin_slope(kind: LossKind, m: np.ndarray) -> np.ndarray:
    """d loss / d m."""
    if kind is LossKind.SQUARED_HINGE:
        return -2.0 * np.maximum(1.0 - m, 0.0)
    # expit is evaluated with a sign split internally, so no overflow for large |m|
    return -expit(-m)


def margin_curvature(kind: LossKind, m: np.ndarray) -> np.ndarray:
    """d^2 loss / d m^2 (generalized for the squared hinge)."""
    if kind is LossKind.SQUARED_HINGE:
        return np.where(m < 1.0, 2.0, 0.0)
    s = expit(m)
    return s * (1.0 - s)


def loss_value(kind: LossKind, w: np.ndarray, inst: Instance) -> float:
    w = np.asarray(w, dtype=np.float64)
    m = inst.label * float(_instance_vector(inst, w.size) @ w)
    return float(margin_loss(kind, np.float64(m)))


def loss_gradient(kind: LossKind, w: np.ndarray, inst: Instance) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    x = _instance_vector(inst, w.size)
    m = inst.label * float(x @ w)
    return float(margin_slope(kind, np.float64(m))) * inst.label * x


def _check_dim(data: Dataset, w: np.ndarray) -> None:
    if w.shape != (data.dim,):
        raise ValueError(f"weight shape {w.shape} does not match data dim {data.dim}")


def margins(data: Dataset, w: np.ndarray) -> np.ndarray:
    _check_dim(data, w)
    return data.y * (data.X @ w)


def gradient_sum(kind: LossKind, data: Dataset, w: np.ndarray) -> np.ndarray:
    """Sum of per-instance loss gradients over ``data`` (dense, length dim)."""
    w = np.asarray(w, dtype=np.float64)
    if data.n == 0:
        _check_dim(data, w)
        return np.zeros_like(w)
    coef = margin_slope(kind, margins(data, w)) * data.y
    return np.asarray(data.X.T @ coef).ravel()


def per_instance_gradients(kind: LossKind, data: Dataset, w: np.ndarray) -> np.ndarray:
    """Dense (n, dim) matrix whose rows are the individual loss gradients."""
    coef = margin_slope(kind, margins(data, w)) * data.y
    return data.X.multiply(coef[:, None]).toarray()


def objective(kind: LossKind, C: float, data: Dataset, w: np.ndarray) -> float:
    """(C/2)||w||^2 + mean loss."""
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    if data.n == 0:
        raise ValueError("objective of an empty dataset")
    w = np.asarray(w, dtype=np.float64)
    return 0.5 * C * float(w @ w) + float(np.mean(margin_loss(kind, margins(data, w))))


def objective_gradient(kind: LossKind, C: float, data: Dataset, w: np.ndarray) -> np.ndarray:
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    if data.n == 0:
        raise ValueError("gradient of an empty dataset")
    w = np.asarray(w, dtype=np.float64)
    return C * w + gradient_sum(kind, data, w) / data.n
