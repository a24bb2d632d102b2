"""Coefficient bounds and test-label certification on top of the region tests."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data_io import Dataset
from .regions import BoundInterval, SegmentRegion, SphereRegion, region_bounds


class Label(enum.Enum):
    CERTIFIED_POSITIVE = "certified_positive"
    CERTIFIED_NEGATIVE = "certified_negative"
    UNKNOWN = "unknown"

    @property
    def sign(self) -> int:
        return {"certified_positive": 1, "certified_negative": -1, "unknown": 0}[self.value]


@dataclass(frozen=True)
class CoefficientBounds:
    lower: np.ndarray
    upper: np.ndarray

    @property
    def per_coordinate(self) -> list[BoundInterval]:
        return [BoundInterval(float(lo), float(hi)) for lo, hi in zip(self.lower, self.upper)]

    @property
    def tightness_per_coord(self) -> np.ndarray:
        return np.abs(self.upper - self.lower)

    @property
    def mean_tightness(self) -> float:
        return float(np.mean(self.tightness_per_coord))

    def contains(self, w: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return (self.lower - tol <= w) & (w <= self.upper + tol)


@dataclass(frozen=True)
class LabelDecision:
    tag: Label
    interval: BoundInterval


def classify(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """+1 where lower >= 0, else -1 where upper <= 0, else 0 (unknown).

    The lower-bound check wins, so [0, 0] certifies +1.
    """
    return np.where(lower >= 0.0, 1, np.where(upper <= 0.0, -1, 0))


_TAG = {1: Label.CERTIFIED_POSITIVE, -1: Label.CERTIFIED_NEGATIVE, 0: Label.UNKNOWN}


@dataclass(frozen=True)
class LabelSensitivityReport:
    lower: np.ndarray
    upper: np.ndarray
    signs: np.ndarray  # +1 / -1 certified, 0 unknown

    @property
    def decisions(self) -> list[LabelDecision]:
        return [LabelDecision(_TAG[int(s)], BoundInterval(float(lo), float(hi)))
                for s, lo, hi in zip(self.signs, self.lower, self.upper)]

    @property
    def n_test(self) -> int:
        return int(self.signs.size)

    @property
    def n_diff(self) -> int:
        return int(np.count_nonzero(self.signs == 0))

    @property
    def error_ratio(self) -> float:
        return error_ratio(self.n_diff, self.n_test)


def error_ratio(n_diff: int, n_test: int) -> float:
    if n_test <= 0:
        raise ValueError("n_test must be positive")
    return n_diff / n_test


def coefficient_sensitivity(region: SphereRegion | SegmentRegion, d: int | None = None) -> CoefficientBounds:
    """Bounds on every coordinate of the updated weights (eta = e_j)."""
    dim = region.dim
    if d is not None and d != dim:
        raise ValueError(f"d={d} does not match region dimension {dim}")
    q = region.sphere.q if isinstance(region, SegmentRegion) else region.q
    r = region.sphere.r if isinstance(region, SegmentRegion) else region.r
    if isinstance(region, SphereRegion):
        return CoefficientBounds(q - r, q + r)
    # |e_j| = 1 and t = n_j, so no matrix is needed
    n, psi = region.plane.n, region.psi
    cap = r * np.sqrt(max(1.0 - psi * psi, 0.0)) * np.sqrt(np.maximum(1.0 - n * n, 0.0))
    shift = q - psi * r * n
    lower = np.where(n > psi, q - r, shift - cap)
    upper = np.where(n < -psi, q + r, shift + cap)
    return CoefficientBounds(lower, upper)


def label_sensitivity(region: SphereRegion | SegmentRegion, test: Dataset) -> LabelSensitivityReport:
    if test.n == 0:
        raise ValueError("empty test set")
    if test.dim != region.dim:
        raise ValueError(f"test dim {test.dim} does not match region dimension {region.dim}")
    lower, upper = region_bounds(region, test.X)
    return LabelSensitivityReport(lower, upper, classify(lower, upper))


def certified_agreement(report: LabelSensitivityReport, oracle_labels) -> float | None:
    """Fraction of certified decisions that match ``oracle_labels``; None if nothing is certified."""
    oracle = np.asarray(oracle_labels)
    if oracle.shape != report.signs.shape:
        raise ValueError("oracle_labels length differs from the report")
    certified = report.signs != 0
    if not np.any(certified):
        return None
    return float(np.mean(report.signs[certified] == oracle[certified]))


def oracle_signs(test: Dataset, w1: np.ndarray) -> np.ndarray:
    """sign(x.w1) with 0 mapped to +1, matching the certification tie rule."""
    z = np.asarray(test.X @ w1).ravel()
    return np.where(z >= 0.0, 1, -1)
