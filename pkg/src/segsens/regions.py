"""Regions that provably (or, for the closed-form half space, approximately)
contain the retrained weights, and closed-form extrema of linear scores
over them.

Notation: ``w0`` is the optimum on the base set (n0 rows), the updated set
has n1 = n0 + nA - nS rows, A is the added set and S the removed set.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data_io import Dataset, Modification
from .losses import LossKind, gradient_sum, objective_gradient

SQRT_CLAMP = 1e-12
PSI_CLAMP = 1e-9
POINT_PLANE_TOL = 1e-10
DEGENERATE_GRAD = 1e-14


class HalfSpaceDegenerate(ArithmeticError):
    """The gradient defining the cutting plane vanishes."""


class RegionInconsistent(ArithmeticError):
    """The plane misses the sphere, so the half space cannot be valid."""


class HalfSpaceMode(enum.Enum):
    EXACT = "exact"
    PAPER_CLOSED_FORM = "paper_closed_form"

    @classmethod
    def parse(cls, name: "str | HalfSpaceMode") -> "HalfSpaceMode":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        return cls({"paper": "paper_closed_form", "closed_form": "paper_closed_form",
                    "paperclosedform": "paper_closed_form"}.get(key, key))


@dataclass(frozen=True)
class ModificationGradients:
    delta_s: np.ndarray
    delta_l: np.ndarray
    n0: int
    n1: int
    nA: int
    nS: int
    C: float

    @property
    def n_changed(self) -> int:
        return self.nA + self.nS


@dataclass(frozen=True)
class SphereRegion:
    q: np.ndarray
    r: float

    @property
    def dim(self) -> int:
        return self.q.size


@dataclass(frozen=True)
class HalfSpace:
    """The set ``{w : n.w <= c}`` with ``|n| = 1``."""

    n: np.ndarray
    c: float

    def contains(self, w: np.ndarray, tol: float = 0.0) -> bool:
        return float(self.n @ w) <= self.c + tol


@dataclass(frozen=True)
class SegmentRegion:
    sphere: SphereRegion
    plane: HalfSpace
    psi: float

    @property
    def dim(self) -> int:
        return self.sphere.dim

    @property
    def foot(self) -> np.ndarray:
        """Point where the plane meets the sphere radius orthogonal to it."""
        return self.sphere.q - self.psi * self.sphere.r * self.plane.n


@dataclass(frozen=True)
class BoundInterval:
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol


def modification_gradients(
    kind: LossKind, w0: np.ndarray, base: Dataset, m: Modification, C: float
) -> ModificationGradients:
    """Gradient sums over the added and removed rows only, at ``w0``.

    ``delta_s`` is (sum_A - sum_S) / (nA + nS), or zero for an empty
    modification; ``delta_l`` is sum_A + sum_S.
    """
    kind = LossKind.parse(kind)
    w0 = np.asarray(w0, dtype=np.float64)
    if w0.shape != (base.dim,):
        raise ValueError(f"w0 shape {w0.shape} does not match data dim {base.dim}")
    m.validate(base)
    sum_a = gradient_sum(kind, m.added_set(base), w0)
    sum_s = gradient_sum(kind, m.removed_set(base), w0)
    nA, nS = m.n_added, m.n_removed
    k = nA + nS
    delta_s = (sum_a - sum_s) / k if k else np.zeros_like(w0)
    return ModificationGradients(delta_s=delta_s, delta_l=sum_a + sum_s, n0=base.n,
                                 n1=base.n + nA - nS, nA=nA, nS=nS, C=float(C))


def _radius_vector(g: ModificationGradients, w0: np.ndarray) -> np.ndarray:
    return (g.nA - g.nS) / (2.0 * g.n1) * w0 + g.n_changed / (2.0 * g.C * g.n1) * g.delta_s


def sphere_region(g: ModificationGradients, w0: np.ndarray) -> SphereRegion:
    """Ball of the strongly convex updated objective around ``w0``."""
    if g.n1 < 1:
        raise ValueError("updated dataset is empty")
    w0 = np.asarray(w0, dtype=np.float64)
    q = (g.n0 + g.n1) / (2.0 * g.n1) * w0 - g.n_changed / (2.0 * g.C * g.n1) * g.delta_s
    return SphereRegion(q=q, r=float(np.linalg.norm(_radius_vector(g, w0))))


def cut_point(g: ModificationGradients, w0: np.ndarray) -> np.ndarray:
    """``w0`` minus the updated-objective gradient at ``w0`` over C.

    It lies on the sphere surface, diametrically opposite ``w0``.
    """
    return g.n0 / g.n1 * np.asarray(w0, dtype=np.float64) - g.n_changed / (g.C * g.n1) * g.delta_s


def half_space(
    kind: LossKind,
    C: float,
    d1: Dataset | None,
    w_c: np.ndarray,
    mode: HalfSpaceMode = HalfSpaceMode.EXACT,
    g: ModificationGradients | None = None,
    w0: np.ndarray | None = None,
) -> HalfSpace:
    """Plane through ``w_c`` bounding the updated optimum.

    EXACT uses the full updated-objective gradient at ``w_c`` (needs ``d1``,
    valid for any ``w_c`` by convexity). PAPER_CLOSED_FORM replaces it with
    ``(-(nA + nS) delta_s + delta_l) / n1``, which only touches A and S but
    rests on a first-order approximation, so containment is not guaranteed.
    """
    mode = HalfSpaceMode.parse(mode)
    w_c = np.asarray(w_c, dtype=np.float64)
    if mode is HalfSpaceMode.EXACT:
        if d1 is None:
            raise ValueError("EXACT mode needs the updated dataset")
        grad = objective_gradient(LossKind.parse(kind), C, d1, w_c)
        scale = 1.0
    else:
        if g is None:
            raise ValueError("PAPER_CLOSED_FORM mode needs the modification gradients")
        a = -g.n_changed / g.n1 * g.delta_s
        b = g.delta_l / g.n1
        grad = a + b
        # cancellation residue of the two terms must not pass for a direction
        scale = max(1.0, float(np.linalg.norm(a) + np.linalg.norm(b)))
    norm = float(np.linalg.norm(grad))
    if not norm > DEGENERATE_GRAD * scale:
        raise HalfSpaceDegenerate(f"cutting-plane gradient norm {norm:.3e} is zero")
    n = grad / norm
    return HalfSpace(n=n, c=float(n @ w_c))


def segment_region(s: SphereRegion, h: HalfSpace) -> SegmentRegion:
    if s.r < 0:
        raise ValueError("negative radius")
    gap = float(h.n @ s.q) - h.c
    if s.r == 0.0:
        if gap > POINT_PLANE_TOL:
            raise RegionInconsistent(f"point region lies {gap:.3e} outside the half space")
        return SegmentRegion(sphere=s, plane=h, psi=0.0)
    psi = gap / s.r
    if abs(psi) > 1.0 + PSI_CLAMP:
        raise RegionInconsistent(f"plane misses the sphere (psi={psi:.6g})")
    return SegmentRegion(sphere=s, plane=h, psi=float(np.clip(psi, -1.0, 1.0)))


def psi_closed_form(h: HalfSpace, g: ModificationGradients, w0: np.ndarray) -> float:
    """psi for a plane through :func:`cut_point`, from the radius vector alone."""
    v = _radius_vector(g, np.asarray(w0, dtype=np.float64))
    return float(h.n @ v) / float(np.linalg.norm(v))


def _as_rows(eta):
    """Return (Q, is_single) with Q a 2-D dense or sparse matrix of rows."""
    if hasattr(eta, "tocsr"):
        return eta.tocsr(), False
    eta = np.asarray(eta, dtype=np.float64)
    if eta.ndim == 1:
        return eta[None, :], True
    return eta, False


def _row_norms(E) -> np.ndarray:
    if hasattr(E, "multiply"):
        return np.sqrt(np.asarray(E.multiply(E).sum(axis=1)).ravel())
    return np.linalg.norm(E, axis=1)


def sphere_bounds(s: SphereRegion, eta) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised sphere test over the rows of ``eta`` (dense or sparse)."""
    E, _ = _as_rows(eta)
    if E.shape[1] != s.dim:
        raise ValueError(f"eta dim {E.shape[1]} does not match region dim {s.dim}")
    center = np.asarray(E @ s.q).ravel()
    spread = s.r * _row_norms(E)
    return center - spread, center + spread


def segment_bounds(seg: SegmentRegion, eta) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised segment test over the rows of ``eta`` (dense or sparse)."""
    E, _ = _as_rows(eta)
    s, h, psi = seg.sphere, seg.plane, seg.psi
    if E.shape[1] != s.dim:
        raise ValueError(f"eta dim {E.shape[1]} does not match region dim {s.dim}")
    center = np.asarray(E @ s.q).ravel()
    t = np.asarray(E @ h.n).ravel()
    norm = _row_norms(E)
    perp2 = norm**2 - t**2
    if np.any(perp2 < -SQRT_CLAMP * np.maximum(1.0, norm**2)):
        raise ArithmeticError("|n.eta| exceeds |eta|; plane normal is not unit length")
    perp = np.sqrt(np.maximum(perp2, 0.0))
    cap = s.r * np.sqrt(max(1.0 - psi * psi, 0.0)) * perp
    shift = center - psi * s.r * t
    lower = np.where(t > psi * norm, center - s.r * norm, shift - cap)
    upper = np.where(t < -psi * norm, center + s.r * norm, shift + cap)
    return lower, upper


def sphere_test(s: SphereRegion, eta: np.ndarray) -> BoundInterval:
    lo, hi = sphere_bounds(s, np.asarray(eta, dtype=np.float64).ravel())
    return BoundInterval(float(lo[0]), float(hi[0]))


def segment_test(seg: SegmentRegion, eta: np.ndarray) -> BoundInterval:
    lo, hi = segment_bounds(seg, np.asarray(eta, dtype=np.float64).ravel())
    return BoundInterval(float(lo[0]), float(hi[0]))


def region_bounds(region: SphereRegion | SegmentRegion, eta) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(region, SegmentRegion):
        return segment_bounds(region, eta)
    return sphere_bounds(region, eta)


def interval_tightening(sphere_iv: BoundInterval, segment_iv: BoundInterval) -> float:
    """Width ratio segment / sphere; 1.0 when both are points."""
    ws, wd = sphere_iv.width, segment_iv.width
    if ws <= 0.0:
        if wd > 1e-12:
            raise ArithmeticError("segment interval is wider than a point sphere interval")
        return 1.0
    return wd / ws


def build_regions(
    kind: LossKind,
    w0: np.ndarray,
    base: Dataset,
    m: Modification,
    C: float,
    mode: HalfSpaceMode = HalfSpaceMode.EXACT,
    d1: Dataset | None = None,
    w_c: np.ndarray | None = None,
) -> tuple[SphereRegion, SphereRegion | SegmentRegion]:
    """Sphere region and, where a plane exists, the segment region.

    The plane goes through :func:`cut_point` unless ``w_c`` is given. When
    the plane is degenerate the second element is the sphere itself.
    """
    g = modification_gradients(kind, w0, base, m, C)
    s = sphere_region(g, w0)
    if s.r == 0.0:
        return s, s
    if w_c is None:
        w_c = cut_point(g, w0)
    try:
        h = half_space(kind, C, d1, w_c, mode, g=g, w0=w0)
    except HalfSpaceDegenerate:
        return s, s
    return s, segment_region(s, h)
