"""High-precision solver for the L2-regularized ERM problem.

Damped Newton from ``w = 0``: the logistic loss uses its Hessian, the
squared hinge its generalized Hessian. Both objectives are C-strongly
convex, so the Newton system is always positive definite.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .data_io import Dataset, Modification, apply_modification
from .losses import LossKind, margin_curvature, margin_loss, margin_slope

# Above this many features the Newton system is solved with CG instead of Cholesky.
DENSE_HESSIAN_MAX_DIM = 1500


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, grad_norm: float, iterations: int):
        super().__init__(f"{message} (|grad|_inf={grad_norm:.3e} after {iterations} iterations)")
        self.grad_norm = grad_norm
        self.iterations = iterations


@dataclass(frozen=True)
class TrainConfig:
    C: float
    grad_tol: float = 1e-10
    max_iters: int = 10000

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not self.grad_tol > 0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class TrainedModel:
    w: np.ndarray
    kind: LossKind
    C: float
    achieved_grad_norm: float
    iterations: int
    wall_time: float  # seconds

    @property
    def time_ms(self) -> float:
        return 1e3 * self.wall_time


class _Problem:
    """Objective, gradient and Newton step sharing one margin evaluation."""

    def __init__(self, kind: LossKind, C: float, data: Dataset):
        self.kind, self.C, self.data = kind, C, data
        self.Xt = data.X.T.tocsr()

    def evaluate(self, w):
        z = self.data.X @ w
        m = self.data.y * z
        f = 0.5 * self.C * float(w @ w) + float(np.mean(margin_loss(self.kind, m)))
        return f, m

    def gradient(self, w, m):
        coef = margin_slope(self.kind, m) * self.data.y
        return self.C * w + (self.Xt @ coef) / self.data.n

    def newton_direction(self, g, m):
        n, d = self.data.n, self.data.dim
        curv = margin_curvature(self.kind, m) / n
        if d <= DENSE_HESSIAN_MAX_DIM:
            Xa = self.data.X
            H = np.asarray((Xa.T @ Xa.multiply(curv[:, None])).todense()) if Xa.nnz else np.zeros((d, d))
            H[np.diag_indices(d)] += self.C
            return -scipy.linalg.cho_solve(scipy.linalg.cho_factor(H, lower=True), g)
        X, Xt = self.data.X, self.Xt
        op = spla.LinearOperator((d, d), matvec=lambda v: self.C * v + Xt @ (curv * (X @ v)), dtype=np.float64)
        step, _ = spla.cg(op, -g, rtol=1e-12, atol=0.0, maxiter=10 * d)
        return step


def train(kind: LossKind, data: Dataset, cfg: TrainConfig, callback=None) -> TrainedModel:
    """Minimise ``C/2 |w|^2 + mean(loss)`` to ``cfg.grad_tol`` relative accuracy.

    The stopping rule is ``|grad|_inf <= grad_tol * max(1, |grad(0)|_inf)``.
    ``callback(iteration, w, objective)`` runs after every accepted step.
    Raises :class:`ConvergenceError` when the budget runs out or the
    objective becomes non-finite.
    """
    kind = LossKind.parse(kind)
    if data.n == 0:
        raise ValueError("cannot train on an empty dataset")
    t0 = time.perf_counter()
    prob = _Problem(kind, cfg.C, data)
    w = np.zeros(data.dim)
    f, m = prob.evaluate(w)
    g = prob.gradient(w, m)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    target = cfg.grad_tol * max(1.0, gnorm)

    it = 0
    while gnorm > target:
        if it >= cfg.max_iters:
            raise ConvergenceError("training did not converge", gnorm, it)
        it += 1
        p = prob.newton_direction(g, m)
        slope = float(g @ p)
        step = 1.0
        accepted = False
        noise = 16 * np.finfo(float).eps * max(1.0, abs(f))
        for _ in range(60):
            w_new = w + step * p
            f_new, m_new = prob.evaluate(w_new)
            if not np.isfinite(f_new):
                step *= 0.5
                continue
            if f_new <= f + 1e-4 * step * slope:
                accepted = True
                break
            if f_new <= f + noise:
                # Armijo decrease lost in rounding near the optimum: accept if the gradient shrinks.
                g_new = prob.gradient(w_new, m_new)
                if np.max(np.abs(g_new)) < gnorm:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            raise ConvergenceError("line search failed", gnorm, it)
        w, f, m = w_new, f_new, m_new
        if callback is not None:
            callback(it, w, f)
        g = prob.gradient(w, m)
        gnorm = float(np.max(np.abs(g)))
        if not np.isfinite(gnorm):
            raise ConvergenceError("non-finite gradient", gnorm, it)

    return TrainedModel(w=w, kind=kind, C=cfg.C, achieved_grad_norm=gnorm, iterations=it,
                        wall_time=time.perf_counter() - t0)


def retrain_oracle(kind: LossKind, base: Dataset, m: Modification, cfg: TrainConfig) -> TrainedModel:
    """Train from scratch on the modified dataset; ``wall_time`` includes the data update."""
    t0 = time.perf_counter()
    updated = apply_modification(base, m)
    model = train(kind, updated, cfg)
    return TrainedModel(w=model.w, kind=model.kind, C=model.C,
                        achieved_grad_norm=model.achieved_grad_norm, iterations=model.iterations,
                        wall_time=time.perf_counter() - t0)
