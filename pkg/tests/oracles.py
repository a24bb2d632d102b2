"""Numerical extremisation oracles, independent of the closed forms."""
import numpy as np
from scipy.optimize import minimize


def cap_extremes_slsqp(q, r, n, c, eta):
    """min and max of eta.w over {|w - q| <= r, n.w <= c} by SLSQP from several feasible starts."""
    psi = (n @ q - c) / r
    cons = [{"type": "ineq", "fun": lambda w: r * r - (w - q) @ (w - q), "jac": lambda w: -2 * (w - q)},
            {"type": "ineq", "fun": lambda w: c - n @ w, "jac": lambda w: -n}]
    starts = [q - s * r * n for s in np.linspace(max(psi, -1.0), 1.0, 5)[1:-1]] or [q - r * n]
    out = []
    for sign in (1.0, -1.0):
        best = np.inf
        for w0 in starts:
            res = minimize(lambda w: sign * (eta @ w), w0, jac=lambda w: sign * eta, constraints=cons,
                           method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
            w = res.x
            if (w - q) @ (w - q) <= r * r * (1 + 1e-7) + 1e-12 and n @ w <= c + 1e-7 * (1 + r):
                best = min(best, sign * (eta @ w))
        out.append(sign * best)
    return out[0], out[1]


def cap_extremes_arc_2d(q, r, n, c, eta, samples=400_000):
    """2-D only: extremes of eta.w over the feasible part of the circle (where they are attained)."""
    theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    pts = q + r * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    ok = pts @ n <= c
    # chord endpoints, in case the feasible arc is a sliver
    psi = (n @ q - c) / r
    foot = q - psi * r * n
    tang = np.array([-n[1], n[0]])
    half = r * np.sqrt(max(1 - psi * psi, 0.0))
    vals = np.concatenate([pts[ok] @ eta, [(foot + half * tang) @ eta, (foot - half * tang) @ eta]])
    return vals.min(), vals.max()
