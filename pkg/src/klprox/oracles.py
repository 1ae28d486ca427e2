"""Brute-force reference routes for the catalog operations.

Everything here is deliberately independent of the closed forms it checks:
dense 1-D grid scans for separable proxes, exact support enumeration for the
cardinality members, piece enumeration for the trimmed l1, an NNLS-based
exact projection onto the l1 epigraph cone, and external QP/SLSQP solves for
the group-norm ball. Slow by design; keep dimensions small.
"""

from itertools import combinations

import numpy as np
from scipy.optimize import minimize, nnls

from .core import CapabilityError


def prox_1d_grid(value_fn, z, step=1.0, lo=None, hi=None, grid_step=1e-5):
    """argmin of step*value(u) + (u-z)^2/2 over a dense 1-D grid.

    ``value_fn`` must accept an array and return elementwise penalty values.
    """
    z = float(z)
    if lo is None:
        lo = -abs(z) - 10.0
    if hi is None:
        hi = abs(z) + 10.0
    grid = np.arange(lo, hi + grid_step, grid_step)
    obj = step * np.asarray(value_fn(grid), dtype=np.float64) + 0.5 * (grid - z) ** 2
    return float(grid[int(np.argmin(obj))])


def prox_separable_grid(value_fn, z, step=1.0, span=None, grid_step=1e-5):
    """Coordinatewise grid prox for a separable penalty (span defaults wide)."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    for i, zi in enumerate(z):
        half = span if span is not None else abs(zi) + 10.0
        out[i] = prox_1d_grid(value_fn, zi, step, -half, half, grid_step)
    return out


def prox_l0_enum(z, r):
    """Projection onto {nnz <= r} by exhaustive support enumeration."""
    z = np.asarray(z, dtype=np.float64)
    n = z.size
    r = min(r, n)
    best, best_d = None, np.inf
    for J in combinations(range(n), r):
        cand = np.zeros_like(z)
        cand[list(J)] = z[list(J)]
        d = float(np.sum((cand - z) ** 2))
        if d < best_d - 1e-15:
            best, best_d = cand, d
    return best


def prox_sparse_simplex_enum(z, r):
    """Projection onto the r-sparse simplex by support enumeration."""
    from .regularizers import project_simplex

    z = np.asarray(z, dtype=np.float64)
    n = z.size
    r = min(r, n)
    best, best_d = None, np.inf
    for J in combinations(range(n), r):
        cand = np.zeros_like(z)
        cols = list(J)
        cand[cols] = project_simplex(z[cols])
        d = float(np.sum((cand - z) ** 2))
        if d < best_d - 1e-15:
            best, best_d = cand, d
    return best


def trimmed_l1_value(x, mu, gamma, k):
    a = np.sort(np.abs(np.asarray(x, dtype=np.float64)))[::-1]
    return mu * (float(np.sum(a)) - gamma * float(np.sum(a[:k])))


def prox_trimmed_l1_enum(z, mu, gamma, k, step=1.0):
    """Trimmed-l1 prox by enumerating every size-k piece of the minimum."""
    z = np.asarray(z, dtype=np.float64)
    n = z.size
    best, best_obj = None, np.inf
    for I in combinations(range(n), k):
        tau = np.full(n, step * mu)
        tau[list(I)] = step * mu * (1.0 - gamma)
        cand = np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)
        obj = step * trimmed_l1_value(cand, mu, gamma, k) + 0.5 * float(np.sum((cand - z) ** 2))
        if obj < best_obj - 1e-15:
            best, best_obj = cand, obj
    return best


def project_epigraph_l1(point, mu=1.0, max_dim=3):
    """Exact projection onto K = {(y, s) : s >= mu*||y||_1}.

    K is the polyhedral cone {v : Av <= 0} with one row (mu*sgn, -1) per sign
    pattern; the projection is recovered from the polar decomposition, with
    the polar part computed by NNLS (an exact active-set method).
    """
    q = np.asarray(point, dtype=np.float64)
    n = q.size - 1
    if n > max_dim:
        raise CapabilityError(f"epigraph projection enumerates 2^n sign patterns; n={n} too large")
    rows = []
    for signs in np.ndindex(*([2] * n)):
        sgn = np.array(signs, dtype=np.float64) * 2.0 - 1.0
        rows.append(np.concatenate([mu * sgn, [-1.0]]))
    A = np.array(rows)
    lam, _ = nnls(A.T, q)
    return q - A.T @ lam


def project_group_ball_reference(reg, z, tol=1e-9):
    """Independent projection onto the group-norm ball.

    p=2 goes through SLSQP on the smooth constraint; p=1 through a QP in the
    positive/negative split (cvxopt), where the gauge is linear.
    """
    z = np.asarray(z, dtype=np.float64)
    if reg.gauge(z) <= reg.sigma:
        return z.copy()
    if reg.p == 2:
        x0 = z * (reg.sigma / reg.gauge(z)) * 0.99

        res = minimize(
            lambda u: 0.5 * float(np.sum((u - z) ** 2)),
            x0,
            jac=lambda u: u - z,
            method="SLSQP",
            constraints=[{"type": "ineq", "fun": lambda u: reg.sigma - reg.gauge(u)}],
            options={"maxiter": 500, "ftol": 1e-14},
        )
        return np.asarray(res.x, dtype=np.float64)

    from cvxopt import matrix, solvers

    n = z.size
    wc = reg._wcoord
    eye = np.eye(n)
    P = np.block([[eye, -eye], [-eye, eye]])
    qv = np.concatenate([-z, z])
    G = np.vstack([-np.eye(2 * n), np.concatenate([wc, wc])[None, :]])
    h = np.concatenate([np.zeros(2 * n), [reg.sigma]])
    opts = {"show_progress": False, "abstol": 1e-12, "reltol": 1e-12, "feastol": 1e-12}
    sol = solvers.qp(matrix(P + 1e-12 * np.eye(2 * n)), matrix(qv), matrix(G), matrix(h),
                     options=opts)
    uv = np.asarray(sol["x"]).ravel()
    return uv[:n] - uv[n:]


def envelope_value_grid(value_fn, x, lam, lo=None, hi=None, grid_step=1e-4):
    """inf_y value(y) + ||y - x||^2 / (2 lam) over a dense 1-D grid."""
    x = float(x)
    if lo is None:
        lo = -abs(x) - 10.0
    if hi is None:
        hi = abs(x) + 10.0
    grid = np.arange(lo, hi + grid_step, grid_step)
    obj = np.asarray(value_fn(grid), dtype=np.float64) + (grid - x) ** 2 / (2.0 * lam)
    return float(np.min(obj))
