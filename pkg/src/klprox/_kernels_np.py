"""Pure numpy implementations of the elementwise penalty kernels.

These are the hot inner loops of the proximal solvers (one prox per
iteration) and of the grid-based diagnostics (one prox per grid node).
A compiled drop-in replacement lives in ``_kernels_c.pyx``; the active
backend is chosen at import time by :mod:`klprox.kernels`.

All functions accept float64 arrays of any shape and operate elementwise.
Prox routines return a global minimizer of ``step*penalty(u) + (u-z)^2/2``;
on ties the candidate with the smallest magnitude wins (and the nonnegative
one among +/-), so results are deterministic.
"""

import numpy as np

__all__ = [
    "soft_threshold",
    "soft_threshold_per_element",
    "scad_penalty",
    "mcp_penalty",
    "scad_prox",
    "mcp_prox",
    "scad_derivative",
    "mcp_derivative",
]


def _asfloat(z):
    return np.asarray(z, dtype=np.float64)


def soft_threshold(z, tau):
    """Elementwise sign(z) * max(|z| - tau, 0); prox of tau*|.|."""
    z = _asfloat(z)
    return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)


def soft_threshold_per_element(z, tau):
    """Soft threshold with a per-element threshold array."""
    z = _asfloat(z)
    tau = _asfloat(tau)
    return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)


def scad_penalty(z, lam, theta):
    """Elementwise SCAD penalty value (quadratic spline, flat beyond theta*lam)."""
    a = np.abs(_asfloat(z))
    mid = (-a * a + 2.0 * theta * lam * a - lam * lam) / (2.0 * (theta - 1.0))
    flat = 0.5 * (theta + 1.0) * lam * lam
    return np.where(a <= lam, lam * a, np.where(a <= theta * lam, mid, flat))


def mcp_penalty(z, lam, theta):
    """Elementwise MCP penalty value (quadratic up to theta*lam, then flat)."""
    a = np.abs(_asfloat(z))
    return np.where(a <= theta * lam, lam * a - a * a / (2.0 * theta), 0.5 * theta * lam * lam)


def scad_derivative(z, lam, theta):
    """Elementwise derivative of the SCAD penalty; 0 at exact zeros.

    The penalty is C^1 away from the origin, so the derivative is single
    valued there; callers handle the interval [-lam, lam] at zero themselves.
    """
    z = _asfloat(z)
    a = np.abs(z)
    slope = np.where(a <= lam, lam, np.where(a <= theta * lam, (theta * lam - a) / (theta - 1.0), 0.0))
    return np.sign(z) * slope


def mcp_derivative(z, lam, theta):
    """Elementwise derivative of the MCP penalty; 0 at exact zeros."""
    z = _asfloat(z)
    a = np.abs(z)
    slope = np.where(a <= theta * lam, lam - a / theta, 0.0)
    return np.sign(z) * slope


def _select(candidates, phis):
    # Global minimum of phi; among exact ties keep the smallest candidate,
    # which for the nonnegative candidate sets used below means the sparsest
    # (smallest magnitude) solution.
    phi_min = np.min(phis, axis=-1, keepdims=True)
    masked = np.where(phis <= phi_min, candidates, np.inf)
    return np.min(masked, axis=-1)


def scad_prox(z, step, lam, theta):
    """Elementwise global minimizer of step*scad(u) + (u-z)^2/2.

    Solved exactly by collecting the stationary point of each quadratic
    branch (clipped to its interval) plus branch endpoints and picking the
    best; valid for any step > 0, including steps where the middle branch
    of the subproblem loses convexity.
    """
    z = _asfloat(z)
    a = np.abs(z)
    t = float(step)

    c1 = np.clip(a - t * lam, 0.0, lam)
    denom = theta - 1.0 - t
    if denom > 0.0:
        c2 = np.clip((a * (theta - 1.0) - t * theta * lam) / denom, lam, theta * lam)
    else:
        c2 = np.full_like(a, lam)
    c3 = np.maximum(a, theta * lam)
    e1 = np.full_like(a, lam)
    e2 = np.full_like(a, theta * lam)

    cand = np.stack([c1, c2, c3, e1, e2], axis=-1)
    phi = t * scad_penalty(cand, lam, theta) + 0.5 * (cand - a[..., None]) ** 2
    return np.sign(z) * _select(cand, phi)


def mcp_prox(z, step, lam, theta):
    """Elementwise global minimizer of step*mcp(u) + (u-z)^2/2."""
    z = _asfloat(z)
    a = np.abs(z)
    t = float(step)

    denom = theta - t
    if denom > 0.0:
        c1 = np.clip(theta * (a - t * lam) / denom, 0.0, theta * lam)
    else:
        c1 = np.zeros_like(a)
    c2 = np.maximum(a, theta * lam)
    e1 = np.zeros_like(a)
    e2 = np.full_like(a, theta * lam)

    cand = np.stack([c1, c2, e1, e2], axis=-1)
    phi = t * mcp_penalty(cand, lam, theta) + 0.5 * (cand - a[..., None]) ** 2
    return np.sign(z) * _select(cand, phi)
