"""Proximal gradient and constant-step inertial solvers.

Both record a :class:`~klprox.core.SolverTrace` whose residual column is the
unit-step prox residual (the canonical stationarity measure); convergence is
declared when it drops below the configured tolerance.
"""

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .core import (
    CapabilityError,
    ConfigurationError,
    DomainError,
    DomainEscapeError,
    SolverTrace,
    as_vector,
)

StepRule = Union[float, Callable[[int], float], None]


@dataclass
class PGConfig:
    """Proximal gradient options.

    ``step`` may be a constant, a callable k -> gamma_k, or None for the
    default 0.99/L. Every step must lie strictly inside (0, 1/L).
    """

    step: StepRule = None
    max_iters: int = 5000
    tol: float = 1e-10
    record_subgrad: bool = False


@dataclass
class IPianoConfig:
    """Constant-step inertial options: beta in [0,1), alpha in (0, 2(1-beta)/L)."""

    beta: float = 0.5
    alpha: Optional[float] = None
    max_iters: int = 5000
    tol: float = 1e-10
    record_subgrad: bool = False


class _Recorder:
    def __init__(self, obj, record_subgrad, tol):
        self.obj = obj
        self.record_subgrad = record_subgrad
        self.tol = tol
        self.iterates = []
        self.objectives = []
        self.residuals = []
        self.subgrad_dists = []
        self.steps = []
        self.potentials = []

    def add(self, x, fx, residual, step, grad=None, potential=None):
        self.iterates.append(x.copy())
        self.objectives.append(fx)
        self.residuals.append(residual)
        self.steps.append(step)
        self.potentials.append(potential)
        if self.record_subgrad:
            try:
                d = self.obj.subgrad_distance(x, grad)
            except DomainError:
                d = None
            self.subgrad_dists.append(np.nan if d is None else d)
        else:
            self.subgrad_dists.append(np.nan)

    def build(self, converged, meta):
        potentials = None
        if any(p is not None for p in self.potentials):
            potentials = np.array([np.nan if p is None else p for p in self.potentials])
        return SolverTrace(
            iterates=np.array(self.iterates),
            objectives=np.array(self.objectives),
            residuals=np.array(self.residuals),
            subgrad_dists=np.array(self.subgrad_dists),
            steps=np.array(self.steps),
            potentials=potentials,
            converged=converged,
            tol=self.tol,
            meta=meta,
        )


def _step_fn(step, L):
    """Normalize a step rule to a callable, validating the (0, 1/L) window."""
    hi = 1.0 / L
    if step is None:
        gamma = 0.99 * hi
        return lambda k: gamma
    if callable(step):
        def checked(k):
            g = float(step(k))
            if not 0.0 < g < hi:
                raise ConfigurationError(
                    f"step gamma_{k}={g} outside the open window (0, 1/L)=(0, {hi})"
                )
            return g

        return checked
    g = float(step)
    if not 0.0 < g < hi:
        raise ConfigurationError(f"constant step {g} outside the open window (0, 1/L)=(0, {hi})")
    return lambda k: g


def run_pg(obj, x0, cfg=None):
    """Proximal gradient: x+ = prox_{gamma P}(x - gamma * grad h(x)).

    Accepts nonconvex P (the prox solves its subproblem globally). Objective
    values along the trace are nonincreasing since gamma < 1/L.
    """
    cfg = cfg or PGConfig()
    x = as_vector(x0, obj.n)
    if not obj.smooth.in_domain(x):
        raise DomainError("x0 outside the domain of the smooth part")
    L = obj.smooth.lipschitz
    step_of = _step_fn(cfg.step, L)
    rec = _Recorder(obj, cfg.record_subgrad, cfg.tol)
    meta = {"solver": "pg", "L": L}

    g = obj.smooth.gradient(x)
    residual = float(np.linalg.norm(obj.reg.prox(x - g, 1.0) - x))
    rec.add(x, obj.value(x), residual, step_of(0), grad=g)

    k = 0
    while residual > cfg.tol and k < cfg.max_iters:
        gamma = step_of(k)
        x_next = obj.reg.prox(x - gamma * g, gamma)
        if not obj.smooth.in_domain(x_next):
            raise DomainEscapeError(
                f"iterate left the smooth domain at iteration {k + 1}",
                trace=rec.build(False, meta),
            )
        x = x_next
        g = obj.smooth.gradient(x)
        residual = float(np.linalg.norm(obj.reg.prox(x - g, 1.0) - x))
        k += 1
        rec.add(x, obj.value(x), residual, step_of(k), grad=g)

    return rec.build(residual <= cfg.tol, meta)


def run_ipiano(obj, x0, cfg=None):
    """Constant-step inertial proximal iteration with momentum beta.

    x+ = prox_{alpha P}(x - alpha * grad h(x) + beta * (x - x_prev)), with
    x_prev initialized to x0. Requires convex P and a globally Lipschitz
    smooth gradient. Records the potential f(x) + delta * ||x - x_prev||^2
    with delta = (2 - beta) / (2 alpha) - L/2; the potential sequence is
    nonincreasing. With beta = 0 the iterates match run_pg at step alpha
    bit for bit.
    """
    cfg = cfg or IPianoConfig()
    x = as_vector(x0, obj.n)
    if not obj.reg.is_convex:
        raise ConfigurationError("inertial solver requires a convex regularizer")
    if not obj.smooth.globally_lipschitz:
        raise ConfigurationError("inertial solver requires a globally Lipschitz smooth gradient")
    if not 0.0 <= cfg.beta < 1.0:
        raise ConfigurationError("beta must lie in [0, 1)")
    L = obj.smooth.lipschitz
    hi = 2.0 * (1.0 - cfg.beta) / L
    alpha = 0.99 * hi if cfg.alpha is None else float(cfg.alpha)
    if not 0.0 < alpha < hi:
        raise ConfigurationError(f"alpha {alpha} outside the open window (0, 2(1-beta)/L)=(0, {hi})")
    delta = (2.0 - cfg.beta) / (2.0 * alpha) - L / 2.0
    meta = {"solver": "ipiano", "L": L, "beta": cfg.beta, "alpha": alpha, "delta": delta}

    rec = _Recorder(obj, cfg.record_subgrad, cfg.tol)
    x_prev = x.copy()

    g = obj.smooth.gradient(x)
    residual = float(np.linalg.norm(obj.reg.prox(x - g, 1.0) - x))
    fx = obj.value(x)
    rec.add(x, fx, residual, alpha, grad=g, potential=fx + delta * float(np.sum((x - x_prev) ** 2)))

    k = 0
    while residual > cfg.tol and k < cfg.max_iters:
        z = x - alpha * g
        if cfg.beta != 0.0:
            z = z + cfg.beta * (x - x_prev)
        x_next = obj.reg.prox(z, alpha)
        x_prev = x
        x = x_next
        g = obj.smooth.gradient(x)
        residual = float(np.linalg.norm(obj.reg.prox(x - g, 1.0) - x))
        fx = obj.value(x)
        k += 1
        rec.add(x, fx, residual, alpha, grad=g, potential=fx + delta * float(np.sum((x - x_prev) ** 2)))

    return rec.build(residual <= cfg.tol, meta)


def _residual_grid(obj, X):
    """Unit-step prox residuals for each row of X (vectorized where possible)."""
    G = obj.smooth.gradient_batch(X)
    P = obj.reg.prox_batch(X - G, 1.0)
    return np.linalg.norm(P - X, axis=1)


def estimate_stationary_set(obj, box, grid=200):
    """Brute-force estimate of the stationary set inside a box (n <= 3).

    Scans a regular grid for small unit-step residuals, polishes each
    candidate by locally minimizing the residual itself (derivative free, so
    repelling stationary points survive), and merges duplicates. Returns an
    array of points sorted lexicographically; for an objective that is
    stationary everywhere the full grid comes back.
    """
    from scipy.optimize import minimize

    n = obj.n
    if n > 3:
        raise CapabilityError(f"stationary-set scan supports n <= 3, got n={n}")
    lo, hi = box
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), (n,))
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), (n,))
    axes = [np.linspace(lo[i], hi[i], grid) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=1)

    residuals = _residual_grid(obj, X)
    spacing = float(np.max((hi - lo) / (grid - 1)))
    threshold = (2.0 + obj.smooth.lipschitz) * spacing
    mask = residuals < threshold
    candidates = X[mask]
    cand_res = residuals[mask]
    if candidates.shape[0] == 0:
        return np.empty((0, n))

    def residual_at(p):
        try:
            return obj.prox_residual(p)
        except Exception:
            return np.inf

    # polish candidates best-first and skip the ones sitting in an already
    # resolved basin; at grid resolution points closer than two cells are
    # indistinguishable anyway
    order = np.argsort(cand_res, kind="stable")
    polished = []
    resolved = []
    for i in order:
        x, r = candidates[i], cand_res[i]
        if r <= 1e-12:
            polished.append(x)
            continue
        if any(np.linalg.norm(x - q) < 2.0 * spacing for q in resolved):
            continue
        res = minimize(residual_at, x, method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-12, "maxiter": 600})
        if res.fun <= 1e-8:
            point = np.asarray(res.x, dtype=np.float64)
            polished.append(point)
            resolved.append(point)
        resolved.append(np.asarray(x, dtype=np.float64))

    if not polished:
        return np.empty((0, n))

    # grid-hash dedupe: points closer than half a cell collapse to one
    radius = 0.5 * spacing
    cells = {}
    order = np.argsort([float(np.linalg.norm(p)) for p in polished], kind="stable")
    kept = []
    for idx in order:
        p = polished[idx]
        key = tuple(np.floor((p - lo) / radius).astype(np.int64))
        dup = False
        for off in itertools.product((-1, 0, 1), repeat=n):
            neighbor = tuple(k + o for k, o in zip(key, off))
            for q in cells.get(neighbor, ()):
                if np.linalg.norm(p - q) < radius:
                    dup = True
                    break
            if dup:
                break
        if not dup:
            cells.setdefault(key, []).append(p)
            kept.append(p)

    kept = np.array(kept)
    return kept[np.lexsort(kept.T[::-1])]
