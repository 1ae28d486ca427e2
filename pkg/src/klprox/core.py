"""Shared contracts: validated dense arrays, the composite objective, and
per-run iterate traces.

The objective is f(x) = h(x) + P(x) with a smooth loss h and a proper closed
regularizer P. Indicator-type regularizers contribute +inf through a real
``math.inf`` marker; NaN never enters solver state.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class DimensionError(ValueError):
    """Array shapes incompatible with the operation."""


class DomainError(ValueError):
    """Point outside the domain required by the operation."""


class ConfigurationError(ValueError):
    """Parameter outside its admissible window."""


class CapabilityError(ValueError):
    """Request exceeds what the implementation supports (e.g. brute force in high dim)."""


class InsufficientDataError(RuntimeError):
    """Not enough usable data points for a fit."""


class DomainEscapeError(RuntimeError):
    """Solver iterate left the domain of the smooth part; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


def as_vector(x, n=None, name="x"):
    """Validate and return ``x`` as a finite 1-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise DimensionError(f"{name} has length {arr.shape[0]}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_matrix(A, name="A"):
    """Validate and return ``A`` as a finite 2-D float64 array with positive dims."""
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


class CompositeObjective:
    """Pairing of a smooth loss h and a regularizer P; f(x) = h(x) + P(x).

    Immutable after construction and safe to share across threads.
    """

    def __init__(self, smooth, reg):
        reg.validate_dim(smooth.n)
        self.smooth = smooth
        self.reg = reg
        self.n = smooth.n

    def value(self, x):
        """f(x) = h(x) + P(x); +inf exactly when x violates an indicator constraint."""
        x = as_vector(x, self.n)
        return float(self.smooth.value(x) + self.reg.value(x))

    def smooth_gradient(self, x):
        x = as_vector(x, self.n)
        return self.smooth.gradient(x)

    def prox_residual(self, x, step=1.0):
        """||prox_{step*P}(x - step*grad h(x)) - x||; zero exactly at fixed points.

        The unit step (default) is the canonical stationarity measure.
        """
        x = as_vector(x, self.n)
        if step <= 0:
            raise ConfigurationError("step must be positive")
        if not self.smooth.in_domain(x):
            raise DomainError("x outside the domain of the smooth part")
        g = self.smooth.gradient(x)
        return float(np.linalg.norm(self.reg.prox(x - step * g, step) - x))

    def subgrad_distance(self, x, grad=None):
        """dist(0, grad h(x) + dP(x)), or None where P has no tractable formula."""
        x = as_vector(x, self.n)
        if grad is None:
            grad = self.smooth.gradient(x)
        return self.reg.subgrad_distance(x, grad)

    def __repr__(self):
        return f"CompositeObjective(smooth={self.smooth!r}, reg={self.reg!r})"


@dataclass
class SolverTrace:
    """Per-iteration record of one solver run.

    All arrays share the same leading length (number of recorded iterates,
    including the starting point). ``subgrad_dists`` uses NaN as the absent
    marker; ``potentials`` is None for plain proximal-gradient runs.
    """

    iterates: np.ndarray
    objectives: np.ndarray
    residuals: np.ndarray
    subgrad_dists: np.ndarray
    steps: np.ndarray
    potentials: Optional[np.ndarray] = None
    converged: bool = False
    tol: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        k = len(self.objectives)
        for name in ("iterates", "residuals", "subgrad_dists", "steps"):
            if len(getattr(self, name)) != k:
                raise DimensionError(f"trace field {name} has inconsistent length")
        if self.potentials is not None and len(self.potentials) != k:
            raise DimensionError("trace field potentials has inconsistent length")

    def __len__(self):
        return len(self.objectives)

    @property
    def final_iterate(self):
        return self.iterates[-1]

    @property
    def final_objective(self):
        return float(self.objectives[-1])

    @property
    def final_residual(self):
        return float(self.residuals[-1])
