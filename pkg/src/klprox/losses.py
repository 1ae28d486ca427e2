"""Smooth losses h(x) = l(Ax) with gradients and Lipschitz bounds.

Supported compositions: least squares l(y) = ||y - b||^2 / 2, logistic
l(y) = sum log(1 + exp(b_i y_i)), Poisson l(y) = sum(-b_i y_i + exp(y_i)),
and the zero loss. The Poisson gradient is not globally Lipschitz, so that
loss requires a sup-norm box on the iterates to obtain a bound.
"""

import numpy as np
from scipy.special import expit

from .core import ConfigurationError, DimensionError, as_matrix, as_vector

_POWER_ITERS = 50
_POWER_TOL = 1e-8
# power iteration approaches the top singular value from below; inflate so the
# declared bound stays >= the true modulus
_SAFETY = 1.0 + 1e-6


def operator_norm(A, iters=_POWER_ITERS, tol=_POWER_TOL):
    """Spectral norm of A by power iteration on A^T A (seeded, deterministic)."""
    A = as_matrix(A)
    n = A.shape[1]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        lam_new = float(v @ (A.T @ (A @ v)))
        if abs(lam_new - lam) <= tol * max(lam_new, 1e-300):
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(lam))


def softplus(t):
    """log(1 + exp(t)) computed as max(t, 0) + log1p(exp(-|t|)); overflow safe."""
    t = np.asarray(t, dtype=np.float64)
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


class SmoothLoss:
    """Base class: value, gradient, and a gradient-Lipschitz bound."""

    kind = "abstract"
    globally_lipschitz = True

    def __init__(self, A, b):
        self.A = as_matrix(A)
        self.m, self.n = self.A.shape
        self.b = as_vector(b, self.m, name="b")
        self._lipschitz = None

    @property
    def lipschitz(self):
        if self._lipschitz is None:
            self._lipschitz = self._compute_lipschitz()
        return self._lipschitz

    def in_domain(self, x):
        return True

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def gradient_batch(self, X):
        """Gradients for each row of X, shape (N, n); default loops."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.stack([self.gradient(row) for row in X])

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.array([self.value(row) for row in X])

    def __repr__(self):
        return f"{type(self).__name__}(m={self.m}, n={self.n})"


class LeastSquares(SmoothLoss):
    """h(x) = ||Ax - b||^2 / 2."""

    kind = "least_squares"

    def value(self, x):
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def gradient(self, x):
        return self.A.T @ (self.A @ x - self.b)

    def gradient_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return (X @ self.A.T - self.b) @ self.A

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        R = X @ self.A.T - self.b
        return 0.5 * np.sum(R * R, axis=1)

    def _compute_lipschitz(self):
        return operator_norm(self.A) ** 2 * _SAFETY


class Logistic(SmoothLoss):
    """h(x) = sum_i log(1 + exp(b_i (Ax)_i)), via the stable softplus form."""

    kind = "logistic"

    def value(self, x):
        return float(np.sum(softplus(self.b * (self.A @ x))))

    def gradient(self, x):
        t = self.b * (self.A @ x)
        return self.A.T @ (self.b * expit(t))

    def gradient_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        T = (X @ self.A.T) * self.b
        return (self.b * expit(T)) @ self.A

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.sum(softplus((X @ self.A.T) * self.b), axis=1)

    def _compute_lipschitz(self):
        # second derivative of log(1+exp(b t)) is at most b^2/4
        return operator_norm(self.A) ** 2 * 0.25 * float(np.max(self.b**2)) * _SAFETY


class Poisson(SmoothLoss):
    """h(x) = sum_i (-b_i (Ax)_i + exp((Ax)_i)); needs a box for a Lipschitz bound.

    The declared bound is valid on ||x||_inf <= box_radius; solvers treat the
    box as the domain so the bound stays trustworthy along iterates.
    """

    kind = "poisson"
    globally_lipschitz = False

    def __init__(self, A, b, box_radius=None, lipschitz=None):
        super().__init__(A, b)
        if box_radius is None and lipschitz is None:
            raise ConfigurationError(
                "Poisson loss needs box_radius (or an explicit lipschitz bound): "
                "its gradient is not globally Lipschitz"
            )
        self.box_radius = float(box_radius) if box_radius is not None else None
        if lipschitz is not None:
            self._lipschitz = float(lipschitz)

    def in_domain(self, x):
        if self.box_radius is None:
            return True
        return bool(np.max(np.abs(x)) <= self.box_radius * (1 + 1e-12) + 1e-12)

    def value(self, x):
        y = self.A @ x
        return float(np.sum(-self.b * y + np.exp(y)))

    def gradient(self, x):
        y = self.A @ x
        return self.A.T @ (np.exp(y) - self.b)

    def _compute_lipschitz(self):
        # curvature of exp on the box: exp(max_i |a_i^T x|) <= exp(max row 1-norm * R)
        row_l1 = np.max(np.sum(np.abs(self.A), axis=1))
        return operator_norm(self.A) ** 2 * float(np.exp(row_l1 * self.box_radius)) * _SAFETY


class ZeroLoss(SmoothLoss):
    """h identically zero on R^n; any positive Lipschitz bound is accepted."""

    kind = "zero"

    def __init__(self, n, lipschitz=1.0):
        if n < 1:
            raise DimensionError("n must be positive")
        if lipschitz <= 0:
            raise ConfigurationError("lipschitz bound must be positive")
        self.m = 0
        self.n = int(n)
        self.A = np.zeros((1, self.n))
        self.b = np.zeros(1)
        self._lipschitz = float(lipschitz)

    def value(self, x):
        return 0.0

    def gradient(self, x):
        return np.zeros(self.n)

    def gradient_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.zeros_like(X)

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.zeros(X.shape[0])

    def __repr__(self):
        return f"ZeroLoss(n={self.n})"


_LOSS_KINDS = {
    "least_squares": LeastSquares,
    "logistic": Logistic,
    "poisson": Poisson,
    "zero": ZeroLoss,
}


def make_loss(kind, A=None, b=None, **kwargs):
    """Factory over the loss catalog; kind in {least_squares, logistic, poisson, zero}."""
    if kind not in _LOSS_KINDS:
        raise ConfigurationError(f"unknown loss kind {kind!r}; choose from {sorted(_LOSS_KINDS)}")
    if kind == "zero":
        return ZeroLoss(**kwargs)
    return _LOSS_KINDS[kind](A, b, **kwargs)
