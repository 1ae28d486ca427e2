"""The penalty catalog P: values, proximal operators, and exact
subgradient-distance oracles dist(0, g + dP(x)).

Conventions
-----------
* ``prox(z, step)`` returns a global minimizer of step*P(u) + ||u-z||^2/2.
  For the nonconvex members the one-dimensional (or support-enumerable)
  subproblem is solved exactly; ties are broken deterministically toward the
  smallest magnitude / lowest-index support.
* ``subgrad_distance(x, g)`` returns dist(0, g + dP(x)) using the limiting
  subdifferential, or None where no tractable formula exists (e.g. the
  trimmed l1 at points where the k-th and (k+1)-th magnitudes tie).
* Indicator members return value 0 or math.inf; membership tests use a 1e-9
  relative tolerance except cardinality, which counts exact zeros.
"""

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .core import ConfigurationError, DimensionError, DomainError

_MEMBER_TOL = 1e-9


def project_simplex(z):
    """Euclidean projection onto the probability simplex (sort based)."""
    z = np.asarray(z, dtype=np.float64)
    u = np.sort(z)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, len(z) + 1)
    cond = u - (css - 1.0) / idx > 0
    rho = int(np.nonzero(cond)[0][-1])
    tau = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(z - tau, 0.0)


class Regularizer:
    """Base class for penalty catalog members."""

    name = "abstract"
    is_convex = False
    separable = False

    def validate_dim(self, n):
        """Raise if the member cannot act on R^n."""

    def value(self, x):
        raise NotImplementedError

    def prox(self, z, step=1.0):
        raise NotImplementedError

    def subgrad_distance(self, x, g):
        raise NotImplementedError

    def in_domain(self, x):
        return np.isfinite(self.value(x))

    def prox_batch(self, Z, step=1.0):
        """Row-wise prox for an (N, n) array; separable members override."""
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        return np.stack([self.prox(row, step) for row in Z])

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.array([self.value(row) for row in X])

    def __repr__(self):
        return f"{type(self).__name__}()"


def _interval_dist_sq(x, g, deriv, radius_at_zero):
    """Squared dist(0, g + dP(x)) for a separable penalty.

    ``deriv`` holds the single-valued derivative at nonzero coordinates; at
    zeros dP is the interval [-radius, radius].
    """
    nz = x != 0.0
    on = g[nz] + deriv[nz]
    off = np.maximum(np.abs(g[~nz]) - radius_at_zero, 0.0)
    return float(on @ on + off @ off)


class L1(Regularizer):
    """mu * ||x||_1."""

    name = "l1"
    is_convex = True
    separable = True

    def __init__(self, mu):
        if mu <= 0:
            raise ConfigurationError("l1 weight mu must be positive")
        self.mu = float(mu)

    def value(self, x):
        return self.mu * float(np.sum(np.abs(x)))

    def prox(self, z, step=1.0):
        return kernels.soft_threshold(np.asarray(z, dtype=np.float64), step * self.mu)

    def prox_batch(self, Z, step=1.0):
        return kernels.soft_threshold(np.atleast_2d(np.asarray(Z, dtype=np.float64)), step * self.mu)

    def subgrad_distance(self, x, g):
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        return np.sqrt(_interval_dist_sq(x, g, self.mu * np.sign(x), self.mu))

    def __repr__(self):
        return f"L1(mu={self.mu})"


class SCAD(Regularizer):
    """Smoothly clipped absolute deviation penalty, applied coordinatewise.

    Piecewise value: lam*|t| up to lam, a concave quadratic blend on
    (lam, theta*lam], constant (theta+1)*lam^2/2 beyond. Requires theta > 2.
    """

    name = "scad"
    separable = True

    def __init__(self, lam, theta):
        if lam <= 0:
            raise ConfigurationError("scad lam must be positive")
        if theta <= 2:
            raise ConfigurationError("scad theta must exceed 2")
        self.lam = float(lam)
        self.theta = float(theta)

    def value(self, x):
        return float(np.sum(kernels.scad_penalty(np.asarray(x, dtype=np.float64), self.lam, self.theta)))

    def prox(self, z, step=1.0):
        return kernels.scad_prox(np.asarray(z, dtype=np.float64), step, self.lam, self.theta)

    def prox_batch(self, Z, step=1.0):
        return kernels.scad_prox(np.atleast_2d(np.asarray(Z, dtype=np.float64)), step, self.lam, self.theta)

    def subgrad_distance(self, x, g):
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        deriv = kernels.scad_derivative(x, self.lam, self.theta)
        return np.sqrt(_interval_dist_sq(x, g, deriv, self.lam))

    def __repr__(self):
        return f"SCAD(lam={self.lam}, theta={self.theta})"


class MCP(Regularizer):
    """Minimax concave penalty, applied coordinatewise; flat beyond theta*lam."""

    name = "mcp"
    separable = True

    def __init__(self, lam, theta):
        if lam <= 0:
            raise ConfigurationError("mcp lam must be positive")
        if theta <= 0:
            raise ConfigurationError("mcp theta must be positive")
        self.lam = float(lam)
        self.theta = float(theta)

    def value(self, x):
        return float(np.sum(kernels.mcp_penalty(np.asarray(x, dtype=np.float64), self.lam, self.theta)))

    def prox(self, z, step=1.0):
        return kernels.mcp_prox(np.asarray(z, dtype=np.float64), step, self.lam, self.theta)

    def prox_batch(self, Z, step=1.0):
        return kernels.mcp_prox(np.atleast_2d(np.asarray(Z, dtype=np.float64)), step, self.lam, self.theta)

    def subgrad_distance(self, x, g):
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        deriv = kernels.mcp_derivative(x, self.lam, self.theta)
        return np.sqrt(_interval_dist_sq(x, g, deriv, self.lam))

    def __repr__(self):
        return f"MCP(lam={self.lam}, theta={self.theta})"


class L0Ball(Regularizer):
    """Indicator of the cardinality ball {x : nnz(x) <= r}.

    Cardinality counts exact zeros; prox output always has exact zeros.
    """

    name = "l0_ball"

    def __init__(self, r):
        if int(r) != r or r < 1:
            raise ConfigurationError("cardinality bound r must be a positive integer")
        self.r = int(r)

    def value(self, x):
        return 0.0 if np.count_nonzero(x) <= self.r else np.inf

    def prox(self, z, step=1.0):
        # projection: keep the r largest magnitudes; stable sort breaks ties
        # toward the lowest-index support
        z = np.asarray(z, dtype=np.float64)
        if z.size <= self.r:
            return z.copy()
        order = np.argsort(-np.abs(z), kind="stable")
        out = np.zeros_like(z)
        keep = order[: self.r]
        out[keep] = z[keep]
        return out

    def prox_batch(self, Z, step=1.0):
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        if Z.shape[1] <= self.r:
            return Z.copy()
        order = np.argsort(-np.abs(Z), axis=1, kind="stable")
        out = np.zeros_like(Z)
        rows = np.arange(Z.shape[0])[:, None]
        keep = order[:, : self.r]
        out[rows, keep] = Z[rows, keep]
        return out

    def subgrad_distance(self, x, g):
        # distance to g + limiting normal cone: support components survive,
        # plus (r - nnz) smallest off-support components when slack remains
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        supp = x != 0.0
        s = int(np.count_nonzero(supp))
        if s > self.r:
            raise DomainError("x violates the cardinality constraint")
        d2 = float(g[supp] @ g[supp])
        slack = self.r - s
        if slack > 0:
            off = np.sort(np.abs(g[~supp]))
            extra = off[: min(slack, off.size)]
            d2 += float(extra @ extra)
        return np.sqrt(d2)

    def __repr__(self):
        return f"L0Ball(r={self.r})"


class SparseSimplex(Regularizer):
    """Indicator of the r-sparse probability simplex.

    Projection keeps the r largest entries (by value) and projects them onto
    the simplex, which is exact for this constraint set.
    """

    name = "sparse_simplex"

    def __init__(self, r):
        if int(r) != r or r < 1:
            raise ConfigurationError("cardinality bound r must be a positive integer")
        self.r = int(r)

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        on_simplex = abs(float(np.sum(x)) - 1.0) <= _MEMBER_TOL and float(np.min(x)) >= -1e-12
        return 0.0 if on_simplex and np.count_nonzero(x) <= self.r else np.inf

    def prox(self, z, step=1.0):
        z = np.asarray(z, dtype=np.float64)
        r = min(self.r, z.size)
        order = np.argsort(-z, kind="stable")
        keep = order[:r]
        out = np.zeros_like(z)
        out[keep] = project_simplex(z[keep])
        return out

    def subgrad_distance(self, x, g):
        # on the active support the normal cone is spanned by the all-ones
        # direction; off-support components are free
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        if not self.in_domain(x):
            raise DomainError("x outside the sparse simplex")
        supp = x != 0.0
        gj = g[supp]
        return float(np.linalg.norm(gj - np.mean(gj)))

    def __repr__(self):
        return f"SparseSimplex(r={self.r})"


class TrimmedL1(Regularizer):
    """mu * (||x||_1 - gamma * sum of the k largest magnitudes).

    The prox reduces to a two-level soft threshold: the k largest |z_i| get
    the lighter threshold step*mu*(1-gamma), the rest step*mu. Picking the k
    largest is exact because the per-coordinate envelope gain is monotone in
    |z_i| (verified against piece enumeration in the tests).
    """

    name = "trimmed_l1"
    separable = False

    def __init__(self, mu, gamma, k):
        if mu <= 0:
            raise ConfigurationError("trimmed l1 weight mu must be positive")
        if not 0 < gamma <= 1:
            raise ConfigurationError("trim factor gamma must lie in (0, 1]")
        if int(k) != k or k < 1:
            raise ConfigurationError("trim count k must be a positive integer")
        self.mu = float(mu)
        self.gamma = float(gamma)
        self.k = int(k)

    def validate_dim(self, n):
        if self.k > n:
            raise DimensionError(f"trim count k={self.k} exceeds dimension n={n}")

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        self.validate_dim(x.size)
        a = np.abs(x)
        topk = np.sort(a)[::-1][: self.k]
        return self.mu * (float(np.sum(a)) - self.gamma * float(np.sum(topk)))

    def _thresholds(self, Z, step):
        tau = np.full_like(Z, step * self.mu)
        order = np.argsort(-np.abs(Z), axis=-1, kind="stable")
        np.put_along_axis(tau, order[..., : self.k], step * self.mu * (1.0 - self.gamma), axis=-1)
        return tau

    def prox(self, z, step=1.0):
        z = np.asarray(z, dtype=np.float64)
        self.validate_dim(z.size)
        return kernels.soft_threshold_per_element(z, self._thresholds(z, step))

    def prox_batch(self, Z, step=1.0):
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        self.validate_dim(Z.shape[1])
        return kernels.soft_threshold_per_element(Z, self._thresholds(Z, step))

    def subgrad_distance(self, x, g):
        """Interval distance through the active piece; None at top-k ties."""
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        self.validate_dim(x.size)
        a = np.abs(x)
        order = np.argsort(-a, kind="stable")
        if self.k < x.size:
            gap = a[order[self.k - 1]] - a[order[self.k]]
            if gap <= 1e-9 * max(1.0, a[order[self.k - 1]]):
                return None
        in_top = np.zeros(x.size, dtype=bool)
        in_top[order[: self.k]] = True
        weight = np.where(in_top, self.mu * (1.0 - self.gamma), self.mu)
        nz = x != 0.0
        on = g[nz] + weight[nz] * np.sign(x[nz])
        off = np.maximum(np.abs(g[~nz]) - weight[~nz], 0.0)
        return float(np.sqrt(on @ on + off @ off))

    def __repr__(self):
        return f"TrimmedL1(mu={self.mu}, gamma={self.gamma}, k={self.k})"


class GroupBall(Regularizer):
    """Indicator of {x : sum_i w_i ||x_{G_i}||_p <= sigma} with p in {1, 2}.

    ``groups`` must partition {0, ..., n-1}. Projection runs a bisection on
    the dual multiplier of the weighted sum-of-norms constraint.
    """

    name = "group_ball"
    is_convex = True

    def __init__(self, groups, weights, sigma, p=2):
        groups = [np.asarray(gi, dtype=np.intp) for gi in groups]
        idx = np.concatenate(groups) if groups else np.array([], dtype=np.intp)
        n = idx.size
        if n == 0 or not np.array_equal(np.sort(idx), np.arange(n)):
            raise ConfigurationError("groups must partition {0..n-1} exactly")
        self.n = n
        self.groups = groups
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.shape != (len(groups),) or np.any(self.weights <= 0):
            raise ConfigurationError("need one positive weight per group")
        if sigma <= 0:
            raise ConfigurationError("radius sigma must be positive")
        if p not in (1, 2):
            raise ConfigurationError("p must be 1 or 2")
        self.sigma = float(sigma)
        self.p = int(p)

        self._perm = idx
        sizes = np.array([gi.size for gi in groups])
        self._sizes = sizes
        self._starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        # per-coordinate weights in original index order (the p=1 gauge is a
        # weighted l1 norm)
        self._wcoord = np.empty(n)
        self._wcoord[idx] = np.repeat(self.weights, sizes)

    def validate_dim(self, n):
        if n != self.n:
            raise DimensionError(f"group structure is for n={self.n}, got n={n}")

    def _group_norms(self, x):
        y = x[self._perm]
        if self.p == 2:
            return np.sqrt(np.add.reduceat(y * y, self._starts))
        return np.add.reduceat(np.abs(y), self._starts)

    def gauge(self, x):
        """sum_i w_i ||x_{G_i}||_p."""
        x = np.asarray(x, dtype=np.float64)
        return float(self.weights @ self._group_norms(x))

    def value(self, x):
        tol = _MEMBER_TOL * max(1.0, self.sigma)
        return 0.0 if self.gauge(x) <= self.sigma + tol else np.inf

    def _bisect(self, phi, t_hi):
        lo, hi = 0.0, t_hi
        target = self.sigma
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            val = phi(mid)
            if abs(val - target) <= 1e-10 * max(1.0, target):
                return mid
            if val > target:
                lo = mid
            else:
                hi = mid
        return hi

    def prox(self, z, step=1.0):
        z = np.asarray(z, dtype=np.float64)
        self.validate_dim(z.size)
        if self.gauge(z) <= self.sigma:
            return z.copy()
        if self.p == 2:
            norms = self._group_norms(z)
            w = self.weights

            def phi(t):
                return float(w @ np.maximum(norms - t * w, 0.0))

            t = self._bisect(phi, float(np.max(norms / w)))
            scale = np.zeros_like(norms)
            pos = norms > 0
            scale[pos] = np.maximum(1.0 - t * w[pos] / norms[pos], 0.0)
            out = np.empty_like(z)
            out[self._perm] = z[self._perm] * np.repeat(scale, self._sizes)
            return out
        a = np.abs(z)
        wc = self._wcoord

        def phi(t):
            return float(wc @ np.maximum(a - t * wc, 0.0))

        t = self._bisect(phi, float(np.max(a / wc)))
        return kernels.soft_threshold_per_element(z, t * wc)

    def subgrad_distance(self, x, g):
        """Distance from -g to the normal cone: ||g|| inside, conic fit on the boundary."""
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        self.validate_dim(x.size)
        gauge = self.gauge(x)
        tol = _MEMBER_TOL * max(1.0, self.sigma)
        if gauge > self.sigma + tol:
            raise DomainError("x outside the group-norm ball")
        if gauge < self.sigma - tol:
            return float(np.linalg.norm(g))

        if self.p == 2:
            active, zero_groups = [], []
            for gi, wi in zip(self.groups, self.weights):
                norm_i = np.linalg.norm(x[gi])
                if norm_i > 0:
                    active.append((gi, wi, x[gi] / norm_i))
                else:
                    zero_groups.append((gi, wi))

            def dist_sq(t):
                d = 0.0
                for gi, wi, u in active:
                    v = g[gi] + t * wi * u
                    d += float(v @ v)
                for gi, wi in zero_groups:
                    d += max(np.linalg.norm(g[gi]) - t * wi, 0.0) ** 2
                return d

            t_hi = float(np.max([np.linalg.norm(g[gi]) for gi in self.groups]) / np.min(self.weights)) + 1.0
        else:
            wc = self._wcoord
            nz = x != 0.0
            sg = np.sign(x)

            def dist_sq(t):
                on = g[nz] + t * wc[nz] * sg[nz]
                off = np.maximum(np.abs(g[~nz]) - t * wc[~nz], 0.0)
                return float(on @ on + off @ off)

            t_hi = float(np.max(np.abs(g)) / np.min(wc)) + 1.0

        res = minimize_scalar(dist_sq, bounds=(0.0, t_hi), method="bounded", options={"xatol": 1e-12})
        best = min(dist_sq(0.0), dist_sq(res.x))
        return float(np.sqrt(best))

    def __repr__(self):
        return f"GroupBall(n_groups={len(self.groups)}, sigma={self.sigma}, p={self.p})"


class Zero(Regularizer):
    """P identically zero; prox is the identity."""

    name = "zero"
    is_convex = True
    separable = True

    def value(self, x):
        return 0.0

    def prox(self, z, step=1.0):
        return np.asarray(z, dtype=np.float64).copy()

    def prox_batch(self, Z, step=1.0):
        return np.atleast_2d(np.asarray(Z, dtype=np.float64)).copy()

    def subgrad_distance(self, x, g):
        return float(np.linalg.norm(g))

    def __repr__(self):
        return "Zero()"
