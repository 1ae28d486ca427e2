"""Empirical estimation of KL exponents, linear-rate fitting, error-bound
verification, and checkers for the exponent calculus rules.

The exponent estimate fits log dist(0, df(x)) against log(f(x) - f*) by
ordinary least squares. Sampling-based fits work on the lower envelope:
samples are binned by log objective gap (the inequality's binding constant
lives on the per-bin minima). Function-value gaps below ~10 machine epsilons
of f* are discarded before taking logs.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .core import CompositeObjective, DomainError, InsufficientDataError, as_vector
from .envelope import MoreauEnvelope
from .losses import LeastSquares
from .regularizers import L1, Zero
from .solvers import _residual_grid, estimate_stationary_set

_EPS = np.finfo(np.float64).eps


class OutOfHypothesisError(ValueError):
    """Instance falls outside the hypothesis of the rule being checked."""


@dataclass
class KLFitResult:
    """Fitted exponent alpha_hat and coefficient c_hat of a power-law lower bound."""

    alpha_hat: float
    c_hat: float
    r_squared: float
    window: tuple
    f_star: float
    n_points: int


@dataclass
class RateFitResult:
    """Geometric fit of a convergence tail; kind is withheld unless the fit is clean."""

    rho_hat: float
    kind: Optional[str]
    r_squared: float
    window: tuple


@dataclass
class ErrorBoundReport:
    """Empirical sup of dist(x, X)/residual over a grid sample."""

    n_samples: int
    n_used: int
    n_skipped: int
    max_ratio: float
    epsilon_used: float
    zeta_used: float
    stationary_points: np.ndarray = field(repr=False, default=None)


@dataclass
class RuleCheckResult:
    rule: str
    instance: str
    predicted: Optional[float]
    fitted: Optional[float]
    tolerance: float
    passed: bool
    status: str = "ok"  # ok | unsupported

    def __str__(self):
        fit = "-" if self.fitted is None else f"{self.fitted:.3f}"
        pred = "-" if self.predicted is None else f"{self.predicted:.3f}"
        tag = "PASS" if self.passed else "FAIL"
        if self.status == "unsupported":
            tag = "SKIP"
        return f"[{tag}] {self.rule} ({self.instance}): fitted={fit} predicted={pred} tol={self.tolerance}"


def _gap_floor(f_star):
    return 10.0 * _EPS * max(abs(f_star), 1.0)


def _ols_loglog(log_gap, log_dist):
    slope, intercept = np.polyfit(log_gap, log_dist, 1)
    pred = slope * log_gap + intercept
    ss_res = float(np.sum((log_dist - pred) ** 2))
    ss_tot = float(np.sum((log_dist - np.mean(log_dist)) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-18 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def _clamp_alpha(slope):
    return float(min(max(slope, 0.0), 1.0 - 1e-12))


def fit_kl_exponent_from_trace(trace, f_star=None, use="subgrad", tail_fraction=0.6, min_points=10):
    """Fit the exponent from one solver trace.

    ``use`` selects the distance column: recorded subgradient distances
    (default) or prox residuals. f* defaults to the final objective of a
    converged trace; points with gap below the floor are discarded and the
    fit runs on the last ``tail_fraction`` of what survives.
    """
    if f_star is None:
        f_star = trace.final_objective
    gaps = np.asarray(trace.objectives, dtype=np.float64) - f_star
    if use == "subgrad":
        dists = np.asarray(trace.subgrad_dists, dtype=np.float64)
    elif use == "residual":
        dists = np.asarray(trace.residuals, dtype=np.float64)
    else:
        raise ValueError("use must be 'subgrad' or 'residual'")

    ok = np.isfinite(gaps) & np.isfinite(dists) & (gaps > _gap_floor(f_star)) & (dists > 0)
    idx = np.nonzero(ok)[0]
    if idx.size < min_points:
        raise InsufficientDataError(
            f"only {idx.size} usable trace points (need >= {min_points}); "
            "record subgradient distances or supply f_star"
        )
    take = max(min_points, int(math.ceil(tail_fraction * idx.size)))
    window_idx = idx[-take:]
    slope, intercept, r2 = _ols_loglog(np.log(gaps[window_idx]), np.log(dists[window_idx]))
    return KLFitResult(
        alpha_hat=_clamp_alpha(slope),
        c_hat=float(np.exp(intercept)),
        r_squared=r2,
        window=(int(window_idx[0]), int(window_idx[-1])),
        f_star=float(f_star),
        n_points=int(window_idx.size),
    )


def _sample_ball(xbar, radius, n_samples, rng):
    n = xbar.size
    dirs = rng.standard_normal((n_samples, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * rng.random(n_samples) ** (1.0 / n)
    return xbar + dirs * radii[:, None]


def fit_kl_exponent_of_function(value_fn, dist_fn, xbar, f_star=None, radius=0.5,
                                n_samples=4000, seed=0, bins=20, min_bins=5,
                                min_bin_count=30, top_trim=0.2, low_quantile=0.01):
    """Sampling-based exponent fit for arbitrary batch value/distance callables.

    Samples uniformly in the ball around xbar, discards points at or below
    f(xbar), bins the rest by log gap, and fits on the per-bin minimum
    distance (the lower envelope). Three windowing guards keep the envelope
    honest: the bin range starts at the ``low_quantile`` of the log gaps
    (the deep tail is one sample thick and carries no envelope information),
    bins holding fewer than ``min_bin_count`` samples are dropped (their
    minima have not converged to the envelope), and bins in the top
    ``top_trim`` fraction of the log-gap range are dropped (near the maximal
    sampled gap the ball truncates the direction that attains the envelope).
    """
    xbar = as_vector(np.atleast_1d(np.asarray(xbar, dtype=np.float64)))
    rng = np.random.default_rng(seed)
    X = _sample_ball(xbar, radius, n_samples, rng)
    fvals = np.asarray(value_fn(X), dtype=np.float64)
    if f_star is None:
        f_star = float(np.asarray(value_fn(xbar[None, :]))[0])
    gaps = fvals - f_star
    ok = np.isfinite(gaps) & (gaps > _gap_floor(f_star))
    X, gaps = X[ok], gaps[ok]
    if gaps.size == 0:
        raise InsufficientDataError("no sample exceeded f(xbar); neighborhood is degenerate")
    dists = np.asarray(dist_fn(X), dtype=np.float64)
    ok = np.isfinite(dists) & (dists > 0)
    X, gaps, dists = X[ok], gaps[ok], dists[ok]
    if gaps.size < min_bins:
        raise InsufficientDataError(f"only {gaps.size} usable samples")

    lg = np.log(gaps)
    keep = lg >= np.quantile(lg, low_quantile)
    lg, dists = lg[keep], dists[keep]
    lo_edge, hi_edge = float(lg.min()), float(lg.max())
    cutoff = hi_edge - top_trim * (hi_edge - lo_edge)
    edges = np.linspace(lo_edge, hi_edge + 1e-12, bins + 1)
    which = np.clip(np.digitize(lg, edges) - 1, 0, bins - 1)
    rep_lg, rep_ld, used_bins = [], [], []
    for b in range(bins):
        if edges[b + 1] > cutoff:
            continue
        mask = which == b
        if np.count_nonzero(mask) < min_bin_count:
            continue
        j = np.argmin(dists[mask])
        rep_lg.append(lg[mask][j])
        rep_ld.append(np.log(dists[mask][j]))
        used_bins.append(b)
    if len(used_bins) < min_bins:
        raise InsufficientDataError(
            f"only {len(used_bins)} gap bins survive the count/trim window "
            f"(need >= {min_bins}); raise n_samples"
        )

    slope, intercept, r2 = _ols_loglog(np.asarray(rep_lg), np.asarray(rep_ld))
    return KLFitResult(
        alpha_hat=_clamp_alpha(slope),
        c_hat=float(np.exp(intercept)),
        r_squared=r2,
        window=(int(used_bins[0]), int(used_bins[-1])),
        f_star=float(f_star),
        n_points=len(used_bins),
    )


def _objective_value_batch(obj, X):
    return obj.smooth.value_batch(X) + obj.reg.value_batch(X)


def _objective_dist_batch(obj, X):
    G = obj.smooth.gradient_batch(X)
    out = np.full(X.shape[0], np.nan)
    for i in range(X.shape[0]):
        try:
            d = obj.reg.subgrad_distance(X[i], G[i])
        except DomainError:
            d = None
        if d is not None:
            out[i] = d
    return out


def fit_kl_exponent_by_sampling(obj, xbar, radius=0.5, n_samples=4000, seed=0, bins=20):
    """Sampling-based exponent fit of a composite objective at xbar."""
    xbar = as_vector(xbar, obj.n)
    return fit_kl_exponent_of_function(
        lambda X: _objective_value_batch(obj, X),
        lambda X: _objective_dist_batch(obj, X),
        xbar,
        radius=radius,
        n_samples=n_samples,
        seed=seed,
        bins=bins,
    )


def fit_linear_rate(trace, ref=None, f_star=None, tail_fraction=0.6, min_points=5, r2_threshold=0.9):
    """Geometric fit of the convergence tail; None for non-converged traces.

    With ``ref`` fits ||x_k - ref|| (R-linear flavor); otherwise fits the
    objective gap against ``f_star`` (defaulting to the final objective).
    ``kind`` is withheld when the fit disqualifies a linear verdict: low
    r-squared, ratio at or above one, or a ratio that drifts between the two
    halves of the window (sublinear tails fit any short window well, but
    their local ratio keeps creeping toward one).
    """
    if not trace.converged:
        return None
    if ref is not None:
        errs = np.linalg.norm(trace.iterates - np.asarray(ref, dtype=np.float64), axis=1)
        kind = "R_linear"
    else:
        fs = trace.final_objective if f_star is None else float(f_star)
        errs = np.asarray(trace.objectives, dtype=np.float64) - fs
        kind = "Q_linear"

    floor = 10.0 * _EPS * max(1.0, float(np.max(errs, initial=0.0)))
    idx = np.nonzero(np.isfinite(errs) & (errs > floor))[0]
    if idx.size < min_points:
        raise InsufficientDataError(f"only {idx.size} usable points for a rate fit")
    take = max(min_points, int(math.ceil(tail_fraction * idx.size)))
    window_idx = idx[-take:]
    slope, _, r2 = _ols_loglog(window_idx.astype(np.float64), np.log(errs[window_idx]))
    rho = float(np.exp(slope))

    stable = True
    if window_idx.size >= 6:
        half = window_idx.size // 2
        s1, _, _ = _ols_loglog(window_idx[:half].astype(np.float64), np.log(errs[window_idx[:half]]))
        s2, _, _ = _ols_loglog(window_idx[half:].astype(np.float64), np.log(errs[window_idx[half:]]))
        stable = abs(s2 - s1) <= 0.25 * abs(slope) + 1e-12
    verdict = kind if (r2 >= r2_threshold and rho < 1.0 and stable) else None
    return RateFitResult(rho_hat=rho, kind=verdict, r_squared=r2,
                         window=(int(window_idx[0]), int(window_idx[-1])))


def check_error_bound(obj, box, grid=200, zeta=None, epsilon=None):
    """Empirical Luo-Tseng check: sup of dist(x, X)/residual over a grid.

    Ratios use only grid points with positive residual, objective value at
    most zeta, and residual below epsilon. Returns None when no stationary
    point lies inside the box.
    """
    stationary = estimate_stationary_set(obj, box, grid)
    if stationary.shape[0] == 0:
        return None
    zeta_used = np.inf if zeta is None else float(zeta)
    eps_used = np.inf if epsilon is None else float(epsilon)

    n = obj.n
    lo, hi = box
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), (n,))
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), (n,))
    axes = [np.linspace(lo[i], hi[i], grid) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=1)

    residuals = _residual_grid(obj, X)
    fvals = _objective_value_batch(obj, X)
    dists, _ = cKDTree(stationary).query(X)

    skipped = residuals == 0.0
    used = (~skipped) & (fvals <= zeta_used) & (residuals < eps_used)
    ratios = dists[used] / residuals[used]
    return ErrorBoundReport(
        n_samples=X.shape[0],
        n_used=int(np.count_nonzero(used)),
        n_skipped=int(np.count_nonzero(skipped)),
        max_ratio=float(np.max(ratios)) if ratios.size else float("nan"),
        epsilon_used=eps_used,
        zeta_used=zeta_used,
        stationary_points=stationary,
    )


# ---------------------------------------------------------------------------
# calculus-rule checkers


class _SquaredNorm:
    """Convex base ||x||^2 with closed-form prox; exponent certificate 1/2."""

    is_convex = True

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        return float(x @ x)

    def prox(self, z, step=1.0):
        return np.asarray(z, dtype=np.float64) / (1.0 + 2.0 * step)


def _fit_passes(fitted, predicted, tol):
    return abs(fitted - predicted) <= tol


def check_min_rule(pieces, xbar, expected_alpha, instance="custom", tol=0.1,
                   radius=0.4, n_samples=6000, seed=0, bins=20):
    """Exponent of a pointwise minimum of smooth pieces at xbar.

    ``pieces`` is a list of (value_batch, gradnorm_batch) pairs; near-ties
    between active pieces use the smaller gradient norm, matching the
    subdifferential inclusion for minima.
    """
    xbar = np.atleast_1d(np.asarray(xbar, dtype=np.float64))

    def value_fn(X):
        return np.min(np.stack([v(X) for v, _ in pieces]), axis=0)

    def dist_fn(X):
        vals = np.stack([v(X) for v, _ in pieces])
        norms = np.stack([g(X) for _, g in pieces])
        vmin = np.min(vals, axis=0)
        active = vals <= vmin + 1e-12 * np.maximum(1.0, np.abs(vmin))
        return np.min(np.where(active, norms, np.inf), axis=0)

    fit = fit_kl_exponent_of_function(value_fn, dist_fn, xbar, radius=radius,
                                      n_samples=n_samples, seed=seed, bins=bins)
    return RuleCheckResult("min_rule", instance, expected_alpha, fit.alpha_hat, tol,
                           _fit_passes(fit.alpha_hat, expected_alpha, tol))


def check_composition_rule(g_value, g_gradient, g_alpha, B, d=None, instance="custom",
                           tol=0.1, radius=0.4, n_samples=6000, seed=0, bins=20):
    """Exponent of x -> g(Bx + d) for full-row-rank B equals g's exponent."""
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    m, n = B.shape
    if np.linalg.matrix_rank(B) < m:
        raise OutOfHypothesisError("B must have full row rank (surjective linear map)")
    d = np.zeros(m) if d is None else np.asarray(d, dtype=np.float64)
    # anchor at a preimage of g's minimizer (the origin for the catalog g's)
    xbar = np.linalg.lstsq(B, -d, rcond=None)[0]

    def value_fn(X):
        return g_value(X @ B.T + d)

    def dist_fn(X):
        return np.linalg.norm(g_gradient(X @ B.T + d) @ B, axis=1)

    fit = fit_kl_exponent_of_function(value_fn, dist_fn, xbar, radius=radius,
                                      n_samples=n_samples, seed=seed, bins=bins)
    return RuleCheckResult("composition_rule", instance, g_alpha, fit.alpha_hat, tol,
                           _fit_passes(fit.alpha_hat, g_alpha, tol))


def check_separable_sum_rule(instance="x1^2 + x2^4", tol=0.1, radius=0.4,
                             n_samples=6000, seed=0, bins=20):
    """Separable sum x1^2 + x2^4 at the origin: exponent max(1/2, 3/4)."""

    def value_fn(X):
        return X[:, 0] ** 2 + X[:, 1] ** 4

    def dist_fn(X):
        return np.sqrt(4.0 * X[:, 0] ** 2 + 16.0 * X[:, 1] ** 6)

    fit = fit_kl_exponent_of_function(value_fn, dist_fn, np.zeros(2), radius=radius,
                                      n_samples=n_samples, seed=seed, bins=bins)
    return RuleCheckResult("separable_sum_rule", instance, 0.75, fit.alpha_hat, tol,
                           _fit_passes(fit.alpha_hat, 0.75, tol))


def check_moreau_rule(base_exponent, lam=1.0, tol=0.1, radius=0.4, n_samples=6000,
                      seed=0, bins=20):
    """Envelope exponent rule: max(1/2, a/(2-2a)) for convex bases with exponent a.

    Supported certificates: base_exponent 1/2 through the squared-norm and l1
    bases. Other exponents in (0, 2/3) have no catalog base with an exact
    prox; they come back marked unsupported. Exponents >= 2/3 are outside
    the rule's hypothesis.
    """
    if not 0.0 < base_exponent < 2.0 / 3.0:
        raise OutOfHypothesisError("Moreau rule requires a base exponent in (0, 2/3)")
    predicted = max(0.5, base_exponent / (2.0 - 2.0 * base_exponent))
    if base_exponent != 0.5:
        return [RuleCheckResult("moreau_rule", f"alpha={base_exponent}", predicted, None,
                                tol, True, status="unsupported")]

    results = []
    for base, name in ((_SquaredNorm(), "squared_norm"), (L1(1.0), "l1_huber")):
        env = MoreauEnvelope(base, lam)

        def value_fn(X, env=env):
            return np.array([env.value(row) for row in X])

        def dist_fn(X, env=env):
            return np.array([env.gradient_norm(row) for row in X])

        fit = fit_kl_exponent_of_function(value_fn, dist_fn, np.zeros(1), radius=radius,
                                          n_samples=n_samples, seed=seed, bins=bins)
        results.append(RuleCheckResult("moreau_rule", f"{name}, lam={lam}", predicted,
                                       fit.alpha_hat, tol,
                                       _fit_passes(fit.alpha_hat, predicted, tol)))
    return results


def check_potential_rule(obj, xbar, beta, expected=0.5, instance=None, tol=0.1,
                         radius=0.4, n_samples=8000, seed=0, bins=20):
    """Exponent of the momentum potential f(x) + (beta/2)||x - y||^2 at (xbar, xbar)."""
    xbar = as_vector(xbar, obj.n)
    n = obj.n

    def value_fn(XY):
        X, Y = XY[:, :n], XY[:, n:]
        dd = np.sum((X - Y) ** 2, axis=1)
        return _objective_value_batch(obj, X) + 0.5 * beta * dd

    def dist_fn(XY):
        X, Y = XY[:, :n], XY[:, n:]
        G = obj.smooth.gradient_batch(X)
        out = np.full(XY.shape[0], np.nan)
        for i in range(XY.shape[0]):
            diff = X[i] - Y[i]
            try:
                dx = obj.reg.subgrad_distance(X[i], G[i] + beta * diff)
            except DomainError:
                dx = None
            if dx is not None:
                out[i] = np.sqrt(dx**2 + beta**2 * float(diff @ diff))
        return out

    fit = fit_kl_exponent_of_function(value_fn, dist_fn, np.concatenate([xbar, xbar]),
                                      radius=radius, n_samples=n_samples, seed=seed, bins=bins)
    name = instance or f"beta={beta}"
    return RuleCheckResult("potential_rule", name, expected, fit.alpha_hat, tol,
                           _fit_passes(fit.alpha_hat, expected, tol))


def _sq_norm_batch(Y):
    return np.sum(Y * Y, axis=1)


def _sq_norm_grad(Y):
    return 2.0 * Y


def _pow4_batch(Y):
    return np.sum(Y**4, axis=1)


def _pow4_grad(Y):
    return 4.0 * Y**3


def run_rule_suite(tol=0.1, n_samples=8000, seed=0):
    """Run every listed calculus-rule instance; returns a list of RuleCheckResult."""
    results = []

    results.append(check_min_rule(
        [(lambda X: X[:, 0] ** 2, lambda X: 2.0 * np.abs(X[:, 0])),
         (lambda X: (X[:, 0] - 1.0) ** 2 + 0.5, lambda X: 2.0 * np.abs(X[:, 0] - 1.0))],
        [0.0], 0.5, instance="one active piece", tol=tol, n_samples=n_samples, seed=seed))
    results.append(check_min_rule(
        [(lambda X: X[:, 0] ** 2, lambda X: 2.0 * np.abs(X[:, 0])),
         (lambda X: X[:, 0] ** 4, lambda X: 4.0 * np.abs(X[:, 0]) ** 3)],
        [0.0], 0.75, instance="two active pieces", tol=tol, n_samples=n_samples, seed=seed))

    results.append(check_composition_rule(_sq_norm_batch, _sq_norm_grad, 0.5, np.eye(2),
                                          instance="sq_norm, B=I", tol=tol,
                                          n_samples=n_samples, seed=seed))
    results.append(check_composition_rule(_sq_norm_batch, _sq_norm_grad, 0.5,
                                          np.array([[1.0, 2.0]]),
                                          instance="sq_norm, 1x2 row", tol=tol,
                                          n_samples=n_samples, seed=seed))
    results.append(check_composition_rule(_pow4_batch, _pow4_grad, 0.75,
                                          np.array([[1.0, 1.0]]),
                                          instance="y^4, B=(1,1)", tol=tol,
                                          n_samples=n_samples, seed=seed))

    results.append(check_separable_sum_rule(tol=tol, n_samples=n_samples, seed=seed))

    results.extend(check_moreau_rule(0.5, lam=1.0, tol=tol, n_samples=n_samples, seed=seed))

    quad = CompositeObjective(LeastSquares(np.array([[np.sqrt(2.0)]]), np.zeros(1)), Zero())
    results.append(check_potential_rule(quad, np.zeros(1), beta=1.0, instance="x^2, beta=1",
                                        tol=tol, n_samples=n_samples, seed=seed))
    pair = [check_potential_rule(quad, np.zeros(1), beta=b, instance=f"x^2, beta={b}",
                                 tol=tol, n_samples=n_samples, seed=seed)
            for b in (0.5, 2.0)]
    results.extend(pair)
    consistent = abs(pair[0].fitted - pair[1].fitted) <= 0.05
    results.append(RuleCheckResult("potential_rule", "beta independence", None,
                                   abs(pair[0].fitted - pair[1].fitted), 0.05, consistent))
    return results
