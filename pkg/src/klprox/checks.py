"""Self-contained inequality checks for the ``klprox check`` verb.

Each check returns (name, passed, detail). These are smoke-sized versions of
the property suite in tests/, runnable from the CLI without pytest.
"""

import numpy as np

from .core import CompositeObjective
from .diagnostics import check_error_bound, fit_kl_exponent_from_trace
from .losses import LeastSquares
from .oracles import (
    project_epigraph_l1,
    prox_l0_enum,
    prox_separable_grid,
    prox_sparse_simplex_enum,
    prox_trimmed_l1_enum,
)
from .regularizers import L1, MCP, SCAD, GroupBall, L0Ball, SparseSimplex, TrimmedL1, Zero


def _convex_members(n, rng):
    groups = [np.arange(0, n // 2), np.arange(n // 2, n)]
    return [
        ("l1", L1(1.0)),
        ("zero", Zero()),
        ("group_ball", GroupBall(groups, np.ones(2), 1.0, p=2)),
    ]


def check_lemma_residual_vs_subgrad(n=4, samples=300, seed=0):
    """Unit-step prox residual <= dist(0, g + dP(x)) for convex members.

    The bound is a theorem only for convex P; the nonconvex catalog members
    violate it (see the decisions record), so they are excluded here.
    """
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for name, reg in _convex_members(n, rng):
        for _ in range(samples):
            x = rng.standard_normal(n)
            if not reg.in_domain(x):
                x = reg.prox(x)
            g = rng.standard_normal(n)
            d = reg.subgrad_distance(x, g)
            if d is None:
                continue
            resid = float(np.linalg.norm(reg.prox(x - g) - x))
            worst = max(worst, resid - d)
    return ("lemma4.1 residual<=subgrad (convex members)", worst <= 1e-9,
            f"max violation {worst:.2e}")


def check_nonexpansiveness(n=6, pairs=200, seed=1):
    rng = np.random.default_rng(seed)
    groups = [np.arange(0, 3), np.arange(3, n)]
    members = [L1(0.7), Zero(), GroupBall(groups, np.array([1.0, 2.0]), 1.5, p=2)]
    worst = -np.inf
    for reg in members:
        for _ in range(pairs):
            y, z = rng.standard_normal(n), rng.standard_normal(n)
            lhs = np.linalg.norm(reg.prox(y) - reg.prox(z))
            worst = max(worst, lhs - np.linalg.norm(y - z))
    return ("prox nonexpansive (convex members)", worst <= 1e-10, f"max violation {worst:.2e}")


def check_prox_oracles(seed=2, quick=True):
    from . import _kernels_np as ref_kernels

    rng = np.random.default_rng(seed)
    n_pts = 20 if quick else 100
    worst = 0.0
    # the grid oracle scans penalty VALUES; the numpy formulas are an
    # independent route from the closed-form prox under test
    for reg, value_fn in (
        (L1(0.8), lambda u: 0.8 * np.abs(u)),
        (SCAD(1.0, 3.0), lambda u: ref_kernels.scad_penalty(u, 1.0, 3.0)),
        (MCP(1.0, 2.0), lambda u: ref_kernels.mcp_penalty(u, 1.0, 2.0)),
    ):
        for _ in range(n_pts):
            z = rng.standard_normal(3) * 3
            t = float(rng.uniform(0.2, 2.0))
            closed = reg.prox(z, t)
            gridded = prox_separable_grid(value_fn, z, t, grid_step=1e-4)
            worst = max(worst, float(np.max(np.abs(closed - gridded))))
    for _ in range(n_pts):
        z = rng.standard_normal(6) * 2
        worst = max(worst, float(np.max(np.abs(L0Ball(2).prox(z) - prox_l0_enum(z, 2)))))
        worst = max(worst, float(np.max(np.abs(
            SparseSimplex(2).prox(z) - prox_sparse_simplex_enum(z, 2)))))
        worst = max(worst, float(np.max(np.abs(
            TrimmedL1(1.0, 0.5, 2).prox(z, 0.7) - prox_trimmed_l1_enum(z, 1.0, 0.5, 2, 0.7)))))
    return ("prox matches brute-force oracles", worst <= 2e-4, f"max deviation {worst:.2e}")


def check_epigraph_ratio(samples=200, seed=3):
    """Projection onto epi ||.||_1 within (M+1) x prox residual, M = sqrt(n)."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for n in (1, 2, 3):
        A = rng.standard_normal((n + 1, n))
        b = rng.standard_normal(n + 1)
        loss = LeastSquares(A, b)
        reg = L1(1.0)
        M = np.sqrt(n)
        for _ in range(samples // 3 + 1):
            x = rng.standard_normal(n) * 2
            g = loss.gradient(x)
            resid = float(np.linalg.norm(reg.prox(x - g) - x))
            if resid < 1e-12:
                continue
            q = np.concatenate([x - g, [reg.value(x) - 1.0]])
            proj = project_epigraph_l1(q, mu=1.0)
            lhs = float(np.linalg.norm(proj - np.concatenate([x, [reg.value(x)]])))
            worst = max(worst, lhs - (M + 1.0) * resid)
    return ("epigraph projection ratio <= (M+1) * residual", worst <= 1e-9,
            f"max violation {worst:.2e}")


def check_branch_continuity():
    worst = 0.0
    for reg, kinks in ((SCAD(1.0, 3.0), (1.0, 3.0)), (MCP(0.8, 2.5), (2.0,))):
        for kink in kinks:
            lo = reg.value(np.array([kink - 1e-9]))
            hi = reg.value(np.array([kink + 1e-9]))
            worst = max(worst, abs(hi - lo))
    return ("scad/mcp continuity across branch boundaries", worst <= 1e-8,
            f"max jump {worst:.2e}")


def check_error_bound_smoke():
    obj = CompositeObjective(LeastSquares(np.array([[1.0]]), np.array([2.0])), L1(1.0))
    report = check_error_bound(obj, (-2.0, 4.0), grid=200)
    ok = report is not None and np.isfinite(report.max_ratio) and report.max_ratio <= 3.0
    detail = "no report" if report is None else f"max ratio {report.max_ratio:.3f}"
    return ("1-D lasso error-bound ratio finite and <= 3", ok, detail)


def check_fit_soundness():
    from .core import SolverTrace

    k = np.arange(40)
    gaps = 2.0 ** (-k.astype(float))
    dists = 3.0 * gaps**0.5
    trace = SolverTrace(
        iterates=np.zeros((40, 1)),
        objectives=gaps,
        residuals=dists,
        subgrad_dists=dists,
        steps=np.ones(40),
        converged=True,
        tol=0.0,
    )
    fit = fit_kl_exponent_from_trace(trace, f_star=0.0)
    ok = abs(fit.alpha_hat - 0.5) < 1e-6 and abs(fit.c_hat - 3.0) < 3e-6
    return ("exponent fit recovers synthetic power law", ok,
            f"alpha_hat={fit.alpha_hat:.8f} c_hat={fit.c_hat:.8f}")


def run_inequality_suite(quick=False):
    return [
        check_lemma_residual_vs_subgrad(samples=100 if quick else 300),
        check_nonexpansiveness(pairs=50 if quick else 200),
        check_prox_oracles(quick=quick),
        check_epigraph_ratio(samples=60 if quick else 200),
        check_branch_continuity(),
        check_error_bound_smoke(),
        check_fit_soundness(),
    ]
