"""Experiment harness: seeded problem generation, presets, run reports, and
CSV/JSON emission.

Config files are flat ``key = value`` text ('#' comments allowed); CLI flags
override file values. A zero / empty value for mu, sigma, r, k, alpha or
step means "derive the default from the generated data".
"""

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .core import CompositeObjective, ConfigurationError, InsufficientDataError
from .diagnostics import fit_kl_exponent_from_trace, fit_linear_rate
from .losses import LeastSquares, Logistic, Poisson, ZeroLoss
from .regularizers import (
    L1,
    MCP,
    SCAD,
    GroupBall,
    L0Ball,
    SparseSimplex,
    TrimmedL1,
    Zero,
)
from .solvers import IPianoConfig, PGConfig, run_ipiano, run_pg

SCHEMA_VERSION = 1
CSV_COLUMNS = ("iter", "objective", "residual", "subgrad_dist", "step")


@dataclass
class ProblemConfig:
    """Flat experiment description; every field round-trips through text."""

    preset: str = ""
    loss: str = "least_squares"
    m: int = 30
    n: int = 50
    noise: float = 0.01
    sparsity: int = 5
    seed: int = 0
    reg: str = "l1"
    mu: float = 0.0          # 0 -> 0.1 * ||grad h(0)||_inf
    lam: float = 0.5
    theta: float = 3.7
    r: int = 0               # 0 -> sparsity
    gamma: float = 0.5
    k: int = 0               # 0 -> sparsity
    group_size: int = 5
    sigma: float = 0.0       # 0 -> 0.7 * gauge of the planted signal
    p: int = 2
    box_radius: float = 10.0
    solver: str = "pg"
    beta: float = 0.5
    alpha: float = 0.0       # 0 -> 0.99 * 2(1-beta)/L
    step: float = 0.0        # 0 -> 0.99 / L
    max_iters: int = 20000
    tol: float = 1e-10
    record_subgrad: bool = True
    fit_kl: bool = True
    fit_rate: bool = True


PRESETS = {
    "lasso": dict(loss="least_squares", reg="l1", m=30, n=50),
    "scad-ls": dict(loss="least_squares", reg="scad", lam=0.5, theta=3.7),
    "mcp-ls": dict(loss="least_squares", reg="mcp", lam=0.5, theta=3.0),
    "logistic-l1": dict(loss="logistic", reg="l1", m=60, n=40, noise=0.1),
    "l0-ball-ls": dict(loss="least_squares", reg="l0_ball", m=40, noise=0.005),
    "sparse-simplex-ls": dict(loss="least_squares", reg="sparse_simplex", noise=0.005),
    "trimmed-l1-ls": dict(loss="least_squares", reg="trimmed_l1", gamma=0.5),
    "group-ball-ls": dict(loss="least_squares", reg="group_ball", p=2),
    "ipiano-lasso": dict(loss="least_squares", reg="l1", solver="ipiano", beta=0.5),
}

_LOSSES = ("least_squares", "logistic", "poisson", "zero")
_REGS = ("l1", "scad", "mcp", "l0_ball", "sparse_simplex", "trimmed_l1", "group_ball", "zero")


def apply_preset(cfg: ProblemConfig) -> ProblemConfig:
    if not cfg.preset:
        return cfg
    if cfg.preset not in PRESETS:
        raise ConfigurationError(f"unknown preset {cfg.preset!r}; choose from {sorted(PRESETS)}")
    merged = dataclasses.replace(cfg, **PRESETS[cfg.preset])
    return merged


def validate_config(cfg: ProblemConfig):
    if cfg.loss not in _LOSSES:
        raise ConfigurationError(f"loss={cfg.loss!r} violates loss in {_LOSSES}")
    if cfg.reg not in _REGS:
        raise ConfigurationError(f"reg={cfg.reg!r} violates reg in {_REGS}")
    if cfg.m < 1 or cfg.n < 1:
        raise ConfigurationError(f"m={cfg.m}, n={cfg.n} violate m >= 1 and n >= 1")
    if not 0 < cfg.sparsity <= cfg.n:
        raise ConfigurationError(f"sparsity={cfg.sparsity} violates 0 < sparsity <= n={cfg.n}")
    if cfg.solver not in ("pg", "ipiano"):
        raise ConfigurationError(f"solver={cfg.solver!r} violates solver in ('pg', 'ipiano')")
    if not 0.0 <= cfg.beta < 1.0:
        raise ConfigurationError(f"beta={cfg.beta} violates beta in [0, 1)")
    if cfg.p not in (1, 2):
        raise ConfigurationError(f"p={cfg.p} violates p in {{1, 2}}")
    if cfg.tol <= 0 or cfg.max_iters < 1:
        raise ConfigurationError("tol must be positive and max_iters at least 1")


def generate_problem(cfg: ProblemConfig):
    """Build (objective, x0, resolved) deterministically from cfg.seed.

    ``resolved`` echoes derived quantities: the planted signal, the actual
    mu/sigma/r/k in effect, and the Lipschitz bound.
    """
    cfg = apply_preset(cfg)
    validate_config(cfg)
    rng = np.random.default_rng(cfg.seed)
    m, n = cfg.m, cfg.n

    A = rng.standard_normal((m, n)) / np.sqrt(m)
    support = np.sort(rng.choice(n, size=cfg.sparsity, replace=False))
    signal = np.zeros(n)
    if cfg.reg == "sparse_simplex":
        vals = rng.random(cfg.sparsity) + 0.1
        signal[support] = vals / vals.sum()
    else:
        signal[support] = rng.choice([-1.0, 1.0], size=cfg.sparsity) * (1.0 + rng.random(cfg.sparsity))

    if cfg.loss == "least_squares":
        b = A @ signal + cfg.noise * rng.standard_normal(m)
        smooth = LeastSquares(A, b)
    elif cfg.loss == "logistic":
        raw = A @ signal + cfg.noise * rng.standard_normal(m)
        b = -np.where(raw >= 0, 1.0, -1.0)
        smooth = Logistic(A, b)
    elif cfg.loss == "poisson":
        rate = np.exp(np.clip(A @ signal, -3.0, 3.0))
        b = rng.poisson(rate).astype(np.float64)
        smooth = Poisson(A, b, box_radius=cfg.box_radius)
    else:
        smooth = ZeroLoss(n)

    resolved = {"support": support.tolist(), "signal_nnz": int(np.count_nonzero(signal))}

    def auto_mu():
        return 0.1 * float(np.max(np.abs(smooth.gradient(np.zeros(n)))))

    r_eff = cfg.r if cfg.r > 0 else cfg.sparsity
    k_eff = cfg.k if cfg.k > 0 else cfg.sparsity
    if cfg.reg == "l1":
        mu = cfg.mu if cfg.mu > 0 else auto_mu()
        reg = L1(mu)
        resolved["mu"] = mu
    elif cfg.reg == "scad":
        reg = SCAD(cfg.lam, cfg.theta)
    elif cfg.reg == "mcp":
        reg = MCP(cfg.lam, cfg.theta)
    elif cfg.reg == "l0_ball":
        reg = L0Ball(r_eff)
        resolved["r"] = r_eff
    elif cfg.reg == "sparse_simplex":
        reg = SparseSimplex(r_eff)
        resolved["r"] = r_eff
    elif cfg.reg == "trimmed_l1":
        mu = cfg.mu if cfg.mu > 0 else auto_mu()
        reg = TrimmedL1(mu, cfg.gamma, k_eff)
        resolved["mu"] = mu
        resolved["k"] = k_eff
    elif cfg.reg == "group_ball":
        bounds = np.arange(0, n + cfg.group_size, cfg.group_size)
        bounds[-1] = min(bounds[-1], n)
        groups = [np.arange(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)
                  if bounds[i] < bounds[i + 1]]
        weights = np.ones(len(groups))
        probe = GroupBall(groups, weights, 1.0, p=cfg.p)
        gauge = probe.gauge(signal)
        sigma = cfg.sigma if cfg.sigma > 0 else (0.7 * gauge if gauge > 0 else 1.0)
        reg = GroupBall(groups, weights, sigma, p=cfg.p)
        resolved["sigma"] = sigma
    else:
        reg = Zero()

    obj = CompositeObjective(smooth, reg)
    resolved["lipschitz"] = obj.smooth.lipschitz
    resolved["signal"] = signal.tolist()
    if cfg.reg == "sparse_simplex":
        x0 = np.full(n, 1.0 / n)
    elif cfg.reg == "l0_ball" and cfg.loss == "least_squares":
        # thresholded least-squares warm start; cold-started hard thresholding
        # stalls at spurious step-size-dependent fixed points
        x0 = reg.prox(np.linalg.lstsq(A, b, rcond=None)[0])
    else:
        x0 = np.zeros(n)
    return obj, x0, resolved


def solve(obj, x0, cfg: ProblemConfig):
    if cfg.solver == "ipiano":
        icfg = IPianoConfig(beta=cfg.beta, alpha=cfg.alpha if cfg.alpha > 0 else None,
                            max_iters=cfg.max_iters, tol=cfg.tol,
                            record_subgrad=cfg.record_subgrad)
        return run_ipiano(obj, x0, icfg)
    pcfg = PGConfig(step=cfg.step if cfg.step > 0 else None, max_iters=cfg.max_iters,
                    tol=cfg.tol, record_subgrad=cfg.record_subgrad)
    return run_pg(obj, x0, pcfg)


@dataclass
class RunReport:
    """Serializable summary of one experiment."""

    schema_version: int
    config: dict
    resolved: dict
    iterations: int
    converged: bool
    final_objective: float
    final_residual: float
    rate: dict | None
    kl: dict | None
    wall_time_s: float

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _fit_dicts(trace, cfg):
    rate = kl = None
    if cfg.fit_rate and trace.converged:
        try:
            r = fit_linear_rate(trace)
            if r is not None:
                rate = {"rho_hat": r.rho_hat, "kind": r.kind, "r_squared": r.r_squared,
                        "window": list(r.window)}
        except InsufficientDataError:
            rate = None
    if cfg.fit_kl:
        try:
            use = "subgrad" if cfg.record_subgrad else "residual"
            f = fit_kl_exponent_from_trace(trace, use=use)
            kl = {"alpha_hat": f.alpha_hat, "c_hat": f.c_hat, "r_squared": f.r_squared,
                  "window": list(f.window), "f_star": f.f_star, "n_points": f.n_points}
        except InsufficientDataError:
            kl = None
    return rate, kl


def run_experiment(cfg: ProblemConfig):
    """Generate, solve, fit, and summarize; returns (RunReport, SolverTrace)."""
    start = time.perf_counter()
    obj, x0, resolved = generate_problem(cfg)
    trace = solve(obj, x0, cfg)
    rate, kl = _fit_dicts(trace, cfg)
    resolved = {k: v for k, v in resolved.items() if k != "signal"}
    report = RunReport(
        schema_version=SCHEMA_VERSION,
        config=dataclasses.asdict(apply_preset(cfg)),
        resolved=resolved,
        iterations=len(trace) - 1,
        converged=bool(trace.converged),
        final_objective=float(trace.final_objective),
        final_residual=float(trace.final_residual),
        rate=rate,
        kl=kl,
        wall_time_s=time.perf_counter() - start,
    )
    return report, trace


def emit_csv(trace, path):
    """Write the trace as CSV with columns iter,objective,residual,subgrad_dist,step."""
    try:
        with open(path, "w") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for k in range(len(trace)):
                d = trace.subgrad_dists[k]
                cells = (
                    str(k),
                    repr(float(trace.objectives[k])),
                    repr(float(trace.residuals[k])),
                    "NA" if np.isnan(d) else repr(float(d)),
                    repr(float(trace.steps[k])),
                )
                fh.write(",".join(cells) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_trace_csv(path):
    """Read an emitted CSV back into column arrays (NA -> NaN)."""
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != CSV_COLUMNS:
                raise ValueError(f"unexpected CSV header {header} in {path}")
            rows = [line.strip().split(",") for line in fh if line.strip()]
    except OSError as exc:
        raise OSError(f"cannot read CSV from {path}: {exc}") from exc
    cols = {name: [] for name in CSV_COLUMNS}
    for row in rows:
        for name, cell in zip(CSV_COLUMNS, row):
            cols[name].append(np.nan if cell == "NA" else float(cell))
    return {name: np.asarray(vals) for name, vals in cols.items()}


def emit_json(report, path):
    try:
        with open(path, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write JSON to {path}: {exc}") from exc


def load_report(path):
    try:
        with open(path) as fh:
            return RunReport.from_dict(json.load(fh))
    except OSError as exc:
        raise OSError(f"cannot read JSON from {path}: {exc}") from exc


def parse_config_file(path):
    """Parse a flat key = value config file into a dict of strings."""
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
                key, val = (part.strip() for part in line.split("=", 1))
                out[key] = val
    except OSError as exc:
        raise OSError(f"cannot read config from {path}: {exc}") from exc
    return out


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ProblemConfig)}


def _coerce(key, raw):
    if key not in _FIELD_TYPES:
        raise ConfigurationError(f"unknown config key {key!r}")
    ftype = _FIELD_TYPES[key]
    if ftype == "bool" or ftype is bool:
        if str(raw).strip().lower() in ("1", "true", "yes", "on"):
            return True
        if str(raw).strip().lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"config key {key!r} expects a boolean, got {raw!r}")
    try:
        if ftype == "int" or ftype is int:
            return int(raw)
        if ftype == "float" or ftype is float:
            return float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"config key {key!r} expects a {ftype} value, got {raw!r}") from exc
    return str(raw)


def build_config(file_values=None, overrides=None):
    """Assemble a ProblemConfig: defaults <- config file <- explicit overrides."""
    values = {}
    for source in (file_values or {}), (overrides or {}):
        for key, raw in source.items():
            values[key] = _coerce(key, raw) if isinstance(raw, str) else raw
    unknown = set(values) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    return ProblemConfig(**values)


def sweep_threads(default=None):
    """Worker cap for sweeps: KLPROX_THREADS, else cpu count."""
    env = os.environ.get("KLPROX_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigurationError(f"KLPROX_THREADS={env!r} is not an integer") from exc
    return default or os.cpu_count() or 1
