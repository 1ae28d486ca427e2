"""Benchmark the compiled kernels against the numpy fallback.

Run:  python benchmarks/bench_kernels.py
The solver macro-benchmark re-executes this script in a subprocess with
KLPROX_BACKEND fixed, so both backends run the identical workload.
"""

import os
import subprocess
import sys
import time

import numpy as np

from klprox import _kernels_np as knp

try:
    from klprox import _kernels_c as kc
except ImportError:
    kc = None


def time_fn(fn, *args, repeats=7):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def micro():
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}{'n':>9}{'numpy':>12}{'compiled':>12}{'speedup':>9}")
    cases = [
        ("soft_threshold", lambda m, z: m.soft_threshold(z, 0.7)),
        ("scad_prox", lambda m, z: m.scad_prox(z, 1.0, 1.0, 3.7)),
        ("mcp_prox", lambda m, z: m.mcp_prox(z, 1.0, 1.0, 3.0)),
        ("scad_penalty", lambda m, z: m.scad_penalty(z, 1.0, 3.7)),
        ("scad_derivative", lambda m, z: m.scad_derivative(z, 1.0, 3.7)),
    ]
    for n in (100, 10_000, 1_000_000):
        z = rng.standard_normal(n) * 3
        for name, call in cases:
            t_np = time_fn(call, knp, z)
            if kc is None:
                print(f"{name:<24}{n:>9}{t_np * 1e6:>10.1f}us{'-':>12}{'-':>9}")
            else:
                t_c = time_fn(call, kc, z)
                print(f"{name:<24}{n:>9}{t_np * 1e6:>10.1f}us{t_c * 1e6:>10.1f}us"
                      f"{t_np / t_c:>8.1f}x")
        print()


_SOLVER_SNIPPET = """
import time
import numpy as np
from klprox import kernels
from klprox.harness import ProblemConfig, run_experiment

start = time.perf_counter()
iters = 0
for preset in ("scad-ls", "mcp-ls", "lasso"):
    for seed in range(4):
        report, _ = run_experiment(ProblemConfig(preset=preset, seed=seed))
        assert report.converged
        iters += report.iterations
print(f"  {kernels.BACKEND:>9}: {time.perf_counter() - start:6.2f}s for {iters} PG iterations")
"""


def macro():
    print("solver macro-benchmark (12 runs across scad-ls / mcp-ls / lasso):")
    for backend in ("python", "compiled") if kc is not None else ("python",):
        env = dict(os.environ, KLPROX_BACKEND=backend)
        subprocess.run([sys.executable, "-c", _SOLVER_SNIPPET], env=env, check=True)


if __name__ == "__main__":
    if kc is None:
        print("compiled kernels not available; timing the numpy backend only\n")
    micro()
    macro()
