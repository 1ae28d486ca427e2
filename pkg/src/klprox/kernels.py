"""Kernel backend selection.

Prefers the compiled extension (``klprox._kernels_c``) and falls back to the
numpy implementation when it is not built. Set ``KLPROX_BACKEND=python`` or
``KLPROX_BACKEND=compiled`` to force a backend; forcing ``compiled`` raises
if the extension is unavailable.
"""

import os

_choice = os.environ.get("KLPROX_BACKEND", "auto").strip().lower()

if _choice in ("auto", ""):
    try:
        from klprox import _kernels_c as _impl

        BACKEND = "compiled"
    except ImportError:
        from klprox import _kernels_np as _impl

        BACKEND = "python"
elif _choice in ("compiled", "c"):
    from klprox import _kernels_c as _impl

    BACKEND = "compiled"
elif _choice in ("python", "numpy", "py"):
    from klprox import _kernels_np as _impl

    BACKEND = "python"
else:
    raise ValueError(
        f"KLPROX_BACKEND={_choice!r} not understood; use 'auto', 'compiled' or 'python'"
    )

soft_threshold = _impl.soft_threshold
soft_threshold_per_element = _impl.soft_threshold_per_element
scad_penalty = _impl.scad_penalty
mcp_penalty = _impl.mcp_penalty
scad_prox = _impl.scad_prox
mcp_prox = _impl.mcp_prox
scad_derivative = _impl.scad_derivative
mcp_derivative = _impl.mcp_derivative

__all__ = [
    "BACKEND",
    "soft_threshold",
    "soft_threshold_per_element",
    "scad_penalty",
    "mcp_penalty",
    "scad_prox",
    "mcp_prox",
    "scad_derivative",
    "mcp_derivative",
]
