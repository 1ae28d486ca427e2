"""Moreau envelope of a convex base function with an exact prox.

The envelope inf_y { f(y) + ||y - x||^2 / (2 lam) } is evaluated through the
base prox, and its gradient is exactly (x - prox_{lam f}(x)) / lam. Bases
are restricted to objects exposing an exact prox (catalog members, or any
duck-typed convex function with ``value``/``prox``/``is_convex``); envelopes
of nonconvex bases are rejected.
"""

import numpy as np

from .core import CompositeObjective, ConfigurationError
from .losses import ZeroLoss


class MoreauEnvelope:
    def __init__(self, base, lam):
        if isinstance(base, CompositeObjective):
            if not isinstance(base.smooth, ZeroLoss):
                raise ConfigurationError("composite bases must have a zero smooth part")
            base = base.reg
        if not getattr(base, "is_convex", False):
            raise ConfigurationError("Moreau envelope requires a convex base")
        if lam <= 0:
            raise ConfigurationError("smoothing parameter lam must be positive")
        self.base = base
        self.lam = float(lam)

    def prox_point(self, x):
        """prox_{lam * base}(x); the minimizing y of the envelope infimum."""
        return self.base.prox(np.asarray(x, dtype=np.float64), self.lam)

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        p = self.prox_point(x)
        return float(self.base.value(p) + np.sum((p - x) ** 2) / (2.0 * self.lam))

    def gradient(self, x):
        x = np.asarray(x, dtype=np.float64)
        return (x - self.prox_point(x)) / self.lam

    def gradient_norm(self, x):
        return float(np.linalg.norm(self.gradient(x)))

    def __repr__(self):
        return f"MoreauEnvelope(base={self.base!r}, lam={self.lam})"
