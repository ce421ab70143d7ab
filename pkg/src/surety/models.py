"""Built-in test models.

All models accept a 1-D sequence of floats and return a scalar.  The set is
chosen so that every shipped study and test can run without external data.
"""

from __future__ import annotations

import numpy as np

from .core import SuretyError


def rosenbrock(x):
    """Banana-valley benchmark; global minimum 0 at the all-ones point."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise SuretyError("rosenbrock needs at least 2 parameters")
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def sphere(x):
    """Sum of squares; global minimum 0 at the origin."""
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * x))


def doublewell(x):
    """Separable double well ``sum((x_i^2 - 1)^2)`` with minima at +-1."""
    x = np.asarray(x, dtype=float)
    return float(np.sum((x * x - 1.0) ** 2))


def linear(x):
    """Sum of coordinates; the identity map in one dimension."""
    return float(np.sum(np.asarray(x, dtype=float)))


def peak(x):
    """Lorentzian-style bump centered at the origin, height 1, unit width."""
    x = np.asarray(x, dtype=float)
    return float(1.0 / (1.0 + np.sum(x * x)))


MODELS = {
    "rosenbrock": rosenbrock,
    "sphere": sphere,
    "doublewell": doublewell,
    "linear": linear,
    "peak": peak,
}


def get_model(name):
    try:
        return MODELS[name]
    except KeyError:
        raise SuretyError(
            f"unknown model {name!r}; available: {', '.join(sorted(MODELS))}") from None
