"""Shared numerical primitives: points, boxes, and counted objective functions."""

from __future__ import annotations

import threading

import numpy as np

#: Largest finite float, used as a total-ordering stand-in for non-finite energies.
HUGE = float(np.finfo(float).max)


class SuretyError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(SuretyError):
    """A vector's length disagrees with the expected dimension."""


class NotFiniteError(SuretyError):
    """A NaN or infinity reached an API boundary that requires finite values."""


class EvaluationError(SuretyError):
    """An objective function could not be evaluated."""


class InfeasiblePoint(SuretyError):
    """A penalty term (e.g. a log barrier) is undefined at the requested
    point; solvers reject such candidates."""


def as_point(x, dim=None):
    """Validate and convert ``x`` to a 1-D float array of finite entries.

    Raises ``DimensionMismatch`` if ``dim`` is given and disagrees, and
    ``NotFiniteError`` for NaN/infinite entries.
    """
    p = np.asarray(x, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D parameter vector, got shape {p.shape}")
    if dim is not None and p.size != dim:
        raise DimensionMismatch(f"expected {dim} parameters, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise NotFiniteError(f"parameter vector contains non-finite entries: {p.tolist()}")
    return p


class Box:
    """An axis-aligned rectangle ``[lower_i, upper_i]`` in parameter space."""

    def __init__(self, lower, upper):
        self.lower = as_point(lower)
        self.upper = as_point(upper)
        if self.lower.size != self.upper.size:
            raise DimensionMismatch("box bounds have different lengths")
        if np.any(self.lower > self.upper):
            raise SuretyError("box has lower > upper in some coordinate")

    @property
    def dim(self):
        return int(self.lower.size)

    @property
    def diagonal(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, x, tol=0.0):
        p = as_point(x, self.dim)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def clip(self, x):
        p = as_point(x, self.dim)
        return np.minimum(np.maximum(p, self.lower), self.upper)

    def sample(self, rng, n=1):
        """Draw ``n`` i.i.d. uniform points; degenerate boxes yield copies."""
        return [self.lower + rng.random(self.dim) * (self.upper - self.lower)
                for _ in range(n)]

    def center(self):
        return 0.5 * (self.lower + self.upper)

    def __repr__(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"

    def __eq__(self, other):
        return (isinstance(other, Box)
                and np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper))


def clip_to_box(x, box):
    """Componentwise clamp of ``x`` into ``box``. Idempotent."""
    return box.clip(x)


class CountedFunction:
    """A scalar objective with a thread-safe evaluation counter.

    Wraps ``func`` (sequence -> float) and checks each input for the correct
    arity and finiteness before forwarding.  The counter increases by exactly
    one per call, also under concurrent evaluation.
    """

    def __init__(self, func, arity):
        if arity < 1:
            raise SuretyError("arity must be a positive integer")
        self.func = func
        self.arity = int(arity)
        self._count = 0
        self._lock = threading.Lock()

    @property
    def evaluations(self):
        return self._count

    def reset(self):
        with self._lock:
            self._count = 0

    def __call__(self, x):
        p = as_point(x, self.arity)
        with self._lock:
            self._count += 1
        return float(self.func(p))


def total_energy(value):
    """Map a raw objective value to a finite energy.

    Returns ``(energy, flagged)`` where non-finite values are replaced by the
    largest finite float so that comparisons stay total, and ``flagged`` marks
    the replacement.
    """
    v = float(value)
    if np.isfinite(v):
        return v, False
    return HUGE, True
