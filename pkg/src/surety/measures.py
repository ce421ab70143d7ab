"""Discrete measures: weighted point masses, their products, and the packed
parameter layout that lets a solver optimize over them.

Packed layout, per marginal in order: the weights block then the positions
block, i.e. ``[w_1..w_k, p_1..p_k]`` for a k-point marginal, marginals
concatenated.  ``unpack(pack(m)) == m`` exactly for well-formed layouts.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import Box, DimensionMismatch, SuretyError, as_point
from .solvers import NelderMeadSolver

MASS_TOL = 1e-9


class ImpositionError(SuretyError):
    """A measure constraint (e.g. a target expectation) could not be imposed;
    carries the best residual reached."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class DiracMeasure:
    """A one-dimensional discrete measure: support positions with nonnegative
    weights, optionally confined to a domain interval."""

    def __init__(self, positions, weights, lower=None, upper=None):
        self.positions = as_point(positions)
        self.weights = as_point(weights)
        if self.positions.size != self.weights.size:
            raise DimensionMismatch("positions and weights differ in length")
        if self.positions.size == 0:
            raise SuretyError("a measure needs at least one support point")
        if np.any(self.weights < 0):
            raise SuretyError("weights must be nonnegative")
        self.lower = None if lower is None else float(lower)
        self.upper = None if upper is None else float(upper)
        if self.lower is not None and self.upper is not None:
            if np.any(self.positions < self.lower) or np.any(self.positions > self.upper):
                raise SuretyError("support positions outside the domain interval")

    @property
    def npts(self):
        return int(self.positions.size)

    @property
    def mass(self):
        return float(np.sum(self.weights))

    @property
    def mean(self):
        m = self.mass
        if m == 0.0:
            raise SuretyError("mean of a zero-mass measure is undefined")
        return float(np.sum(self.weights * self.positions) / m)

    @property
    def spread(self):
        return float(np.max(self.positions) - np.min(self.positions))

    def normalized(self):
        """Rescale weights to unit mass; positions unchanged."""
        m = self.mass
        if m == 0.0:
            raise SuretyError("cannot normalize a zero-mass measure")
        return DiracMeasure(self.positions, self.weights / m, self.lower, self.upper)

    def with_positions(self, positions):
        return DiracMeasure(positions, self.weights, self.lower, self.upper)

    def __eq__(self, other):
        return (isinstance(other, DiracMeasure)
                and np.array_equal(self.positions, other.positions)
                and np.array_equal(self.weights, other.weights))

    def __repr__(self):
        pts = ", ".join(f"({p}, {w})" for p, w in zip(self.positions, self.weights))
        return f"DiracMeasure[{pts}]"


def mean_and_range(measure):
    """Weighted mean and support spread of a discrete measure."""
    return measure.mean, measure.spread


class ProductMeasure:
    """An ordered tensor product of one-dimensional discrete measures."""

    def __init__(self, marginals):
        self.marginals = tuple(marginals)
        if not self.marginals:
            raise SuretyError("a product measure needs at least one marginal")

    @property
    def dim(self):
        return len(self.marginals)

    @property
    def npts(self):
        return tuple(m.npts for m in self.marginals)

    @property
    def mass(self):
        return float(np.prod([m.mass for m in self.marginals]))

    def normalized(self):
        return ProductMeasure([m.normalized() for m in self.marginals])

    def _require_normalized(self):
        for i, m in enumerate(self.marginals):
            if abs(m.mass - 1.0) > MASS_TOL:
                raise SuretyError(
                    f"marginal {i} has mass {m.mass!r}; normalize before "
                    "computing expectations")

    def support(self):
        """Iterate ``(point, weight)`` over the full Cartesian product."""
        position_axes = [m.positions for m in self.marginals]
        weight_axes = [m.weights for m in self.marginals]
        for combo in itertools.product(*(range(m.npts) for m in self.marginals)):
            point = np.array([position_axes[i][j] for i, j in enumerate(combo)])
            weight = float(np.prod([weight_axes[i][j] for i, j in enumerate(combo)]))
            yield point, weight

    def expect(self, func):
        """Exact finite-sum expectation of ``func`` under the product measure."""
        self._require_normalized()
        return float(sum(w * func(p) for p, w in self.support()))

    def pof(self, func, threshold=0.0, failure="below"):
        """Probability mass of the failure event.

        ``failure='below'`` counts support combinations with
        ``func(point) <= threshold``; ``'above'`` counts
        ``func(point) >= threshold``.  Ties count as failure.
        """
        if failure not in ("below", "above"):
            raise SuretyError(f"failure direction must be 'below' or 'above', got {failure!r}")
        self._require_normalized()
        total = 0.0
        for p, w in self.support():
            y = func(p)
            if (y <= threshold) if failure == "below" else (y >= threshold):
                total += w
        return float(total)

    def pack(self):
        """Flatten to the packed parameter layout."""
        blocks = []
        for m in self.marginals:
            blocks.append(m.weights)
            blocks.append(m.positions)
        return np.concatenate(blocks)

    def __eq__(self, other):
        return (isinstance(other, ProductMeasure)
                and self.npts == other.npts
                and all(a == b for a, b in zip(self.marginals, other.marginals)))

    def __repr__(self):
        return "ProductMeasure(%s)" % ", ".join(map(repr, self.marginals))


def packed_length(npts):
    return 2 * int(sum(npts))


def unpack(params, npts, box=None):
    """Rebuild a product measure from packed parameters.

    When ``box`` is given (one interval per marginal), positions are clipped
    into it and negative weights floored at zero before any further constraint
    handling.
    """
    params = as_point(params)
    if params.size != packed_length(npts):
        raise DimensionMismatch(
            f"packed layout for npts={tuple(npts)} needs {packed_length(npts)} "
            f"parameters, got {params.size}")
    if box is not None and box.dim != len(npts):
        raise DimensionMismatch("box dimension must match the number of marginals")
    marginals = []
    offset = 0
    for i, n in enumerate(npts):
        weights = params[offset:offset + n]
        positions = params[offset + n:offset + 2 * n]
        offset += 2 * n
        lower = upper = None
        if box is not None:
            lower, upper = float(box.lower[i]), float(box.upper[i])
            positions = np.clip(positions, lower, upper)
        weights = np.maximum(weights, 0.0)
        marginals.append(DiracMeasure(positions, weights, lower, upper))
    return ProductMeasure(marginals)


def position_bounds(box, npts):
    """Lower/upper bounds for the concatenated position blocks."""
    lows, highs = [], []
    for i, n in enumerate(npts):
        lows.extend([float(box.lower[i])] * n)
        highs.extend([float(box.upper[i])] * n)
    return np.array(lows), np.array(highs)


def packed_bounds(box, npts, weight_low=0.0, weight_high=1.0):
    """A Box over the full packed layout: weights in [0, 1], positions in the
    per-marginal interval."""
    lows, highs = [], []
    for i, n in enumerate(npts):
        lows.extend([weight_low] * n)
        highs.extend([weight_high] * n)
        lows.extend([float(box.lower[i])] * n)
        highs.extend([float(box.upper[i])] * n)
    return Box(lows, highs)


def _with_concatenated_positions(measure, positions):
    marginals = []
    offset = 0
    for m in measure.marginals:
        marginals.append(m.with_positions(positions[offset:offset + m.npts]))
        offset += m.npts
    return ProductMeasure(marginals)


def impose_expectation(measure, func, target, error, bounds=None, seed=0,
                       max_restarts=20):
    """Adjust support positions (weights fixed) until the expectation of
    ``func`` lies within ``error`` of ``target``.

    No-op when the expectation is already inside the band.  ``bounds`` is a
    ``(lower, upper)`` pair over the concatenated positions (defaults to the
    marginals' own domains when available).  Raises ``ImpositionError`` with
    the best residual when the target is unreachable.
    """
    if error <= 0:
        raise SuretyError("error band must be positive")
    current = measure.expect(func)
    if abs(current - target) <= error:
        return measure

    p0 = np.concatenate([m.positions for m in measure.marginals])
    if bounds is not None:
        lower, upper = as_point(bounds[0], p0.size), as_point(bounds[1], p0.size)
    else:
        lows, highs = [], []
        for m in measure.marginals:
            lows.extend([m.lower if m.lower is not None else -np.inf] * m.npts)
            highs.extend([m.upper if m.upper is not None else np.inf] * m.npts)
        lower, upper = np.array(lows), np.array(highs)
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            lower = upper = None

    def mismatch(positions):
        return (_with_concatenated_positions(measure, positions).expect(func)
                - target) ** 2

    tolerance = (0.9 * error) ** 2
    rng = np.random.default_rng(seed)
    best_residual = np.inf
    starts = [p0]
    if lower is not None:
        starts += [lower + rng.random(p0.size) * (upper - lower)
                   for _ in range(max_restarts)]
    for start in starts:
        solver = NelderMeadSolver(p0.size)
        if lower is not None:
            solver.set_strict_ranges(lower, upper)
        solver.set_initial_points(start)
        cap = 200 * p0.size
        solver._initialize(mismatch)
        for _ in range(cap):
            if solver.best_energy <= tolerance:
                break
            solver.step(mismatch)
        candidate = _with_concatenated_positions(measure, solver.best_solution)
        achieved = candidate.expect(func)
        if abs(achieved - target) <= error:
            return candidate
        best_residual = min(best_residual, abs(achieved - target))
    raise ImpositionError(
        f"could not impose expectation {target!r} within {error!r}", best_residual)
