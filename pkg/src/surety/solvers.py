"""Derivative-free minimizers behind one configurable solver contract.

All solvers share the same lifecycle: construct with a dimension and seed,
configure (initial points, strict ranges, constraints, penalty, monitors,
evaluation map, evaluation limit), then ``solve(func, termination)`` --
possibly repeatedly, resuming from the current state.

Candidate pipeline, applied to every trial point before evaluation:
constraint transform first, then clipping to strict ranges, then the
penalty-augmented objective.  All randomness lives in the coordinator, so a
fixed seed gives bit-identical runs for any evaluation map.
"""

from __future__ import annotations

import logging

import numpy as np

from .core import (Box, InfeasiblePoint, SuretyError, as_point, clip_to_box,
                   total_energy)
from .maps import SequentialMap
from .termination import ChangeOverGeneration

log = logging.getLogger(__name__)

GOLDEN = 1.618033988749895
INVGOLDEN = 0.6180339887498949


class Solver:
    """Common state and configuration for the concrete algorithms."""

    algorithm = "base"

    def __init__(self, dim, seed=0):
        if dim < 1:
            raise SuretyError("dimension must be a positive integer")
        self.dim = int(dim)
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        self.generations = 0
        self.evaluations = 0
        self.best_energy = np.inf
        self._best = None
        self._raw_points = None
        self._population = None
        self._energies = None
        self._initialized = False
        self._strict = None
        self._transform = None
        self._penalty = None
        self._gen_monitor = None
        self._eval_monitor = None
        self._map = SequentialMap()
        self._eval_limit = None
        self._history = []
        self._clip_conflict_logged = False

    # -- configuration ----------------------------------------------------

    def set_initial_points(self, points):
        """Seed the solver from one point or a full population.

        Configuring never evaluates the objective: the points are validated
        now but only prepared (transformed, clipped) and scored on the first
        step, so attachment order does not matter.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        self._validate_points(pts)
        self._raw_points = pts
        self._population = None
        self._energies = None
        self._initialized = False

    def set_random_initial_points(self, lower, upper=None):
        """Draw the initial population i.i.d. uniform in a box, reproducibly
        under the construction seed."""
        box = lower if isinstance(lower, Box) else Box(lower, upper)
        if box.dim != self.dim:
            raise SuretyError(f"box dimension {box.dim} != solver dimension {self.dim}")
        self.set_initial_points(np.vstack(box.sample(self.rng, self._population_size())))

    def set_strict_ranges(self, lower, upper=None):
        box = lower if isinstance(lower, Box) else Box(lower, upper)
        if box.dim != self.dim:
            raise SuretyError(f"box dimension {box.dim} != solver dimension {self.dim}")
        self._strict = box

    def set_constraints(self, transform):
        """Attach a set-based constraint transform ``x' = c(x)``.

        Accepts any callable, including a compiled ``ConstraintProgram``
        transform; applied to every trial point before evaluation.
        """
        if transform is not None and not callable(transform):
            transform = transform.transform  # duck-type ConstraintProgram
        self._transform = transform

    def set_penalty(self, penalty):
        """Attach an additive penalty ``dE(x)`` to the evaluated energy."""
        self._penalty = penalty

    def set_generation_monitor(self, monitor):
        self._gen_monitor = monitor

    def set_evaluation_monitor(self, monitor):
        self._eval_monitor = monitor

    def set_evaluation_map(self, emap):
        self._map = emap if emap is not None else SequentialMap()

    def set_evaluation_limit(self, limit):
        if limit is not None and limit < 1:
            raise SuretyError("evaluation limit must be >= 1")
        self._eval_limit = None if limit is None else int(limit)

    # -- results -----------------------------------------------------------

    @property
    def best_solution(self):
        if self._best is None:
            raise SuretyError("solver has not evaluated any point yet")
        return self._best.copy()

    @property
    def energy_history(self):
        return list(self._history)

    # -- candidate pipeline -------------------------------------------------

    def _prepare(self, x):
        p = np.asarray(x, dtype=float)
        if self._transform is not None:
            p = np.asarray(self._transform(p), dtype=float)
        if self._strict is not None:
            clipped = clip_to_box(p, self._strict)
            if (self._transform is not None and not self._clip_conflict_logged
                    and np.max(np.abs(clipped - p)) > 1e-12):
                # clipping un-does part of the constraint transform; the
                # evaluated point may no longer satisfy the constraints
                log.warning("strict ranges conflict with the constraint "
                            "transform: clipped %s to %s", p.tolist(),
                            clipped.tolist())
                self._clip_conflict_logged = True
            p = clipped
        return p

    def _evaluate(self, func, candidates):
        """Evaluate prepared candidates through the attached map, in order.

        Counts evaluations, applies the penalty term, replaces non-finite
        values by a finite sentinel, and records the evaluation monitor in
        candidate order so logs are identical for every map strategy.
        """
        raw = self._map(func, candidates)
        energies = []
        for x, y in zip(candidates, raw):
            e, flagged = total_energy(y)
            if self._penalty is not None:
                try:
                    e2, f2 = total_energy(e + self._penalty(x))
                except InfeasiblePoint:
                    e2, f2 = total_energy(np.inf)
                e, flagged = e2, flagged or f2
            if self._eval_monitor is not None:
                idx = self._eval_monitor.last_index
                self._eval_monitor.record(0 if idx is None else idx + 1, x, e, flagged)
            self.evaluations += 1
            energies.append(e)
        return energies

    # -- lifecycle -----------------------------------------------------------

    def _population_size(self):
        raise NotImplementedError

    def _validate_points(self, pts):
        raise NotImplementedError

    def _build_population(self, points):
        raise NotImplementedError

    def _step_impl(self, func):
        raise NotImplementedError

    def _initialize(self, func):
        if self._initialized:
            return
        if self._raw_points is None:
            raise SuretyError("solver is not configured with initial points")
        self._population = self._build_population(self._raw_points)
        self._energies = self._evaluate(func, self._population)
        self._update_best()
        self._history.append(self.best_energy)
        if self._gen_monitor is not None:
            self._gen_monitor.record(self.generations, self._best, self.best_energy)
        self._initialized = True

    def _update_best(self):
        i = int(np.argmin(self._energies))
        if self._energies[i] <= self.best_energy:
            self.best_energy = self._energies[i]
            self._best = self._population[i].copy()

    def step(self, func):
        """Advance one generation; best energy never increases."""
        self._initialize(func)
        self._step_impl(func)
        self.generations += 1
        self._update_best()
        self._history.append(self.best_energy)
        if self._gen_monitor is not None:
            self._gen_monitor.record(self.generations, self._best, self.best_energy)

    def solve(self, func, termination=None):
        """Step until the termination rule fires; callable again to resume."""
        rule = termination if termination is not None else ChangeOverGeneration()
        self._initialize(func)
        while True:
            if self._eval_limit is not None and self.evaluations >= self._eval_limit:
                break
            if rule(self._history, self.evaluations, self.generations):
                break
            self.step(func)
        return self


class NelderMeadSolver(Solver):
    """Downhill simplex with standard reflect/expand/contract/shrink moves
    (coefficients 1, 2, 0.5, 0.5)."""

    algorithm = "nelder-mead"

    # Perturbation sizes for building a simplex around a single start point.
    nonzero_delta = 0.05
    zero_delta = 0.00025

    def _population_size(self):
        return self.dim + 1

    def _validate_points(self, pts):
        if pts.shape not in ((1, self.dim), (self.dim + 1, self.dim)):
            raise SuretyError(
                f"need one start point or a full simplex of {self.dim + 1} "
                f"points, got shape {pts.shape}")

    def _build_population(self, points):
        if points.shape == (1, self.dim):
            return self._simplex_around(as_point(points[0], self.dim))
        return [self._prepare(as_point(p, self.dim)) for p in points]

    def _simplex_around(self, x0):
        base = self._prepare(x0)
        simplex = [base]
        for k in range(self.dim):
            vertex = self._distinct_vertex(base, k, simplex)
            simplex.append(vertex)
        return simplex

    def _distinct_vertex(self, base, k, existing):
        # A constraint transform can collapse the usual coordinate
        # perturbation back onto an existing vertex; walk the other
        # coordinates until the vertex is distinct.
        candidate = None
        for j in range(self.dim):
            c = (k + j) % self.dim
            v = base.copy()
            v[c] = v[c] * (1.0 + self.nonzero_delta) if v[c] != 0.0 else self.zero_delta
            v = self._prepare(v)
            candidate = v
            if all(np.max(np.abs(v - u)) > 1e-12 for u in existing):
                return v
        return candidate

    def _step_impl(self, func):
        order = np.argsort(self._energies, kind="stable")
        sim = [self._population[i] for i in order]
        fsim = [self._energies[i] for i in order]
        n = self.dim

        centroid = np.mean(sim[:-1], axis=0)
        xr = self._prepare(centroid + (centroid - sim[-1]))
        fr = self._evaluate(func, [xr])[0]

        if fr < fsim[0]:
            xe = self._prepare(centroid + 2.0 * (centroid - sim[-1]))
            fe = self._evaluate(func, [xe])[0]
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
        else:
            shrink = False
            if fr < fsim[-1]:
                xc = self._prepare(centroid + 0.5 * (centroid - sim[-1]))
                fc = self._evaluate(func, [xc])[0]
                if fc <= fr:
                    sim[-1], fsim[-1] = xc, fc
                else:
                    shrink = True
            else:
                xcc = self._prepare(centroid - 0.5 * (centroid - sim[-1]))
                fcc = self._evaluate(func, [xcc])[0]
                if fcc < fsim[-1]:
                    sim[-1], fsim[-1] = xcc, fcc
                else:
                    shrink = True
            if shrink:
                shrunk = [self._prepare(sim[0] + 0.5 * (sim[j] - sim[0]))
                          for j in range(1, n + 1)]
                fshrunk = self._evaluate(func, shrunk)
                sim[1:] = shrunk
                fsim[1:] = fshrunk

        self._population = sim
        self._energies = fsim


class PowellSolver(Solver):
    """Powell's direction-set method with a bracketing + golden-section line
    search (bracket grown geometrically from step 0.1, tolerance 1e-8)."""

    algorithm = "powell"

    line_step = 0.1
    line_tol = 1e-8
    max_bracket_growth = 80

    def __init__(self, dim, seed=0):
        super().__init__(dim, seed)
        self._directions = None
        self.bracket_failures = 0

    def _population_size(self):
        return 1

    def _validate_points(self, pts):
        if pts.shape != (1, self.dim):
            raise SuretyError(f"need a single start point of dimension {self.dim}, "
                              f"got shape {pts.shape}")

    def _build_population(self, points):
        self._directions = [np.eye(self.dim)[i] for i in range(self.dim)]
        return [self._prepare(as_point(points[0], self.dim))]

    def _line_value(self, func, x, direction, alpha):
        cand = self._prepare(x + alpha * direction)
        return self._evaluate(func, [cand])[0], cand

    def _line_minimize(self, func, x, f0, direction):
        """Golden-section minimization of ``alpha -> f(x + alpha*d)``.

        Returns ``(fmin, xmin, moved)``.  A failed bracket is treated as a
        zero step and counted in ``bracket_failures``.
        """
        cache = {0.0: (f0, x)}

        def g(alpha):
            if alpha not in cache:
                cache[alpha] = self._line_value(func, x, direction, alpha)
            return cache[alpha][0]

        bracket = self._bracket(g)
        if bracket is None:
            self.bracket_failures += 1
            return f0, x, False
        lo, hi = bracket
        a, b = lo, hi
        c = b - INVGOLDEN * (b - a)
        d = a + INVGOLDEN * (b - a)
        while abs(b - a) > self.line_tol:
            if g(c) < g(d):
                b, d = d, c
                c = b - INVGOLDEN * (b - a)
            else:
                a, c = c, d
                d = a + INVGOLDEN * (b - a)
        alpha = min(cache, key=lambda k: cache[k][0])
        fbest, xbest = cache[alpha]
        if fbest < f0:
            return fbest, xbest, True
        return f0, x, False

    def _bracket(self, g):
        """Grow the probe interval geometrically from step ``line_step`` until
        the far value stops decreasing; returns an interval containing a
        minimizer, or None when the descent never turns (bracket failure)."""
        step = self.line_step
        f0 = g(0.0)
        for sign in (1.0, -1.0):
            a, fa = 0.0, f0
            b = sign * step
            fb = g(b)
            if fb > fa:
                continue
            for _ in range(self.max_bracket_growth):
                c = b + GOLDEN * (b - a)
                fc = g(c)
                if fc >= fb:
                    return (min(a, c), max(a, c))
                a, fa, b, fb = b, fb, c, fc
            return None
        # both probe directions rise: the minimizer is within one step
        return (-step, step)

    def _step_impl(self, func):
        x = self._population[0]
        fx = self._energies[0]
        x_start, f_start = x.copy(), fx
        biggest_drop, big_index = 0.0, 0

        for i, direction in enumerate(self._directions):
            f_before = fx
            fx, x, _ = self._line_minimize(func, x, fx, direction)
            if f_before - fx > biggest_drop:
                biggest_drop = f_before - fx
                big_index = i

        # Powell's replacement rule: drop the direction of largest decrease
        # in favor of the overall displacement when the extrapolated point
        # keeps descending.
        new_dir = x - x_start
        if np.any(new_dir != 0.0):
            extrapolated = self._prepare(x_start + 2.0 * new_dir)
            fe = self._evaluate(func, [extrapolated])[0]
            if fe < f_start:
                t = 2.0 * (f_start + fe - 2.0 * fx)
                t *= (f_start - fx - biggest_drop) ** 2
                t -= biggest_drop * (f_start - fe) ** 2
                if t < 0.0:
                    fx, x, moved = self._line_minimize(func, x, fx, new_dir)
                    if moved:
                        self._directions[big_index] = self._directions[-1]
                        self._directions[-1] = new_dir / np.linalg.norm(new_dir)

        self._population = [x]
        self._energies = [fx]


class DifferentialEvolutionSolver(Solver):
    """Differential evolution with binomial crossover and greedy selection.

    ``variant`` selects the mutation base: ``best/1/bin`` (default) mutates
    around the current best member, ``rand/1/bin`` around a random one.  The
    differential ``weight`` may be a float or a ``(low, high)`` range dithered
    per generation.  Each generation builds every trial in the coordinator (so
    runs are reproducible under any evaluation map) and scores the batch
    through the attached map.
    """

    algorithm = "differential-evolution"

    def __init__(self, dim, pop_size=20, weight=0.8, crossover=0.9,
                 variant="best/1/bin", seed=0):
        super().__init__(dim, seed)
        if pop_size < 4:
            raise SuretyError("population size must be >= 4")
        lo, hi = (weight, weight) if np.isscalar(weight) else weight
        if not (0.0 < lo <= hi <= 2.0):
            raise SuretyError("differential weight must be in (0, 2]")
        if not 0.0 <= crossover <= 1.0:
            raise SuretyError("crossover rate must be in [0, 1]")
        if variant not in ("best/1/bin", "rand/1/bin"):
            raise SuretyError(f"unknown variant {variant!r}")
        self.pop_size = int(pop_size)
        self.weight = (float(lo), float(hi))
        self.crossover = float(crossover)
        self.variant = variant

    def _population_size(self):
        return self.pop_size

    def _validate_points(self, pts):
        if pts.shape != (self.pop_size, self.dim):
            raise SuretyError(
                f"need {self.pop_size} points of dimension {self.dim}, "
                f"got shape {pts.shape}")

    def _build_population(self, points):
        return [self._prepare(as_point(p, self.dim)) for p in points]

    def _draw_distinct(self, count, forbidden):
        out = []
        while len(out) < count:
            r = int(self.rng.integers(self.pop_size))
            if r != forbidden and r not in out:
                out.append(r)
        return out

    def _step_impl(self, func):
        pop = self._population
        energies = self._energies
        best = pop[int(np.argmin(energies))]
        lo, hi = self.weight
        weight = lo if lo == hi else lo + (hi - lo) * float(self.rng.random())
        trials = []
        for i in range(self.pop_size):
            if self.variant == "best/1/bin":
                r1, r2 = self._draw_distinct(2, i)
                mutant = best + weight * (pop[r1] - pop[r2])
            else:
                r0, r1, r2 = self._draw_distinct(3, i)
                mutant = pop[r0] + weight * (pop[r1] - pop[r2])
            cross = self.rng.random(self.dim) < self.crossover
            cross[int(self.rng.integers(self.dim))] = True
            trial = np.where(cross, mutant, pop[i])
            trials.append(self._prepare(trial))
        trial_energies = self._evaluate(func, trials)
        for i in range(self.pop_size):
            if trial_energies[i] < energies[i]:
                pop[i] = trials[i]
                energies[i] = trial_energies[i]


ALGORITHMS = {
    "nelder-mead": NelderMeadSolver,
    "powell": PowellSolver,
    "differential-evolution": DifferentialEvolutionSolver,
}


def make_solver(algorithm, dim, seed=0, **params):
    try:
        cls = ALGORITHMS[algorithm]
    except KeyError:
        raise SuretyError(
            f"unknown algorithm {algorithm!r}; "
            f"available: {', '.join(sorted(ALGORITHMS))}") from None
    return cls(dim, seed=seed, **params)
