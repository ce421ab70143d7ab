"""Multistart global search: run many local solvers from scattered starts and
aggregate every minimum they discover.

Starts come either from a uniform random scatter over the box ("buckshot") or
from the centers of a lattice of cuboids partitioning it.  Starts are
independent, so they may run concurrently through any ordered solver map
without changing the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SuretyError
from .maps import SequentialMap
from .solvers import make_solver
from .termination import AnyOf, ChangeOverGeneration, EvaluationLimit


def buckshot_starts(box, n, seed=0):
    """``n`` i.i.d. uniform points in ``box``, reproducible under ``seed``.

    A degenerate (zero-volume) box yields ``n`` copies of its single point.
    """
    if n < 1:
        raise SuretyError("need at least one start")
    rng = np.random.default_rng(seed)
    return box.sample(rng, n)


def lattice_side_counts(box, n):
    """Cells per axis for a lattice of at least ``n`` cuboids.

    Start from ``ceil(n**(1/d))`` cells on every axis, then repeatedly drop a
    cell from the axis with the shortest box edge (ties broken toward the
    higher axis index, so longer and earlier axes keep the larger factor)
    while the total cell count stays at or above ``n``.
    """
    if n < 1:
        raise SuretyError("need at least one cell")
    d = box.dim
    counts = [max(1, math.ceil(n ** (1.0 / d)))] * d
    edges = box.upper - box.lower
    while True:
        candidates = []
        for i in range(d):
            if counts[i] > 1:
                total = math.prod(counts) // counts[i] * (counts[i] - 1)
                if total >= n:
                    candidates.append(i)
        if not candidates:
            return tuple(counts)
        shrink = min(candidates, key=lambda i: (edges[i], -i))
        counts[shrink] -= 1


def lattice_centers(box, n):
    """The first ``n`` cuboid centers in lexicographic cell order."""
    counts = lattice_side_counts(box, n)
    widths = (box.upper - box.lower) / np.array(counts, dtype=float)
    centers = []
    for flat in range(n):
        idx = []
        rem = flat
        for k in reversed(counts):
            idx.append(rem % k)
            rem //= k
        idx.reverse()
        centers.append(box.lower + (np.array(idx, dtype=float) + 0.5) * widths)
    return centers


@dataclass
class StartResult:
    start: np.ndarray
    solution: np.ndarray | None
    energy: float
    evaluations: int
    error: str | None = None

    @property
    def failed(self):
        return self.error is not None


@dataclass
class MultistartResult:
    best_solution: np.ndarray
    best_energy: float
    results: list[StartResult]
    distinct_minima: list[np.ndarray]
    cluster_radius: float

    @property
    def evaluations(self):
        return sum(r.evaluations for r in self.results)


def cluster_minima(points, energies, radius):
    """Single-linkage clustering at ``radius``; returns the lowest-energy
    representative of each cluster, ordered by energy."""
    pts = [np.asarray(p, dtype=float) for p in points]
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(pts[i] - pts[j]) <= radius:
                parent[find(i)] = find(j)

    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    reps = []
    for members in groups.values():
        best = min(members, key=lambda i: (energies[i], i))
        reps.append((energies[best], best))
    reps.sort()
    return [pts[i] for _, i in reps]


def run_multistart(func, box, n_starts=20, kind="buckshot", inner="powell",
                   inner_params=None, evaluation_limit=None, termination=None,
                   solver_map=None, seed=0, cluster_radius=None):
    """Run ``n_starts`` local solvers and aggregate all discovered minima.

    Each start gets its own solver (algorithm ``inner``) seeded independently
    of the others, clipped to ``box``, and run to ``termination`` (default:
    change-over-generation) plus the optional per-start evaluation limit.
    Starts are distributed through ``solver_map``; per-start failures are
    recorded, not fatal, provided at least one start completes.
    """
    if kind == "buckshot":
        starts = buckshot_starts(box, n_starts, seed)
    elif kind == "lattice":
        starts = lattice_centers(box, n_starts)
    else:
        raise SuretyError(f"unknown multistart kind {kind!r}")

    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n_starts)]
    rule = termination if termination is not None else ChangeOverGeneration()
    if evaluation_limit is not None:
        rule = AnyOf(rule, EvaluationLimit(evaluation_limit))
    params = dict(inner_params or {})
    emap = solver_map if solver_map is not None else SequentialMap()

    def run_one(i):
        solver = make_solver(inner, box.dim, seed=seeds[i], **params)
        pop_size = getattr(solver, "pop_size", 0)
        if pop_size > 1:
            # population algorithms keep the start as member 0 and scatter
            # the rest uniformly in the box
            rest = box.sample(solver.rng, pop_size - 1)
            solver.set_initial_points(np.vstack([starts[i]] + rest))
        else:
            solver.set_initial_points(starts[i])
        solver.set_strict_ranges(box)
        if evaluation_limit is not None:
            solver.set_evaluation_limit(evaluation_limit)
        try:
            solver.solve(func, rule)
        except Exception as exc:
            return StartResult(starts[i], None, np.inf, solver.evaluations, str(exc))
        return StartResult(starts[i], solver.best_solution, solver.best_energy,
                           solver.evaluations)

    results = list(emap(run_one, range(n_starts)))
    finished = [r for r in results if not r.failed]
    if not finished:
        raise SuretyError("every start failed: " + "; ".join(r.error for r in results))

    radius = cluster_radius if cluster_radius is not None else 0.01 * box.diagonal
    minima = cluster_minima([r.solution for r in finished],
                            [r.energy for r in finished], radius)
    best = min(finished, key=lambda r: r.energy)
    return MultistartResult(best.solution.copy(), best.energy, results, minima, radius)
