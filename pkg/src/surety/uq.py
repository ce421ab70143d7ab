"""Certification by concentration of measure, and optimal probability-of-
failure bounds over product measures.

The certification path computes per-input suboscillations of a response
function by global search, combines them into the function diameter, and
applies the bounded-differences tail bound ``exp(-2 M^2 / U^2)`` where ``M``
is the design margin and ``U`` the diameter.  The optimal-bound path
extremizes the probability of failure over product measures with two-point
(or wider) marginals subject to a mean band, using the packed-parameter
layout from :mod:`surety.measures`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Box, CountedFunction, SuretyError
from .maps import SequentialMap
from .measures import (DiracMeasure, ImpositionError, ProductMeasure,
                       impose_expectation, packed_bounds, position_bounds,
                       unpack)
from .solvers import DifferentialEvolutionSolver
from .termination import AnyOf, ChangeOverGeneration, GenerationLimit

#: Energy assigned to candidates whose measure cannot satisfy the mean band.
REJECT_ENERGY = 1e3


@dataclass
class GlobalSearchSpec:
    """Configuration of the inner global maximizer used by the UQ drivers.

    Differential evolution with a dithered weight, restarted ``restarts``
    times keeping the best outcome; spread searches are maximizations where
    underestimation is unsafe, so the restarts hedge against local traps.
    """

    pop_size: int = 40
    weight: tuple = (0.5, 1.0)
    crossover: float = 0.9
    tolerance: float = 1e-8
    window: int = 50
    restarts: int = 3
    max_generations: int = 1000
    seed: int = 0

    def termination(self):
        return AnyOf(ChangeOverGeneration(self.tolerance, self.window),
                     GenerationLimit(self.max_generations))

    def run_seeds(self, stream):
        root = np.random.SeedSequence(self.seed)
        return [int(s.generate_state(1)[0])
                for s in root.spawn(stream + 1)[stream].spawn(self.restarts)]


def _maximize(cost, box, spec, stream=0, witnesses=None):
    """Maximize ``-cost`` over ``box`` with restarts; returns the largest
    value found (>= 0 by construction of the squared-difference costs)."""
    best = -math.inf
    for seed in spec.run_seeds(stream):
        solver = DifferentialEvolutionSolver(
            box.dim, pop_size=spec.pop_size, weight=spec.weight,
            crossover=spec.crossover, seed=seed)
        solver.set_random_initial_points(box)
        solver.set_strict_ranges(box)
        solver.solve(cost, spec.termination())
        best = max(best, -solver.best_energy)
        if witnesses is not None:
            witnesses.extend(
                (p.copy(), -e) for p, e in zip(solver._population, solver._energies))
    return best


def oscillation(model, box, spec=None, witnesses=None):
    """Total spread ``sup |f(y) - f(x)|`` over the box, found by global
    maximization of the squared difference over point pairs."""
    spec = spec or GlobalSearchSpec()
    d = box.dim
    paired = Box(np.concatenate([box.lower, box.lower]),
                 np.concatenate([box.upper, box.upper]))

    def cost(p):
        return -(model(p[:d]) - model(p[d:])) ** 2

    value = _maximize(cost, paired, spec, stream=0, witnesses=witnesses)
    return math.sqrt(max(value, 0.0))


def suboscillation(model, box, index, spec=None, witnesses=None):
    """Largest spread of ``f`` along fibers that vary only ``index``.

    The search space appends the perturbed coordinate to the base point, so
    the problem has dimension ``d + 1`` rather than ``2d``.
    """
    spec = spec or GlobalSearchSpec()
    d = box.dim
    if not 0 <= index < d:
        raise SuretyError(f"coordinate index {index} out of range 0..{d - 1}")
    augmented = Box(np.concatenate([box.lower, [box.lower[index]]]),
                    np.concatenate([box.upper, [box.upper[index]]]))

    def cost(p):
        x = p[:-1]
        x_prime = x.copy()
        x_prime[index] = p[-1]
        return -(model(x) - model(x_prime)) ** 2

    value = _maximize(cost, augmented, spec, stream=index + 1, witnesses=witnesses)
    return math.sqrt(max(value, 0.0))


def diameter(model, box, spec=None, solver_map=None):
    """Per-coordinate suboscillations and their root-mean-square combination.

    The per-coordinate searches are independent and run through
    ``solver_map``.  Also applicable to a difference model ``x -> F(x) - G(x)``
    for a modeling-error diameter.
    """
    spec = spec or GlobalSearchSpec()
    emap = solver_map if solver_map is not None else SequentialMap()
    oscs = list(emap(lambda i: suboscillation(model, box, i, spec), range(box.dim)))
    return oscs, math.sqrt(sum(o * o for o in oscs))


def mcdiarmid_bound(mean, threshold, subdiameters):
    """Tail bound ``exp(-2 M^2 / U^2)`` on the failure probability
    ``P[f <= threshold]`` from the mean performance and subdiameters.

    ``M`` is the positive part of ``mean - threshold`` and ``U`` the
    root-sum-square of the subdiameters.  Returns 1.0 when the margin is
    zero; a zero spread with positive margin has no finite bound expression
    and raises instead of dividing by zero.
    """
    subs = np.asarray(subdiameters, dtype=float)
    if np.any(subs < 0):
        raise SuretyError("subdiameters must be nonnegative")
    margin = max(0.0, float(mean) - float(threshold))
    if margin == 0.0:
        return 1.0
    spread = math.sqrt(float(np.sum(subs * subs)))
    if spread == 0.0:
        raise SuretyError("zero uncertainty with positive margin: the response "
                          "is certain; no tail bound applies")
    return math.exp(-2.0 * margin ** 2 / spread ** 2)


def certification_threshold(pof_tolerance):
    """Smallest confidence factor that certifies at the given tolerance."""
    if not 0.0 < pof_tolerance < 1.0:
        raise SuretyError("the tolerance must lie in (0, 1)")
    return math.sqrt(math.log(math.sqrt(1.0 / pof_tolerance)))


def certify(margin, uncertainty, pof_tolerance):
    """Confidence factor ``M/U`` and whether it certifies the system.

    Certification holds when ``CF >= sqrt(log(sqrt(1/tolerance)))``,
    equivalently when ``exp(-2 CF^2) <= tolerance``; the boundary certifies.
    """
    if uncertainty <= 0.0:
        raise SuretyError("confidence factor undefined for zero uncertainty")
    cf = margin / uncertainty
    return cf, cf >= certification_threshold(pof_tolerance)


@dataclass
class CertificationReport:
    """Everything needed to audit a certification decision."""

    suboscillations: list
    diameter: float
    margin: float
    uncertainty: float
    mcdiarmid_bound: float
    confidence_factor: float  # may be math.inf when the response is certain
    certified: bool
    mean_performance: float
    mean_is_estimate: bool
    threshold: float
    pof_tolerance: float
    evaluations: int

    def as_dict(self):
        cf = self.confidence_factor
        return {
            "suboscillations": [float(o) for o in self.suboscillations],
            "diameter": float(self.diameter),
            "margin": float(self.margin),
            "uncertainty": float(self.uncertainty),
            "mcdiarmid_bound": float(self.mcdiarmid_bound),
            "confidence_factor": "inf" if math.isinf(cf) else float(cf),
            "certified": bool(self.certified),
            "mean_performance": float(self.mean_performance),
            "mean_is_estimate": bool(self.mean_is_estimate),
            "threshold": float(self.threshold),
            "pof_tolerance": float(self.pof_tolerance),
            "evaluations": int(self.evaluations),
        }


def _halton(n, dim):
    """First ``n`` points of the Halton sequence in ``dim`` dimensions."""
    def primes(count):
        out, candidate = [], 2
        while len(out) < count:
            if all(candidate % p for p in out):
                out.append(candidate)
            candidate += 1
        return out

    points = np.empty((n, dim))
    for j, base in enumerate(primes(dim)):
        # radical inverse of 1..n in the given base, digit by digit
        values = np.zeros(n)
        digits = np.arange(1, n + 1)
        scale = 1.0 / base
        while np.any(digits > 0):
            values += scale * (digits % base)
            digits //= base
            scale /= base
        points[:, j] = values
    return points


def estimate_mean(model, box, samples=10000):
    """Quasi-uniform estimate of the mean response over the box."""
    pts = _halton(samples, box.dim)
    scaled = box.lower + pts * (box.upper - box.lower)
    return float(np.mean([model(p) for p in scaled]))


def run_certification(model, box, threshold, pof_tolerance, mean=None,
                      spec=None, solver_map=None, mean_samples=10000):
    """Full certification workflow: diameter by global search, margin from the
    (supplied or estimated) mean, tail bound, and the certification verdict."""
    counted = model if isinstance(model, CountedFunction) else CountedFunction(model, box.dim)
    start = counted.evaluations
    oscs, total = diameter(counted, box, spec=spec, solver_map=solver_map)
    mean_is_estimate = mean is None
    if mean_is_estimate:
        mean = estimate_mean(counted, box, mean_samples)
    margin = max(0.0, float(mean) - float(threshold))
    uncertainty = total
    if uncertainty == 0.0 and margin > 0.0:
        # the response cannot spread below the mean: certainly safe
        bound, cf, certified = 0.0, math.inf, True
    else:
        bound = mcdiarmid_bound(mean, threshold, oscs)
        if margin == 0.0:
            cf, certified = 0.0, False
        else:
            cf, certified = certify(margin, uncertainty, pof_tolerance)
    return CertificationReport(
        suboscillations=oscs, diameter=total, margin=margin,
        uncertainty=uncertainty, mcdiarmid_bound=bound, confidence_factor=cf,
        certified=certified, mean_performance=float(mean),
        mean_is_estimate=mean_is_estimate, threshold=float(threshold),
        pof_tolerance=float(pof_tolerance),
        evaluations=counted.evaluations - start)


# -- optimal bounds over product measures --------------------------------------


@dataclass
class OUQProblem:
    """An extremization of the probability of failure over product measures.

    The feasible set holds the response function fixed, requires unit-mass
    marginals supported in ``box`` with ``npts`` points each, and confines
    the mean response to ``mean_target +- mean_error``.
    """

    model: object
    box: Box
    npts: tuple
    mean_target: float
    mean_error: float
    direction: str = "sup"  # or "inf"
    failure_threshold: float = 0.0
    failure_direction: str = "below"

    def __post_init__(self):
        self.npts = tuple(int(n) for n in self.npts)
        if any(n < 1 for n in self.npts):
            raise SuretyError("every marginal needs at least one support point")
        if len(self.npts) != self.box.dim:
            raise SuretyError("npts must give one support count per box coordinate")
        if self.mean_error <= 0:
            raise SuretyError("mean band error must be positive")
        if self.direction not in ("sup", "inf"):
            raise SuretyError("direction must be 'sup' or 'inf'")

    @property
    def minmax(self):
        return -1.0 if self.direction == "sup" else 1.0

    def packed_box(self):
        return packed_bounds(self.box, self.npts)

    def in_band(self, value):
        return (self.mean_target - self.mean_error <= value
                <= self.mean_target + self.mean_error)


def feasibility_transform(problem, seed=0):
    """Set-based constraint pipeline over packed parameters: rebuild the
    measure, normalize marginal masses, repair the mean band when violated,
    and flatten back.  Candidates whose band cannot be repaired pass through
    unchanged and are rejected by the cost."""

    def transform(params):
        measure = unpack(params, problem.npts, problem.box)
        marginals = []
        for m in measure.marginals:
            if m.mass == 0.0:
                # a fully zeroed weight block carries no information; reset
                # to uniform before normalizing
                m = DiracMeasure(m.positions, np.full(m.npts, 1.0 / m.npts),
                                 m.lower, m.upper)
            elif abs(m.mass - 1.0) > 1e-9:
                m = m.normalized()
            marginals.append(m)
        measure = ProductMeasure(marginals)
        value = measure.expect(problem.model)
        if not problem.in_band(value):
            lows, highs = position_bounds(problem.box, problem.npts)
            try:
                measure = impose_expectation(
                    measure, problem.model, problem.mean_target,
                    problem.mean_error, bounds=(lows, highs), seed=seed)
            except ImpositionError:
                pass  # leave as-is; the cost rejects it
        return measure.pack()

    return transform


def pof_cost(problem):
    """Signed objective over packed parameters: ``minmax * pof``; candidates
    outside the mean band score the rejection energy."""

    def cost(params):
        measure = unpack(params, problem.npts, problem.box)
        try:
            measure = measure.normalized()
        except SuretyError:
            return REJECT_ENERGY
        if not problem.in_band(measure.expect(problem.model)):
            return REJECT_ENERGY
        value = measure.pof(problem.model, problem.failure_threshold,
                            problem.failure_direction)
        return problem.minmax * value

    return cost


def ouq_objective(problem, seed=0):
    """The full packed-parameter objective: feasibility pipeline followed by
    the signed probability of failure.

    Useful for driving a custom solver directly; ``ouq_solve`` attaches the
    same pipeline as a set-based constraint instead, so the witness parameters
    it reports are already feasible.
    """
    transform = feasibility_transform(problem, seed=seed)
    cost = pof_cost(problem)

    def objective(params):
        return cost(transform(params))

    return objective


@dataclass
class OUQResult:
    bound: float
    witness: object
    best_energy: float
    evaluations: int
    direction: str


def ouq_solve(problem, spec=None):
    """Extremize the probability of failure over the reduced measure family.

    Global search over the packed weights and positions with the feasibility
    pipeline attached as a set-based constraint; returns the optimal value
    and the witness measure attaining it.
    """
    spec = spec or GlobalSearchSpec()
    box = problem.packed_box()
    transform = feasibility_transform(problem, seed=spec.seed)
    cost = pof_cost(problem)

    best_energy = math.inf
    best_solution = None
    evaluations = 0
    for seed in spec.run_seeds(0):
        solver = DifferentialEvolutionSolver(
            box.dim, pop_size=spec.pop_size, weight=spec.weight,
            crossover=spec.crossover, seed=seed)
        solver.set_random_initial_points(box)
        solver.set_strict_ranges(box)
        solver.set_constraints(transform)
        solver.solve(cost, spec.termination())
        evaluations += solver.evaluations
        if solver.best_energy < best_energy:
            best_energy = solver.best_energy
            best_solution = solver.best_solution
    if best_solution is None or best_energy >= REJECT_ENERGY:
        raise SuretyError("no feasible measure found for the mean band")
    witness = unpack(best_solution, problem.npts, problem.box).normalized()
    bound = -best_energy if problem.direction == "sup" else best_energy
    return OUQResult(bound=float(bound), witness=witness,
                     best_energy=float(best_energy), evaluations=evaluations,
                     direction=problem.direction)
