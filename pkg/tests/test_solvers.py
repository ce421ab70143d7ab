import numpy as np
import pytest

from surety.core import Box, CountedFunction, SuretyError
from surety.maps import CarddealerMap, PoolMap, SequentialMap
from surety.models import rosenbrock, sphere
from surety.monitors import Monitor, format_row
from surety.solvers import (DifferentialEvolutionSolver, NelderMeadSolver,
                            PowellSolver, make_solver)
from surety.termination import ChangeOverGeneration, GenerationLimit


def quadratic_shifted(x):
    x = np.asarray(x, dtype=float)
    return float(np.sum((x - np.arange(1, x.size + 1)) ** 2))


class TestNelderMead:
    def test_configuring_never_evaluates(self):
        f = CountedFunction(rosenbrock, 3)
        s = NelderMeadSolver(3)
        s.set_initial_points([0.8, 1.2, 0.7])
        s.set_strict_ranges([0.0] * 3, [2.0] * 3)
        assert f.evaluations == 0

    def test_first_step_decreases_on_sphere(self):
        # hand simulation: reflecting [3, .1, .1] through the centroid of the
        # other vertices lands near the origin and beats the best vertex
        simplex = np.array([[1.0, 0.0, 0.0], [2.0, 0.1, 0.0],
                            [2.0, 0.0, 0.1], [3.0, 0.1, 0.1]])
        s = NelderMeadSolver(3)
        s.set_initial_points(simplex)
        s.step(sphere)
        start_best = min(sphere(p) for p in simplex)
        assert s.best_energy < start_best

    def test_stationary_at_quadratic_minimum(self):
        # simplex collapsed onto the minimizer: shrink cycles leave best at 0
        s = NelderMeadSolver(2)
        simplex = np.array([[0.0, 0.0], [1e-9, 0.0], [0.0, 1e-9]])
        s.set_initial_points(simplex)
        for _ in range(5):
            s.step(sphere)
        assert s.best_energy == 0.0

    def test_simplex_size_invariant(self):
        s = NelderMeadSolver(3)
        s.set_initial_points([0.8, 1.2, 0.7])
        for _ in range(10):
            s.step(rosenbrock)
            assert len(s._population) == 4

    def test_rosenbrock_default_termination(self):
        s = NelderMeadSolver(3)
        s.set_initial_points([0.8, 1.2, 0.7])
        s.solve(rosenbrock)  # default change-over-generation rule
        assert np.max(np.abs(s.best_solution - 1.0)) <= 1e-4

    def test_wrong_simplex_shape_rejected(self):
        s = NelderMeadSolver(3)
        with pytest.raises(SuretyError):
            s.set_initial_points(np.zeros((3, 3)))

    def test_best_energy_non_increasing(self):
        s = NelderMeadSolver(3)
        s.set_initial_points([0.8, 1.2, 0.7])
        s.solve(rosenbrock, GenerationLimit(60))
        history = s.energy_history
        assert all(a >= b for a, b in zip(history, history[1:]))

    def test_resolve_continues_monotonically(self):
        s = NelderMeadSolver(3)
        s.set_initial_points([0.8, 1.2, 0.7])
        s.solve(rosenbrock)
        first = s.best_energy
        s.solve(rosenbrock, ChangeOverGeneration(tolerance=1e-8))
        assert s.best_energy <= first


class TestStrictRangesAndConstraints:
    def test_all_evaluations_inside_box(self):
        box = Box([0.0] * 3, [2.0] * 3)
        monitor = Monitor()
        s = NelderMeadSolver(3)
        s.set_initial_points([0.8, 1.2, 0.7])
        s.set_strict_ranges(box)
        s.set_evaluation_monitor(monitor)
        s.solve(rosenbrock, GenerationLimit(50))
        assert monitor.points, "expected recorded evaluations"
        for p in monitor.points:
            assert box.contains(p)

    def test_transform_fixed_points_evaluated(self):
        def tie(x):
            y = np.asarray(x, dtype=float).copy()
            y[1] = y[0]
            return y

        monitor = Monitor()
        s = NelderMeadSolver(3)
        s.set_initial_points([0.8, 1.2, 0.7])
        s.set_constraints(tie)
        s.set_evaluation_monitor(monitor)
        s.solve(rosenbrock, GenerationLimit(40))
        for p in monitor.points:
            assert np.max(np.abs(p - tie(p))) <= 1e-12

    def test_conflicting_transform_and_ranges_logged(self, caplog):
        # transform pins x2 = 3, outside the box: clipping wins, conflict logged
        def pin(x):
            y = np.asarray(x, dtype=float).copy()
            y[1] = 3.0
            return y

        s = NelderMeadSolver(2)
        s.set_initial_points([0.5, 0.5])
        s.set_constraints(pin)
        s.set_strict_ranges([0.0, 0.0], [1.0, 1.0])
        with caplog.at_level("WARNING", logger="surety.solvers"):
            s.step(sphere)
        assert any("conflict" in rec.message for rec in caplog.records)

    def test_penalty_added_to_energy(self):
        s = NelderMeadSolver(2)
        s.set_initial_points([1.0, 1.0])
        s.set_penalty(lambda x: 10.0)
        s._initialize(sphere)
        assert s.best_energy == pytest.approx(
            min(sphere(p) + 10.0 for p in s._population))

    def test_evaluation_limit_bounded_overshoot(self):
        f = CountedFunction(rosenbrock, 3)
        s = NelderMeadSolver(3)
        s.set_initial_points([0.8, 1.2, 0.7])
        s.set_evaluation_limit(50)
        s.solve(f, GenerationLimit(10_000))
        # a generation in flight completes: at most one simplex shrink (n+1)
        assert 50 <= f.evaluations <= 50 + 4
        assert s.evaluations == f.evaluations


class TestPowell:
    def test_exact_on_separable_quadratic(self):
        n = 4
        s = PowellSolver(n)
        s.set_initial_points([0.0] * n)
        s.solve(quadratic_shifted, GenerationLimit(n + 1))
        assert np.max(np.abs(s.best_solution - np.arange(1, n + 1))) <= 1e-8

    def test_flat_objective_zero_steps(self):
        flat = lambda x: 7.0
        s = PowellSolver(3)
        s.set_initial_points([0.3, 0.4, 0.5])
        s._initialize(flat)
        directions_before = [d.copy() for d in s._directions]
        s.step(flat)
        assert s.best_solution.tolist() == [0.3, 0.4, 0.5]
        for before, after in zip(directions_before, s._directions):
            assert np.array_equal(before, after)
        assert s.bracket_failures == 0

    def test_rosenbrock2(self):
        s = PowellSolver(2)
        s.set_initial_points([-1.2, 1.0])
        s.solve(rosenbrock, GenerationLimit(50))
        assert s.best_energy < 1e-6

    def test_generations_count_step_calls(self):
        s = PowellSolver(2)
        s.set_initial_points([0.5, 0.5])
        for _ in range(3):
            s.step(sphere)
        assert s.generations == 3

    def test_unbounded_descent_flags_bracket_failure(self):
        ramp = lambda x: float(x[0])  # no minimizer along the first direction
        s = PowellSolver(2)
        s.set_initial_points([0.0, 0.0])
        s.step(ramp)
        assert s.bracket_failures > 0


class TestDifferentialEvolution:
    def test_validation(self):
        with pytest.raises(SuretyError):
            DifferentialEvolutionSolver(3, pop_size=3)
        with pytest.raises(SuretyError):
            DifferentialEvolutionSolver(3, weight=0.0)
        with pytest.raises(SuretyError):
            DifferentialEvolutionSolver(3, crossover=1.5)
        with pytest.raises(SuretyError):
            DifferentialEvolutionSolver(3, variant="worst/9/exp")

    def test_initial_points_shape_checked(self):
        s = DifferentialEvolutionSolver(3, pop_size=6)
        with pytest.raises(SuretyError):
            s.set_initial_points([0.5, 0.5, 0.5])

    def test_random_initial_points_reproducible(self):
        a = DifferentialEvolutionSolver(3, pop_size=8, seed=42)
        a.set_random_initial_points([0.0] * 3, [2.0] * 3)
        b = DifferentialEvolutionSolver(3, pop_size=8, seed=42)
        b.set_random_initial_points([0.0] * 3, [2.0] * 3)
        assert np.array_equal(a._raw_points, b._raw_points)
        box = Box([0.0] * 3, [2.0] * 3)
        assert all(box.contains(p) for p in a._raw_points)

    def test_cr_zero_changes_exactly_one_coordinate(self):
        s = DifferentialEvolutionSolver(4, pop_size=6, crossover=0.0, seed=1)
        s.set_random_initial_points([0.0] * 4, [1.0] * 4)
        s._initialize(sphere)
        parents = [p.copy() for p in s._population]
        monitor = Monitor()
        s.set_evaluation_monitor(monitor)
        s.step(sphere)
        trials = monitor.points  # one batch, candidate order
        assert len(trials) == 6
        for parent, trial in zip(parents, trials):
            assert int(np.sum(parent != trial)) <= 1

    def test_uniform_population_is_fixed_point(self):
        s = DifferentialEvolutionSolver(3, pop_size=5, seed=0)
        s.set_initial_points(np.tile([0.5, 0.25, 0.75], (5, 1)))
        s.step(sphere)
        for p in s._population:
            assert p.tolist() == [0.5, 0.25, 0.75]

    def test_sphere_reference_convergence(self):
        s = DifferentialEvolutionSolver(3, pop_size=20, seed=5)
        s.set_random_initial_points([-5.0] * 3, [5.0] * 3)
        s.set_strict_ranges([-5.0] * 3, [5.0] * 3)
        s.solve(sphere, GenerationLimit(200))
        assert s.best_energy <= 1e-6

    def test_generations_and_evaluations_reported(self):
        f = CountedFunction(sphere, 2)
        s = DifferentialEvolutionSolver(2, pop_size=6, seed=3)
        s.set_random_initial_points([-1.0] * 2, [1.0] * 2)
        s.solve(f, GenerationLimit(10))
        assert s.generations == 10
        assert s.evaluations == f.evaluations == 6 * 11  # init + 10 generations


def run_logged_de(emap, seed=9):
    gen_mon, eval_mon = Monitor(), Monitor()
    s = DifferentialEvolutionSolver(3, pop_size=10, seed=seed)
    s.set_random_initial_points([0.0] * 3, [2.0] * 3)
    s.set_strict_ranges([0.0] * 3, [2.0] * 3)
    s.set_evaluation_map(emap)
    s.set_generation_monitor(gen_mon)
    s.set_evaluation_monitor(eval_mon)
    s.solve(rosenbrock, GenerationLimit(25))
    gen_rows = [format_row(i, e, p)
                for i, e, p in zip(gen_mon.indices, gen_mon.energies, gen_mon.points)]
    eval_rows = [format_row(i, e, p)
                 for i, e, p in zip(eval_mon.indices, eval_mon.energies, eval_mon.points)]
    return gen_rows, eval_rows


def test_fixed_seed_is_bit_reproducible():
    assert run_logged_de(SequentialMap()) == run_logged_de(SequentialMap())


def test_monitor_logs_identical_across_maps():
    reference = run_logged_de(SequentialMap())
    for emap in (CarddealerMap(2), PoolMap(4)):
        assert run_logged_de(emap) == reference


def test_make_solver():
    assert isinstance(make_solver("powell", 2), PowellSolver)
    assert make_solver("differential-evolution", 2, pop_size=7).pop_size == 7
    with pytest.raises(SuretyError):
        make_solver("gradient-descent", 2)


def test_unconfigured_solver_rejected():
    s = NelderMeadSolver(2)
    with pytest.raises(SuretyError):
        s.solve(sphere)
