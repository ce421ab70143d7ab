import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from surety.core import Box, DimensionMismatch, SuretyError
from surety.measures import (DiracMeasure, ImpositionError, ProductMeasure,
                             impose_expectation, mean_and_range, packed_bounds,
                             packed_length, position_bounds, unpack)


def naive_expectation(marginals, func):
    # independent oracle: explicit nested loops over the support
    total = 0.0
    axes = [list(zip(m.positions, m.weights)) for m in marginals]
    for combo in itertools.product(*axes):
        point = [p for p, _ in combo]
        weight = 1.0
        for _, w in combo:
            weight *= w
        total += weight * func(np.asarray(point))
    return total


def random_measure(rng, npts, lower=0.0, upper=1.0):
    positions = rng.uniform(lower, upper, size=npts)
    weights = rng.uniform(0.1, 1.0, size=npts)
    return DiracMeasure(positions, weights / weights.sum(), lower, upper)


class TestDiracMeasure:
    def test_mass_examples(self):
        assert DiracMeasure([0.0, 1.0], [0.3, 0.3]).mass == pytest.approx(0.6)
        assert DiracMeasure([0.0, 1.0], [0.5, 0.5]).mass == 1.0
        assert DiracMeasure([2.0], [1.0]).mass == 1.0

    def test_normalize(self):
        m = DiracMeasure([0.0, 1.0], [0.3, 0.3]).normalized()
        assert m.weights.tolist() == [0.5, 0.5]
        again = m.normalized()
        assert again.weights.tolist() == [0.5, 0.5]

    def test_normalize_zero_mass_rejected(self):
        with pytest.raises(SuretyError):
            DiracMeasure([0.0, 1.0], [0.0, 0.0]).normalized()

    def test_mean_and_range(self):
        assert mean_and_range(DiracMeasure([0.0, 1.0], [0.5, 0.5])) == (0.5, 1.0)
        assert mean_and_range(DiracMeasure([2.0], [0.7])) == (2.0, 0.0)
        assert DiracMeasure([0.0, 1.0], [0.25, 0.75]).mean == pytest.approx(0.75)

    def test_validation(self):
        with pytest.raises(SuretyError):
            DiracMeasure([0.0], [-0.5])
        with pytest.raises(DimensionMismatch):
            DiracMeasure([0.0, 1.0], [1.0])
        with pytest.raises(SuretyError):
            DiracMeasure([], [])
        with pytest.raises(SuretyError):
            DiracMeasure([3.0], [1.0], 0.0, 1.0)

    def test_coincident_support_permitted(self):
        m = DiracMeasure([0.5, 0.5], [0.5, 0.5])
        assert m.spread == 0.0


class TestProductMeasure:
    def test_expect_examples(self):
        uniform = DiracMeasure([0.0, 1.0], [0.5, 0.5])
        pm = ProductMeasure([uniform, uniform])
        assert pm.expect(lambda x: x[0] * x[1]) == pytest.approx(0.25)
        assert pm.expect(lambda x: 3.25) == pytest.approx(3.25)
        assert pm.expect(lambda x: x[0] + x[1]) == pytest.approx(1.0)

    def test_expect_requires_normalized(self):
        pm = ProductMeasure([DiracMeasure([0.0, 1.0], [0.3, 0.3])])
        with pytest.raises(SuretyError):
            pm.expect(lambda x: x[0])

    def test_expect_matches_naive_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            marginals = [random_measure(rng, rng.integers(1, 4)) for _ in range(3)]
            pm = ProductMeasure(marginals)
            func = lambda x: float(np.sum(x ** 2) - 0.3 * x[0] * x[2])
            assert pm.expect(func) == pytest.approx(
                naive_expectation(marginals, func), abs=1e-12)

    def test_pof_examples(self):
        one = ProductMeasure([DiracMeasure([0.0, 1.0], [0.25, 0.75])])
        assert one.pof(lambda x: x[0] - 0.5) == pytest.approx(0.25)
        assert one.pof(lambda x: x[0] + 1.0) == 0.0
        assert one.pof(lambda x: 0.0) == 1.0  # boundary is inclusive

    def test_pof_direction_flag(self):
        one = ProductMeasure([DiracMeasure([0.0, 1.0], [0.25, 0.75])])
        assert one.pof(lambda x: x[0], threshold=0.8, failure="above") == 0.75
        assert one.pof(lambda x: x[0], threshold=0.8, failure="below") == 0.25

    def test_pof_partition_of_support(self):
        rng = np.random.default_rng(7)
        pm = ProductMeasure([random_measure(rng, 3), random_measure(rng, 2)])
        func = lambda x: float(x[0] - x[1])
        below = pm.pof(func, threshold=0.1, failure="below")
        strictly_above = sum(w for p, w in pm.support() if func(p) > 0.1)
        assert below + strictly_above == pytest.approx(1.0, abs=1e-12)

    def test_pof_bounds(self):
        rng = np.random.default_rng(21)
        pm = ProductMeasure([random_measure(rng, 2) for _ in range(2)])
        for t in (-10.0, 0.2, 10.0):
            assert 0.0 <= pm.pof(lambda x: float(x.sum()), t) <= 1.0


class TestPacking:
    def test_single_marginal_layout(self):
        pm = ProductMeasure([DiracMeasure([0.0, 1.0], [0.5, 0.5])])
        assert pm.pack().tolist() == [0.5, 0.5, 0.0, 1.0]

    def test_layout_arithmetic(self):
        assert packed_length((2, 1)) == 6
        pm = ProductMeasure([DiracMeasure([0.0, 1.0], [0.5, 0.5]),
                             DiracMeasure([2.0], [1.0])])
        assert len(pm.pack()) == 6

    @given(st.integers(0, 2 ** 32 - 1))
    def test_round_trip_exact(self, seed):
        rng = np.random.default_rng(seed)
        npts = tuple(int(n) for n in rng.integers(1, 4, size=rng.integers(1, 4)))
        marginals = [DiracMeasure(rng.uniform(-5, 5, n), rng.uniform(0, 2, n))
                     for n in npts]
        pm = ProductMeasure(marginals)
        assert unpack(pm.pack(), npts) == pm

    def test_unpack_clips_and_floors(self):
        out = unpack([-0.2, 0.5, -1.0, 2.0], (2,), Box([0.0], [1.0]))
        assert out.marginals[0].weights.tolist() == [0.0, 0.5]
        assert out.marginals[0].positions.tolist() == [0.0, 1.0]

    def test_unpack_length_checked(self):
        with pytest.raises(DimensionMismatch):
            unpack([0.5, 0.5, 0.0], (2,))

    def test_packed_bounds_layout(self):
        box = Box([0.0, -1.0], [1.0, 2.0])
        bounds = packed_bounds(box, (2, 2))
        assert bounds.lower.tolist() == [0, 0, 0, 0, 0, 0, -1, -1]
        assert bounds.upper.tolist() == [1, 1, 1, 1, 1, 1, 2, 2]
        lows, highs = position_bounds(box, (2, 2))
        assert lows.tolist() == [0, 0, -1, -1]
        assert highs.tolist() == [1, 1, 2, 2]


class TestImposeExpectation:
    def test_guard_short_circuits(self):
        pm = ProductMeasure([DiracMeasure([0.2, 0.4], [0.5, 0.5], 0.0, 1.0)])
        out = impose_expectation(pm, lambda x: x[0], 0.3, 0.01)
        assert out is pm

    def test_postcondition_holds(self):
        pm = ProductMeasure([DiracMeasure([0.0, 1.0], [0.5, 0.5], 0.0, 1.0)])
        out = impose_expectation(pm, lambda x: x[0], 0.3, 0.01)
        assert abs(out.expect(lambda x: x[0]) - 0.3) <= 0.01
        assert np.array_equal(out.marginals[0].weights, pm.marginals[0].weights)

    def test_positions_respect_bounds(self):
        pm = ProductMeasure([DiracMeasure([0.0, 1.0], [0.5, 0.5], 0.0, 1.0)])
        out = impose_expectation(pm, lambda x: x[0], 0.9, 0.005)
        for m in out.marginals:
            assert np.all(m.positions >= 0.0) and np.all(m.positions <= 1.0)

    def test_unreachable_target_raises(self):
        pm = ProductMeasure([DiracMeasure([0.5], [1.0], 0.0, 1.0)])
        with pytest.raises(ImpositionError) as err:
            impose_expectation(pm, lambda x: x[0] + 5.0, 0.0, 0.01)
        assert err.value.residual > 1.0

    def test_seeded_random_instances(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            dims = int(rng.integers(1, 3))
            marginals = [random_measure(rng, 2) for _ in range(dims)]
            pm = ProductMeasure(marginals)
            func = lambda x: float(np.sum(x))
            target = float(rng.uniform(0.1, dims - 0.1)) if dims > 1 else \
                float(rng.uniform(0.1, 0.9))
            out = impose_expectation(pm, func, target, 0.01)
            assert abs(out.expect(func) - target) <= 0.01
