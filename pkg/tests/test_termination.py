import pytest
from hypothesis import given, strategies as st

from surety.core import SuretyError
from surety.termination import (AllOf, AnyOf, ChangeOverGeneration,
                                EvaluationLimit, GenerationLimit)


class TestChangeOverGeneration:
    def test_flat_history_terminates(self):
        cog = ChangeOverGeneration(tolerance=1e-6, window=10)
        assert cog([5.0] * 20, 0, 0) is True

    def test_steady_decrease_does_not(self):
        cog = ChangeOverGeneration(tolerance=1e-6, window=10)
        history = [100.0 - i for i in range(30)]
        assert cog(history, 0, 0) is False

    def test_insufficient_history(self):
        cog = ChangeOverGeneration(tolerance=1e-6, window=10)
        assert cog([3.0, 2.0, 1.0], 0, 0) is False

    def test_defaults(self):
        cog = ChangeOverGeneration()
        assert cog.tolerance == 1e-6 and cog.window == 30

    @given(st.lists(st.floats(0, 100), min_size=12, max_size=40))
    def test_appending_identical_energy_never_unterminates(self, raw):
        # histories are non-increasing best energies
        history = sorted(raw, reverse=True)
        cog = ChangeOverGeneration(tolerance=1e-3, window=10)
        before = cog(history, 0, 0)
        after = cog(history + [history[-1]], 0, 0)
        if before:
            assert after

    def test_validation(self):
        with pytest.raises(SuretyError):
            ChangeOverGeneration(tolerance=-1.0)
        with pytest.raises(SuretyError):
            ChangeOverGeneration(window=0)


def test_limits():
    assert EvaluationLimit(50)([], 50, 0) is True
    assert EvaluationLimit(50)([], 49, 0) is False
    assert GenerationLimit(10)([], 0, 10) is True
    assert GenerationLimit(10)([], 0, 9) is False


def test_composites():
    evals = EvaluationLimit(10)
    gens = GenerationLimit(5)
    assert AnyOf(evals, gens)([], 3, 5) is True
    assert AnyOf(evals, gens)([], 3, 4) is False
    assert AllOf(evals, gens)([], 10, 4) is False
    assert AllOf(evals, gens)([], 10, 5) is True
    with pytest.raises(SuretyError):
        AnyOf()
