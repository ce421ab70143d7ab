import threading

import pytest
from hypothesis import given, strategies as st

from surety.maps import (CarddealerMap, EqualPortionMap, MapError, PoolMap,
                         SequentialMap, build_map, carddealer_assignment,
                         equalportion_assignment)

ALL_MAPS = [SequentialMap(), CarddealerMap(2), CarddealerMap(4),
            EqualPortionMap(2), EqualPortionMap(4), PoolMap(2), PoolMap(4)]


class TestAssignments:
    def test_carddealer_examples(self):
        dealt = carddealer_assignment(10, 4)
        assert dealt[0] == [0, 4, 8]
        assert dealt[1] == [1, 5, 9]
        assert carddealer_assignment(3, 5)[3:] == [[], []]
        assert carddealer_assignment(0, 3) == [[], [], []]

    def test_equalportion_examples(self):
        blocks = equalportion_assignment(10, 4)
        assert [len(b) for b in blocks] == [3, 3, 2, 2]
        assert blocks[0] == [0, 1, 2]
        assert [len(b) for b in equalportion_assignment(8, 4)] == [2, 2, 2, 2]
        assert [len(b) for b in equalportion_assignment(1, 4)] == [1, 0, 0, 0]

    @given(st.integers(0, 60), st.integers(1, 9))
    def test_every_job_assigned_exactly_once(self, n_jobs, workers):
        for assign in (carddealer_assignment, equalportion_assignment):
            flat = sorted(i for chunk in assign(n_jobs, workers) for i in chunk)
            assert flat == list(range(n_jobs))

    def test_equalportion_blocks_contiguous(self):
        blocks = equalportion_assignment(11, 3)
        flat = [i for chunk in blocks for i in chunk]
        assert flat == list(range(11))  # concatenation already in order


class TestOrderedMap:
    @pytest.mark.parametrize("emap", ALL_MAPS, ids=lambda m: f"{m.strategy}-{m.workers}")
    def test_identity(self, emap):
        assert emap(lambda x: x, range(10)) == list(range(10))

    @pytest.mark.parametrize("emap", ALL_MAPS, ids=lambda m: f"{m.strategy}-{m.workers}")
    def test_empty(self, emap):
        assert emap(lambda x: x, []) == []

    def test_squares_through_pool(self):
        assert PoolMap(2)(lambda x: x * x, [0, 1, 2, 3]) == [0, 1, 4, 9]

    def test_strategy_equivalence_bitwise(self):
        def f(x):
            return (x * 0.1) ** 3 / 7.0

        inputs = [i * 0.37 for i in range(57)]
        reference = SequentialMap()(f, inputs)
        for emap in ALL_MAPS[1:]:
            assert emap(f, inputs) == reference

    def test_more_workers_than_jobs(self):
        assert CarddealerMap(8)(lambda x: -x, [1, 2]) == [-1, -2]

    @pytest.mark.parametrize("emap", ALL_MAPS, ids=lambda m: f"{m.strategy}-{m.workers}")
    def test_failure_reports_index_and_input(self, emap):
        def f(x):
            if x == 5:
                raise ValueError("boom")
            return x

        with pytest.raises(MapError) as err:
            emap(f, range(8))
        assert err.value.index == 5
        assert err.value.item == 5

    def test_pool_actually_concurrent(self):
        barrier = threading.Barrier(2, timeout=5)

        def f(x):
            barrier.wait()  # deadlocks unless two workers run at once
            return x

        assert PoolMap(2)(f, [0, 1]) == [0, 1]


def test_build_map():
    assert build_map("sequential").strategy == "sequential"
    assert build_map("pool", 3).workers == 3
    assert build_map("carddealer").workers >= 1  # hardware default
    with pytest.raises(Exception):
        build_map("mystery")
