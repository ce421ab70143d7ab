import io

import numpy as np
import pytest

from surety.core import SuretyError
from surety.monitors import Monitor, format_row, read_log, write_log


def test_records_round_trip():
    m = Monitor()
    m.record(0, [1.0, 2.0], 3.5)
    m.record(1, [0.1, 0.2], 1.25)
    assert m.indices == [0, 1]
    assert m.points[0].tolist() == [1.0, 2.0]
    assert m.energies == [3.5, 1.25]
    assert len(m) == 2


def test_interval_five_emits_at_0_5_10(tmp_path):
    sink = io.StringIO()
    m = Monitor(interval=5, sink=sink)
    for i in range(13):
        m.record(i, [float(i)], float(i) * 0.5)
    lines = [ln for ln in sink.getvalue().splitlines() if ln]
    assert lines[0].startswith("generation,bestEnergy")
    emitted = [int(ln.split(",")[0]) for ln in lines[1:]]
    assert emitted == [0, 5, 10]


def test_interval_zero_is_silent():
    sink = io.StringIO()
    m = Monitor(interval=0, sink=sink)
    for i in range(7):
        m.record(i, [1.0], 2.0)
    assert sink.getvalue() == ""


def test_out_of_order_index_rejected():
    m = Monitor()
    m.record(0, [1.0], 1.0)
    with pytest.raises(SuretyError):
        m.record(2, [1.0], 1.0)
    with pytest.raises(SuretyError):
        m.record(0, [1.0], 1.0)


def test_file_sink(tmp_path):
    path = tmp_path / "trace.csv"
    with Monitor(interval=1, sink=str(path)) as m:
        m.record(0, [0.25, 0.5], 9.0)
        m.record(1, [0.1, 0.2], 4.0)
    indices, energies, points = read_log(path)
    assert indices == [0, 1]
    assert energies == [9.0, 4.0]
    assert points[1].tolist() == [0.1, 0.2]


def test_log_full_precision_round_trip(tmp_path):
    path = tmp_path / "log.csv"
    values = [0.1, 1 / 3, 2.0 ** -40, 1e300]
    write_log(path, [0], [values[0]], [values[1:]])
    _, energies, points = read_log(path)
    assert energies[0] == values[0]
    assert points[0].tolist() == values[1:]


def test_format_row_plain_csv():
    row = format_row(3, 0.5, np.array([1.0, 2.5]))
    assert row == "3,0.5,1.0,2.5"
