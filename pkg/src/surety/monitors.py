"""Progress monitors: append-only records of solver progress, with optional
interval echoing to a text sink in a plot-ready CSV format.

Log line format: ``generation,bestEnergy,param_0,...,param_{n-1}`` with full
round-trip decimal precision.
"""

from __future__ import annotations

import sys

import numpy as np

from .core import SuretyError


def format_value(v):
    """Shortest decimal text that round-trips to the same float."""
    return repr(float(v))


def format_row(index, energy, params):
    cells = [str(int(index)), format_value(energy)]
    cells.extend(format_value(p) for p in params)
    return ",".join(cells)


def header_row(n_params):
    names = ["generation", "bestEnergy"]
    names.extend(f"param_{i}" for i in range(n_params))
    return ",".join(names)


class Monitor:
    """Ordered, lossless record of ``(index, point, energy)`` triples.

    When ``interval`` is positive, every record whose index is a multiple of
    the interval (including index 0) is echoed as a CSV line to ``sink`` --
    a path, a file-like object, or stdout when no sink is given.  With
    ``interval=0`` the monitor is silent and only keeps records in memory.
    """

    def __init__(self, interval=0, sink=None):
        if interval < 0:
            raise SuretyError("monitor interval must be >= 0")
        self.interval = int(interval)
        self.indices = []
        self.points = []
        self.energies = []
        self.flags = []
        self._sink_spec = sink
        self._stream = None
        self._owns_stream = False
        self._wrote_header = False

    def __len__(self):
        return len(self.indices)

    @property
    def last_index(self):
        return self.indices[-1] if self.indices else None

    def record(self, index, x, energy, flagged=False):
        index = int(index)
        if self.indices and index != self.indices[-1] + 1:
            raise SuretyError(
                f"monitor index out of order: got {index} after {self.indices[-1]}")
        point = np.asarray(x, dtype=float).copy()
        self.indices.append(index)
        self.points.append(point)
        self.energies.append(float(energy))
        self.flags.append(bool(flagged))
        if self.interval > 0 and index % self.interval == 0:
            self._emit(index, float(energy), point)

    def _emit(self, index, energy, point):
        stream = self._ensure_stream(point.size)
        stream.write(format_row(index, energy, point) + "\n")
        stream.flush()

    def _ensure_stream(self, n_params):
        if self._stream is None:
            if self._sink_spec is None:
                self._stream = sys.stdout
            elif hasattr(self._sink_spec, "write"):
                self._stream = self._sink_spec
            else:
                self._stream = open(self._sink_spec, "w")
                self._owns_stream = True
        if not self._wrote_header:
            self._stream.write(header_row(n_params) + "\n")
            self._wrote_header = True
        return self._stream

    def close(self):
        if self._stream is not None and self._owns_stream:
            self._stream.close()
        self._stream = None
        self._owns_stream = False

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def write_log(path, indices, energies, points):
    """Write a complete monitor log to ``path`` in the standard format."""
    points = [np.asarray(p, dtype=float) for p in points]
    n = points[0].size if points else 0
    with open(path, "w") as fh:
        fh.write(header_row(n) + "\n")
        for i, e, p in zip(indices, energies, points):
            fh.write(format_row(i, e, p) + "\n")


def read_log(path):
    """Read a monitor log; returns ``(indices, energies, points)``."""
    indices, energies, points = [], [], []
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    for ln in lines:
        cells = ln.split(",")
        if cells[0] == "generation":
            continue
        indices.append(int(cells[0]))
        energies.append(float(cells[1]))
        points.append(np.array([float(c) for c in cells[2:]]))
    return indices, energies, points
