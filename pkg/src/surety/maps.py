"""Ordered in-process parallel maps with pluggable work-distribution strategies.

Every map is a callable ``m(func, items) -> list`` whose output order matches
the input order regardless of strategy, worker count, or completion order.
Static strategies pre-assign job indices to workers (round-robin or contiguous
blocks); the pool strategy lets workers pull the next unclaimed index.
"""

from __future__ import annotations

import os
import threading

from .core import SuretyError


class MapError(SuretyError):
    """Raised when the mapped function fails; carries the failing job."""

    def __init__(self, index, item, cause):
        super().__init__(f"map function failed on input {index} ({item!r}): {cause}")
        self.index = index
        self.item = item
        self.cause = cause


def default_workers():
    return os.cpu_count() or 1


def carddealer_assignment(n_jobs, workers):
    """Round-robin: job ``j`` goes to worker ``j mod workers``."""
    if n_jobs < 0 or workers < 1:
        raise SuretyError("need n_jobs >= 0 and workers >= 1")
    return [list(range(w, n_jobs, workers)) for w in range(workers)]


def equalportion_assignment(n_jobs, workers):
    """Contiguous blocks; the first ``n_jobs mod workers`` workers get the
    larger (ceil) share, the remainder the floor share."""
    if n_jobs < 0 or workers < 1:
        raise SuretyError("need n_jobs >= 0 and workers >= 1")
    big, extra = divmod(n_jobs, workers)
    out, start = [], 0
    for w in range(workers):
        size = big + (1 if w < extra else 0)
        out.append(list(range(start, start + size)))
        start += size
    return out


class SequentialMap:
    """Plain in-order map; the determinism baseline for every other strategy."""

    strategy = "sequential"
    workers = 1

    def __call__(self, func, items):
        items = list(items)
        out = []
        for i, item in enumerate(items):
            try:
                out.append(func(item))
            except Exception as exc:
                raise MapError(i, item, exc) from exc
        return out

    def __repr__(self):
        return "SequentialMap()"


class _ThreadedMap:
    """Shared machinery for the threaded strategies: run workers, collect
    results by index, fail fast on the lowest failing index."""

    strategy = "threaded"

    def __init__(self, workers=None):
        workers = default_workers() if workers is None else int(workers)
        if workers < 1:
            raise SuretyError("workers must be >= 1")
        self.workers = workers

    def _index_source(self, n_jobs):
        raise NotImplementedError

    def __call__(self, func, items):
        items = list(items)
        n = len(items)
        if n == 0:
            return []
        results = [None] * n
        failures = []
        stop = threading.Event()
        lock = threading.Lock()
        sources = self._index_source(n)

        def run(source):
            for i in source:
                if stop.is_set():
                    return
                try:
                    results[i] = func(items[i])
                except Exception as exc:
                    with lock:
                        failures.append((i, exc))
                    stop.set()
                    return

        threads = [threading.Thread(target=run, args=(src,)) for src in sources]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if failures:
            i, exc = min(failures, key=lambda f: f[0])
            raise MapError(i, items[i], exc) from exc
        return results

    def __repr__(self):
        return f"{type(self).__name__}(workers={self.workers})"


class CarddealerMap(_ThreadedMap):
    strategy = "carddealer"

    def _index_source(self, n_jobs):
        return carddealer_assignment(n_jobs, self.workers)


class EqualPortionMap(_ThreadedMap):
    strategy = "equalportion"

    def _index_source(self, n_jobs):
        return equalportion_assignment(n_jobs, self.workers)


class _PullQueue:
    """Iterator over 0..n-1 that many workers can drain concurrently."""

    def __init__(self, n):
        self.n = n
        self.next = 0
        self.lock = threading.Lock()

    def __iter__(self):
        return self

    def __next__(self):
        with self.lock:
            if self.next >= self.n:
                raise StopIteration
            i = self.next
            self.next += 1
            return i


class PoolMap(_ThreadedMap):
    """Dynamic balancing: workers pull the next unclaimed job index."""

    strategy = "pool"

    def _index_source(self, n_jobs):
        queue = _PullQueue(n_jobs)
        return [queue] * self.workers


STRATEGIES = {
    "sequential": lambda workers: SequentialMap(),
    "carddealer": CarddealerMap,
    "equalportion": EqualPortionMap,
    "pool": PoolMap,
}


def build_map(strategy="sequential", workers=None):
    try:
        factory = STRATEGIES[strategy]
    except KeyError:
        raise SuretyError(
            f"unknown map strategy {strategy!r}; "
            f"available: {', '.join(sorted(STRATEGIES))}") from None
    return factory(workers)
