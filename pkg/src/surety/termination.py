"""Composable termination rules for iterative solvers.

A rule is a callable ``rule(history, evaluations, generations) -> bool`` where
``history`` is the list of best energies, oldest first.  Insufficient history
never terminates a run.
"""

from __future__ import annotations

from .core import SuretyError


class ChangeOverGeneration:
    """Stop once the best energy improved by less than ``tolerance`` over the
    trailing ``window`` generations."""

    def __init__(self, tolerance=1e-6, window=30):
        if tolerance < 0:
            raise SuretyError("tolerance must be >= 0")
        if window < 1:
            raise SuretyError("window must be >= 1")
        self.tolerance = float(tolerance)
        self.window = int(window)

    def __call__(self, history, evaluations, generations):
        if len(history) <= self.window:
            return False
        return (history[-1 - self.window] - history[-1]) < self.tolerance

    def __repr__(self):
        return f"ChangeOverGeneration(tolerance={self.tolerance}, window={self.window})"


class EvaluationLimit:
    """Stop once the solver has spent at least ``limit`` objective evaluations.

    Checked between generations, so a generation in flight completes and the
    final count may overshoot by at most one generation's worth of candidates.
    """

    def __init__(self, limit):
        if limit < 1:
            raise SuretyError("evaluation limit must be >= 1")
        self.limit = int(limit)

    def __call__(self, history, evaluations, generations):
        return evaluations >= self.limit

    def __repr__(self):
        return f"EvaluationLimit({self.limit})"


class GenerationLimit:
    """Stop after ``limit`` generations."""

    def __init__(self, limit):
        if limit < 0:
            raise SuretyError("generation limit must be >= 0")
        self.limit = int(limit)

    def __call__(self, history, evaluations, generations):
        return generations >= self.limit

    def __repr__(self):
        return f"GenerationLimit({self.limit})"


class AnyOf:
    """Composite rule: met as soon as any member rule is met."""

    def __init__(self, *rules):
        if not rules:
            raise SuretyError("AnyOf needs at least one rule")
        self.rules = rules

    def __call__(self, history, evaluations, generations):
        return any(r(history, evaluations, generations) for r in self.rules)

    def __repr__(self):
        return "AnyOf(%s)" % ", ".join(map(repr, self.rules))


class AllOf:
    """Composite rule: met only when every member rule is met."""

    def __init__(self, *rules):
        if not rules:
            raise SuretyError("AllOf needs at least one rule")
        self.rules = rules

    def __call__(self, history, evaluations, generations):
        return all(r(history, evaluations, generations) for r in self.rules)

    def __repr__(self):
        return "AllOf(%s)" % ", ".join(map(repr, self.rules))
