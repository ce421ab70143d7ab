"""Symbolic parameter constraints and the two mechanisms for applying them.

Constraint text is one relation per line over variables ``x1..xn`` (1-based),
with arithmetic ``+ - * / **``, parentheses, numeric literals, and the unary
functions ``abs exp log sin cos sqrt``.  Relations are ``=``, ``>``, ``>=``,
``<``, ``<=``; a leading ``~`` marks a soft constraint.  Strict and non-strict
inequalities are treated identically (closure of the feasible set).

Hard constraints compile into a set-based transform ``x' = c(x)``: equality
lines of the shape ``xi = expression`` become ordered direct assignments, and
everything else is imposed by a numerical least-squares projection.  Soft
constraints only ever contribute penalty terms.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .core import InfeasiblePoint, SuretyError, as_point
from .solvers import NelderMeadSolver
from .termination import AnyOf, ChangeOverGeneration, GenerationLimit

HARD_TOL = 1e-9


class ParseError(SuretyError):
    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ProjectionError(SuretyError):
    def __init__(self, residual):
        super().__init__(
            f"constraint projection failed to converge (residual {residual:.3e})")
        self.residual = residual


# -- expression trees --------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


FUNCTIONS = {
    "abs": abs,
    "exp": math.exp,
    "log": math.log,
    "sin": math.sin,
    "cos": math.cos,
    "sqrt": math.sqrt,
}


def evaluate(node, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return float(x[node.index])
    if isinstance(node, Neg):
        return -evaluate(node.arg, x)
    if isinstance(node, Call):
        try:
            return FUNCTIONS[node.func](evaluate(node.arg, x))
        except ValueError:
            return math.nan  # outside the function's domain
    a = evaluate(node.left, x)
    b = evaluate(node.right, x)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b if b != 0.0 else math.copysign(math.inf, a) if a else math.nan
    try:
        return math.pow(a, b)
    except (ValueError, OverflowError):
        return math.nan


def variables(node, out=None):
    """Set of 0-based variable indices referenced by an expression."""
    if out is None:
        out = set()
    if isinstance(node, Var):
        out.add(node.index)
    elif isinstance(node, Neg):
        variables(node.arg, out)
    elif isinstance(node, Call):
        variables(node.arg, out)
    elif isinstance(node, BinOp):
        variables(node.left, out)
        variables(node.right, out)
    return out


def pretty(node):
    """Render an expression tree; re-parsing yields an equal tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Neg):
        return f"(-{pretty(node.arg)})"
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    return f"({pretty(node.left)} {node.op} {pretty(node.right)})"


# -- tokenizer / parser ------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|<=|>=|[=<>+\-*/()~])
  | (?P<ws>\s+)
  | (?P<bad>.)
""", re.VERBOSE)


def _tokenize(text, line_no):
    tokens = []
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        if kind == "ws":
            continue
        if kind == "bad":
            raise ParseError(f"unexpected character {m.group()!r}", line_no, m.start() + 1)
        tokens.append((kind, m.group(), m.start() + 1))
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _ExprParser:
    """Recursive-descent parser for one constraint line."""

    def __init__(self, tokens, line_no, dim):
        self.tokens = tokens
        self.pos = 0
        self.line_no = line_no
        self.dim = dim

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, self.line_no, tok[2])

    def expression(self):
        node = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.unary()
        if self.peek()[:2] == ("op", "**"):
            self.take()
            return BinOp("**", node, self.factor())  # right-associative
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.primary()

    def primary(self):
        kind, text, col = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                if self.peek()[:2] != ("op", "("):
                    self.fail(f"expected '(' after function {text!r}")
                self.take()
                arg = self.expression()
                if self.peek()[:2] != ("op", ")"):
                    self.fail("expected ')'")
                self.take()
                return Call(text, arg)
            m = re.fullmatch(r"x(\d+)", text)
            if not m:
                raise ParseError(f"unknown name {text!r}", self.line_no, col)
            index = int(m.group(1))
            if not 1 <= index <= self.dim:
                raise ParseError(
                    f"variable x{index} out of range 1..{self.dim}", self.line_no, col)
            return Var(index - 1)
        if (kind, text) == ("op", "("):
            node = self.expression()
            if self.peek()[:2] != ("op", ")"):
                self.fail("expected ')'")
            self.take()
            return node
        raise ParseError(f"unexpected token {text!r}", self.line_no, col)


RELATIONS = ("=", ">", ">=", "<", "<=")


@dataclass(frozen=True)
class ConstraintExpr:
    """One parsed constraint: ``lhs relation rhs``, optionally soft."""

    lhs: object
    relation: str
    rhs: object
    soft: bool = False

    def pretty(self):
        tilde = "~" if self.soft else ""
        return f"{tilde}{pretty(self.lhs)} {self.relation} {pretty(self.rhs)}"

    @property
    def is_equality(self):
        return self.relation == "="

    def violation(self, x):
        """Signed constraint violation: 0 on the (closed) feasible set.

        Equalities return ``|lhs - rhs|``; inequalities the positive part of
        the shortfall.  NaNs from domain errors propagate.
        """
        a = evaluate(self.lhs, x)
        b = evaluate(self.rhs, x)
        if math.isnan(a) or math.isnan(b):
            return math.nan
        if self.relation == "=":
            return abs(a - b)
        if self.relation in (">", ">="):
            return max(0.0, b - a)
        return max(0.0, a - b)

    def slack(self, x):
        """Inequality headroom (positive when strictly feasible)."""
        a = evaluate(self.lhs, x)
        b = evaluate(self.rhs, x)
        if self.relation in (">", ">="):
            return a - b
        if self.relation in ("<", "<="):
            return b - a
        raise SuretyError("equality constraints have no slack")


def parse_constraint_line(text, dim, line_no=1):
    tokens = _tokenize(text, line_no)
    soft = False
    parser = _ExprParser(tokens, line_no, dim)
    if parser.peek()[:2] == ("op", "~"):
        parser.take()
        soft = True
    lhs = parser.expression()
    kind, rel, col = parser.take()
    if kind != "op" or rel not in RELATIONS:
        raise ParseError(f"expected a relation (= > >= < <=), got {rel!r}", line_no, col)
    rhs = parser.expression()
    end = parser.take()
    if end[0] != "end":
        raise ParseError(f"trailing input {end[1]!r}", line_no, end[2])
    return ConstraintExpr(lhs, rel, rhs, soft)


# -- compiled programs --------------------------------------------------------

class ConstraintProgram:
    """A parsed constraint set with its compiled transform and penalty.

    ``transform(x)`` returns a point satisfying every hard constraint within
    ``1e-9`` (idempotent to the same tolerance); ``penalty(x)`` is the sum of
    squared violations over *all* constraints, zero exactly on the feasible
    set.
    """

    def __init__(self, exprs, dim):
        self.exprs = list(exprs)
        self.dim = int(dim)
        self.hard = [e for e in self.exprs if not e.soft]
        self.soft = [e for e in self.exprs if e.soft]
        self._assignments, self._projected = self._split_hard()

    def _split_hard(self):
        """Separate hard equalities of the shape ``xi = expr`` (executable in
        textual order) from constraints that need numerical projection.

        Assignments that form a reference cycle, or repeated assignments to
        one variable, are routed to the projection.
        """
        candidates = []
        general = []
        assigned = set()
        for e in self.hard:
            if (e.is_equality and isinstance(e.lhs, Var)
                    and e.lhs.index not in variables(e.rhs)
                    and e.lhs.index not in assigned):
                candidates.append(e)
                assigned.add(e.lhs.index)
            else:
                general.append(e)
        if self._has_cycle(candidates):
            return [], candidates + general
        return candidates, general

    @staticmethod
    def _has_cycle(assignments):
        targets = {e.lhs.index for e in assignments}
        graph = {e.lhs.index: variables(e.rhs) & targets for e in assignments}
        seen, done = set(), set()

        def visit(v):
            if v in done:
                return False
            if v in seen:
                return True
            seen.add(v)
            if any(visit(w) for w in graph.get(v, ())):
                return True
            done.add(v)
            return False

        return any(visit(v) for v in graph)

    # transform ---------------------------------------------------------------

    def transform(self, x):
        """Apply the hard constraints: direct assignments in textual order,
        then least-squares projection for anything left unsatisfied."""
        p = as_point(x, self.dim).copy()
        for e in self._assignments:
            p[e.lhs.index] = evaluate(e.rhs, p)
        if self._needs_projection(p):
            p = self._project(p)
        return p

    def _needs_projection(self, p):
        return self.max_residual(p) > HARD_TOL

    def max_residual(self, x):
        """Largest hard-constraint violation at ``x`` (NaN counts as huge)."""
        worst = 0.0
        for e in self.hard:
            v = e.violation(x)
            worst = max(worst, math.inf if math.isnan(v) else v)
        return worst

    def _project(self, x0):
        """Least-squares projection onto the hard feasible set: minimize
        ``|x' - x0|^2`` on an exterior-penalty relaxation, escalating the
        multiplier tenfold until the residual drops below 1e-9.

        Each escalation warm-starts a downhill simplex at the previous
        solution, with vertices spread on the scale of the remaining residual
        so the stiff penalty valley stays resolvable.
        """
        x = x0.copy()
        k = 100.0
        residual = self.max_residual(x)
        for _ in range(9):
            def relaxed(z):
                d = z - x0
                pen = sum(self._squared_violations(z))
                return float(d @ d) + k * pen

            delta = max(10.0 * min(residual, 1.0), 1e-10)
            simplex = [x] + [x + delta * row for row in np.eye(self.dim)]
            solver = NelderMeadSolver(self.dim)
            solver.set_initial_points(np.vstack(simplex))
            # denormal tolerance: stop only once the best energy is exactly
            # stalled for a full window
            solver.solve(relaxed, AnyOf(ChangeOverGeneration(1e-300, 30),
                                        GenerationLimit(400 * self.dim)))
            x = solver.best_solution
            residual = self.max_residual(x)
            if residual <= HARD_TOL:
                return x
            k *= 10.0
        raise ProjectionError(residual)

    def _squared_violations(self, x, include_soft=False):
        exprs = self.exprs if include_soft else self.hard
        for e in exprs:
            v = e.violation(x)
            yield 1e100 if math.isnan(v) else v * v

    # penalty -------------------------------------------------------------------

    def penalty(self, x):
        """Sum of squared violations over all constraints (hard and soft)."""
        p = as_point(x, self.dim)
        return float(sum(self._squared_violations(p, include_soft=True)))

    def pretty(self):
        return "\n".join(e.pretty() for e in self.exprs)

    def __len__(self):
        return len(self.exprs)


def parse_constraints(text, dim):
    """Parse constraint text (one relation per nonempty line) for an
    ``dim``-dimensional parameter vector."""
    exprs = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        exprs.append(parse_constraint_line(stripped, dim, line_no))
    return ConstraintProgram(exprs, dim)


# -- penalty methods -----------------------------------------------------------

@dataclass
class PenaltySpec:
    """Which penalty method to build, its multiplier, and the multiplier
    growth factor applied per outer iteration."""

    method: str = "exterior"
    k: float = 1.0
    growth: float = 2.0

    def __post_init__(self):
        if self.method not in ("exterior", "augmented-lagrange", "log-barrier"):
            raise SuretyError(f"unknown penalty method {self.method!r}")
        if self.k <= 0:
            raise SuretyError("penalty multiplier k must be > 0")
        if self.growth < 1:
            raise SuretyError("multiplier growth factor must be >= 1")


class ExteriorPenalty:
    """Quadratic exterior penalty ``dE = k * sum(violations^2)``."""

    def __init__(self, program, spec):
        self.program = program
        self.k = float(spec.k)
        self.growth = float(spec.growth)

    def __call__(self, x):
        return self.k * self.program.penalty(x)

    def update(self, x=None):
        self.k *= self.growth


class AugmentedLagrange:
    """Augmented Lagrangian with per-constraint multipliers.

    Equalities contribute ``lambda*h + k*h^2``; inequalities use the standard
    clipped form so the term vanishes deep inside the feasible region.
    ``update(x)`` performs one outer iteration: ``lambda += 2k * violation``,
    then grows ``k``.
    """

    max_outer = 20

    def __init__(self, program, spec):
        self.program = program
        self.k = float(spec.k)
        self.growth = float(spec.growth)
        self.lam = [0.0] * len(program.exprs)
        self.outer = 0

    def _signed(self, e, x):
        # positive when violated, negative slack when feasible
        if e.is_equality:
            a = evaluate(e.lhs, x)
            b = evaluate(e.rhs, x)
            return a - b
        return -e.slack(x)

    def __call__(self, x):
        total = 0.0
        for e, lam in zip(self.program.exprs, self.lam):
            g = self._signed(e, x)
            if math.isnan(g):
                return math.inf
            if e.is_equality:
                total += lam * g + self.k * g * g
            else:
                total += (max(0.0, lam + 2.0 * self.k * g) ** 2 - lam ** 2) / (4.0 * self.k)
        return total

    def update(self, x):
        if self.outer >= self.max_outer:
            return
        for i, e in enumerate(self.program.exprs):
            g = self._signed(e, x)
            if math.isnan(g):
                continue
            if e.is_equality:
                self.lam[i] += 2.0 * self.k * g
            else:
                self.lam[i] = max(0.0, self.lam[i] + 2.0 * self.k * g)
        self.k *= self.growth
        self.outer += 1


class LogBarrier:
    """Logarithmic barrier ``-(1/k) * sum(log(slack))`` over inequality
    constraints; raises ``InfeasiblePoint`` outside the strictly feasible
    region so the solver rejects the candidate."""

    def __init__(self, program, spec):
        if any(e.is_equality for e in program.exprs):
            raise SuretyError("the log barrier only supports inequality constraints")
        self.program = program
        self.k = float(spec.k)
        self.growth = float(spec.growth)

    def __call__(self, x):
        total = 0.0
        for e in self.program.exprs:
            s = e.slack(x)
            if math.isnan(s) or s <= 0.0:
                raise InfeasiblePoint(
                    f"barrier evaluated at infeasible point (slack {s!r} for "
                    f"{e.pretty()!r})")
            total -= math.log(s)
        return total / self.k

    def update(self, x=None):
        self.k *= self.growth


def build_penalty(program, spec=None):
    """Compile a penalty term ``dE(x)`` for the given program and method."""
    spec = spec if spec is not None else PenaltySpec()
    if spec.method == "exterior":
        return ExteriorPenalty(program, spec)
    if spec.method == "augmented-lagrange":
        return AugmentedLagrange(program, spec)
    return LogBarrier(program, spec)


def wrap_cost(func, program, mode="set-based", spec=None):
    """Bind constraints to a cost function.

    ``set-based`` evaluates ``func`` only at transformed (feasible) points;
    ``penalty`` adds the compiled penalty term to the raw cost.
    """
    if mode == "set-based":
        def wrapped(x):
            return func(program.transform(x))
        return wrapped
    if mode == "penalty":
        term = build_penalty(program, spec)

        def wrapped(x):
            return func(as_point(x, program.dim)) + term(x)
        return wrapped
    raise SuretyError(f"unknown constraint mode {mode!r}")
