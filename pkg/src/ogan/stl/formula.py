"""Abstract syntax for STL requirements.

Nodes are frozen dataclasses so formulas can be shared between threads and
used as dictionary keys.  Expressions (the arithmetic inside a predicate) are
kept separate from formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union


class StlError(ValueError):
    """Base class for all errors raised by the STL layer."""


class HorizonError(StlError):
    """The formula needs samples past the end of the trace."""


class UnknownSignalError(StlError):
    """A predicate refers to a signal that the trace does not contain."""


class MissingRangeError(StlError):
    """A signal used by the formula has no declared range."""


class DegenerateRangeError(StlError):
    """Positive robustness with a non-positive effective upper bound."""


# --------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class SignalRef:
    name: str


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Abs:
    arg: "Expr"


@dataclass(frozen=True)
class Sum:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Difference:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Scale:
    factor: float
    arg: "Expr"


Expr = Union[SignalRef, Constant, Abs, Sum, Difference, Scale]


# --------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class Interval:
    """Closed time interval ``[lo, hi]`` in time units."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise StlError(f"interval bounds must be finite, got [{self.lo}, {self.hi}]")
        if self.lo < 0 or self.hi < 0:
            raise StlError(f"interval bounds must be nonnegative, got [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise StlError(f"interval lower bound exceeds upper bound: [{self.lo}, {self.hi}]")

    def steps(self, time_step: float) -> tuple[int, int]:
        """Index offsets of the bounds on a grid with the given sampling period."""
        return to_steps(self.lo, time_step), to_steps(self.hi, time_step)


def to_steps(duration: float, time_step: float) -> int:
    # round half up; plain round() would use banker's rounding
    return int(math.floor(duration / time_step + 0.5))


RELATIONS = (">=", ">", "<=", "<")


@dataclass(frozen=True)
class Predicate:
    lhs: Expr
    relation: str
    rhs: Expr

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise StlError(f"unknown relation {self.relation!r}")


@dataclass(frozen=True)
class TrueFormula:
    pass


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Until:
    interval: Interval
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Eventually:
    interval: Interval
    arg: "Formula"


@dataclass(frozen=True)
class Always:
    interval: Interval
    arg: "Formula"


Formula = Union[Predicate, TrueFormula, Not, And, Or, Implies, Until, Eventually, Always]


def children(phi: Formula) -> tuple:
    if isinstance(phi, (Predicate, TrueFormula)):
        return ()
    if isinstance(phi, (Not, Eventually, Always)):
        return (phi.arg,)
    return (phi.left, phi.right)


def walk(phi: Formula) -> Iterator[Formula]:
    yield phi
    for child in children(phi):
        yield from walk(child)


def expr_signals(e: Expr) -> set[str]:
    if isinstance(e, SignalRef):
        return {e.name}
    if isinstance(e, Constant):
        return set()
    if isinstance(e, (Abs, Scale)):
        return expr_signals(e.arg)
    return expr_signals(e.left) | expr_signals(e.right)


def signals(phi: Formula) -> set[str]:
    """Names of all signals referenced by the formula."""
    names: set[str] = set()
    for node in walk(phi):
        if isinstance(node, Predicate):
            names |= expr_signals(node.lhs) | expr_signals(node.rhs)
    return names


def horizon(phi: Formula, time_step: float) -> int:
    """Number of samples past ``t`` that evaluating ``phi`` at ``t`` touches."""
    if isinstance(phi, (Predicate, TrueFormula)):
        return 0
    if isinstance(phi, Not):
        return horizon(phi.arg, time_step)
    if isinstance(phi, (And, Or, Implies)):
        return max(horizon(phi.left, time_step), horizon(phi.right, time_step))
    _, b = phi.interval.steps(time_step)
    if isinstance(phi, Until):
        # the left operand is only needed on [t, t'), t' <= t + b
        return max(b + horizon(phi.right, time_step), b - 1 + horizon(phi.left, time_step), 0)
    return b + horizon(phi.arg, time_step)


def depth(phi: Formula) -> int:
    return 1 + max((depth(c) for c in children(phi)), default=0)


# --------------------------------------------------------------------------
# derived operators, expanded to the core grammar (predicate, not, and, until)


def expand(phi: Formula) -> Formula:
    """Rewrite ``or``, ``implies``, ``eventually`` and ``always`` into the
    core grammar.  Used to cross-check the direct implementations."""
    if isinstance(phi, (Predicate, TrueFormula)):
        return phi
    if isinstance(phi, Not):
        return Not(expand(phi.arg))
    if isinstance(phi, And):
        return And(expand(phi.left), expand(phi.right))
    if isinstance(phi, Or):
        return Not(And(Not(expand(phi.left)), Not(expand(phi.right))))
    if isinstance(phi, Implies):
        return expand(Or(Not(phi.left), phi.right))
    if isinstance(phi, Until):
        return Until(phi.interval, expand(phi.left), expand(phi.right))
    if isinstance(phi, Eventually):
        return Until(phi.interval, TrueFormula(), expand(phi.arg))
    if isinstance(phi, Always):
        return Not(Until(phi.interval, TrueFormula(), Not(expand(phi.arg))))
    raise TypeError(f"not a formula: {phi!r}")


# --------------------------------------------------------------------------
# pretty printing; output re-parses to an equal AST


def _num(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def expr_to_text(e: Expr) -> str:
    if isinstance(e, SignalRef):
        return e.name
    if isinstance(e, Constant):
        return _num(e.value) if e.value >= 0 else f"({_num(e.value)})"
    if isinstance(e, Abs):
        return f"abs({expr_to_text(e.arg)})"
    if isinstance(e, Sum):
        return f"({expr_to_text(e.left)} + {expr_to_text(e.right)})"
    if isinstance(e, Difference):
        return f"({expr_to_text(e.left)} - {expr_to_text(e.right)})"
    if isinstance(e, Scale):
        factor = _num(e.factor) if e.factor >= 0 else f"({_num(e.factor)})"
        return f"({factor} * {expr_to_text(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def _interval(i: Interval) -> str:
    return f"[{_num(i.lo)},{_num(i.hi)}]"


def to_text(phi: Formula) -> str:
    """Fully parenthesized concrete syntax for ``phi``."""
    if isinstance(phi, Predicate):
        return f"{expr_to_text(phi.lhs)} {phi.relation} {expr_to_text(phi.rhs)}"
    if isinstance(phi, TrueFormula):
        return "true"
    if isinstance(phi, Not):
        return f"not ({to_text(phi.arg)})"
    if isinstance(phi, And):
        return f"({to_text(phi.left)}) and ({to_text(phi.right)})"
    if isinstance(phi, Or):
        return f"({to_text(phi.left)}) or ({to_text(phi.right)})"
    if isinstance(phi, Implies):
        return f"({to_text(phi.left)}) implies ({to_text(phi.right)})"
    if isinstance(phi, Until):
        return f"({to_text(phi.left)}) until{_interval(phi.interval)} ({to_text(phi.right)})"
    if isinstance(phi, Eventually):
        return f"eventually{_interval(phi.interval)} ({to_text(phi.arg)})"
    if isinstance(phi, Always):
        return f"always{_interval(phi.interval)} ({to_text(phi.arg)})"
    raise TypeError(f"not a formula: {phi!r}")
