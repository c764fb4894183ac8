"""Boolean satisfaction of STL formulas over discrete-time traces.

Written directly from the inductive semantics, sample by sample, without
sharing code with the robustness monitor so the two can check each other.
The until operator requires its left operand on ``[t, t')`` where ``t'`` is
the witness time of the right operand, matching the robustness definition.
"""

from __future__ import annotations

from .formula import (
    Abs,
    Always,
    And,
    Constant,
    Difference,
    Eventually,
    Expr,
    Formula,
    HorizonError,
    Implies,
    Not,
    Or,
    Predicate,
    Scale,
    SignalRef,
    Sum,
    TrueFormula,
    UnknownSignalError,
    Until,
    horizon,
    signals,
)
from .trace import Trace


def _expr(e: Expr, trace: Trace, t: int) -> float:
    if isinstance(e, SignalRef):
        return float(trace.components[e.name][t])
    if isinstance(e, Constant):
        return e.value
    if isinstance(e, Abs):
        return abs(_expr(e.arg, trace, t))
    if isinstance(e, Sum):
        return _expr(e.left, trace, t) + _expr(e.right, trace, t)
    if isinstance(e, Difference):
        return _expr(e.left, trace, t) - _expr(e.right, trace, t)
    if isinstance(e, Scale):
        return e.factor * _expr(e.arg, trace, t)
    raise TypeError(f"not an expression: {e!r}")


class _Monitor:
    def __init__(self, trace: Trace):
        self.trace = trace
        self.dt = trace.time_step
        self.memo: dict[tuple[int, int], bool] = {}

    def sat(self, phi: Formula, t: int) -> bool:
        key = (id(phi), t)
        hit = self.memo.get(key)
        if hit is None:
            hit = self.memo[key] = self._sat(phi, t)
        return hit

    def _sat(self, phi: Formula, t: int) -> bool:
        if isinstance(phi, TrueFormula):
            return True
        if isinstance(phi, Predicate):
            x = _expr(phi.lhs, self.trace, t)
            y = _expr(phi.rhs, self.trace, t)
            return {">=": x >= y, ">": x > y, "<=": x <= y, "<": x < y}[phi.relation]
        if isinstance(phi, Not):
            return not self.sat(phi.arg, t)
        if isinstance(phi, And):
            return self.sat(phi.left, t) and self.sat(phi.right, t)
        if isinstance(phi, Or):
            return self.sat(phi.left, t) or self.sat(phi.right, t)
        if isinstance(phi, Implies):
            return (not self.sat(phi.left, t)) or self.sat(phi.right, t)
        a, b = phi.interval.steps(self.dt)
        if isinstance(phi, Eventually):
            return any(self.sat(phi.arg, t + k) for k in range(a, b + 1))
        if isinstance(phi, Always):
            return all(self.sat(phi.arg, t + k) for k in range(a, b + 1))
        if isinstance(phi, Until):
            # scan t' = t, t+1, ..., t+b while the left operand has held on [t, t')
            for k in range(0, b + 1):
                if k >= a and self.sat(phi.right, t + k):
                    return True
                if k == b or not self.sat(phi.left, t + k):
                    return False
            return False
        raise TypeError(f"not a formula: {phi!r}")


def eval_boolean(phi: Formula, trace: Trace, t: int = 0) -> bool:
    """Return whether ``trace`` satisfies ``phi`` at sample index ``t``."""
    missing = signals(phi) - set(trace.components)
    if missing:
        raise UnknownSignalError(f"trace has no signal(s) {sorted(missing)}")
    need = horizon(phi, trace.time_step)
    if t < 0 or t + need >= trace.length:
        raise HorizonError(
            f"formula needs samples up to index {t + need}, trace has {trace.length}"
        )
    return _Monitor(trace).sat(phi, t)
