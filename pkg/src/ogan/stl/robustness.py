"""Quantitative semantics: traditional robustness, effective ranges and the
scaled robustness in [0, 1].

Every node is evaluated once, as a vector over the contiguous block of
sample indices its parent needs, so the cost is O(|phi| * length * window).
Alongside the robustness value each node carries the effective range
``[lo, hi]`` inherited from its witness: the operand (for and/or) or the time
point (for temporal operators) that realises the min/max.  Ties go to the
left operand and to the least time index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .formula import (
    Abs,
    Always,
    And,
    Constant,
    DegenerateRangeError,
    Difference,
    Eventually,
    Expr,
    Formula,
    HorizonError,
    Implies,
    MissingRangeError,
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
from .trace import SignalRange, Trace

INF = math.inf


@dataclass(frozen=True)
class RobustnessResult:
    value: float
    effective_lo: float
    effective_hi: float
    scaled: float

    @property
    def falsified(self) -> bool:
        """Zero robustness counts as falsified for strict and non-strict
        relations alike; confirm with the Boolean monitor when it matters."""
        return self.value <= 0


def scale_robustness(value: float, effective_hi: float) -> float:
    if value <= 0:
        return 0.0
    if math.isinf(effective_hi):
        # only reachable through ``true``; nothing to normalise against
        return 1.0
    if effective_hi <= 0:
        raise DegenerateRangeError(
            f"positive robustness {value} with effective upper bound {effective_hi}; "
            "check the declared signal ranges"
        )
    # a trace leaving its declared ranges can push the ratio past 1
    return min(1.0, value / effective_hi)


# --------------------------------------------------------------------------
# expressions


def expr_range(e: Expr, ranges: Mapping[str, SignalRange]) -> tuple[float, float]:
    """Interval enclosure of an expression given the signal ranges."""
    if isinstance(e, SignalRef):
        r = ranges[e.name]
        return r.lo, r.hi
    if isinstance(e, Constant):
        return e.value, e.value
    if isinstance(e, Abs):
        lo, hi = expr_range(e.arg, ranges)
        if lo >= 0:
            return lo, hi
        if hi <= 0:
            return -hi, -lo
        return 0.0, max(-lo, hi)
    if isinstance(e, Sum):
        a, b = expr_range(e.left, ranges), expr_range(e.right, ranges)
        return a[0] + b[0], a[1] + b[1]
    if isinstance(e, Difference):
        a, b = expr_range(e.left, ranges), expr_range(e.right, ranges)
        return a[0] - b[1], a[1] - b[0]
    if isinstance(e, Scale):
        lo, hi = expr_range(e.arg, ranges)
        if e.factor >= 0:
            return e.factor * lo, e.factor * hi
        return e.factor * hi, e.factor * lo
    raise TypeError(f"not an expression: {e!r}")


def expr_values(e: Expr, trace: Trace, start: int, count: int) -> np.ndarray:
    if isinstance(e, SignalRef):
        return np.asarray(trace.components[e.name][start:start + count], dtype=float)
    if isinstance(e, Constant):
        return np.full(count, float(e.value))
    if isinstance(e, Abs):
        return np.abs(expr_values(e.arg, trace, start, count))
    if isinstance(e, Sum):
        return expr_values(e.left, trace, start, count) + expr_values(e.right, trace, start, count)
    if isinstance(e, Difference):
        return expr_values(e.left, trace, start, count) - expr_values(e.right, trace, start, count)
    if isinstance(e, Scale):
        return e.factor * expr_values(e.arg, trace, start, count)
    raise TypeError(f"not an expression: {e!r}")


# --------------------------------------------------------------------------
# formulas


class _Evaluator:
    def __init__(self, trace: Trace, ranges: Mapping[str, SignalRange]):
        self.trace = trace
        self.ranges = ranges
        self.dt = trace.time_step
        self.memo: dict[tuple[int, int, int], tuple] = {}

    def eval(self, phi: Formula, start: int, count: int):
        """Arrays (rho, lo, hi) for sample indices start .. start+count-1."""
        key = (id(phi), start, count)
        hit = self.memo.get(key)
        if hit is None:
            hit = self.memo[key] = self._eval(phi, start, count)
        return hit

    def _eval(self, phi: Formula, start: int, count: int):
        if isinstance(phi, TrueFormula):
            inf = np.full(count, INF)
            return inf, inf, inf
        if isinstance(phi, Predicate):
            return self._predicate(phi, start, count)
        if isinstance(phi, Not):
            rho, lo, hi = self.eval(phi.arg, start, count)
            return -rho, -hi, -lo
        if isinstance(phi, And):
            ra, la, ha = self.eval(phi.left, start, count)
            rb, lb, hb = self.eval(phi.right, start, count)
            left = ra <= rb
            return np.minimum(ra, rb), np.where(left, la, lb), np.where(left, ha, hb)
        if isinstance(phi, Or):
            # not(not a and not b): the left operand wins ties
            ra, la, ha = self.eval(phi.left, start, count)
            rb, lb, hb = self.eval(phi.right, start, count)
            left = ra >= rb
            return np.maximum(ra, rb), np.where(left, la, lb), np.where(left, ha, hb)
        if isinstance(phi, Implies):
            ra, la, ha = self.eval(phi.left, start, count)
            rb, lb, hb = self.eval(phi.right, start, count)
            left = -ra >= rb
            return np.maximum(-ra, rb), np.where(left, -ha, lb), np.where(left, -la, hb)
        if isinstance(phi, (Eventually, Always)):
            return self._window(phi, start, count)
        if isinstance(phi, Until):
            return self._until(phi, start, count)
        raise TypeError(f"not a formula: {phi!r}")

    def _predicate(self, phi: Predicate, start: int, count: int):
        x = expr_values(phi.lhs, self.trace, start, count)
        y = expr_values(phi.rhs, self.trace, start, count)
        xl, xh = expr_range(phi.lhs, self.ranges)
        yl, yh = expr_range(phi.rhs, self.ranges)
        if phi.relation in (">=", ">"):
            rho, lo, hi = x - y, xl - yh, xh - yl
        else:
            rho, lo, hi = y - x, yl - xh, yh - xl
        return rho, np.full(count, lo), np.full(count, hi)

    def _window(self, phi, start: int, count: int):
        a, b = phi.interval.steps(self.dt)
        width = b - a + 1
        rho, lo, hi = self.eval(phi.arg, start + a, count + b - a)
        windows = sliding_window_view(rho, width)[:count]
        # argmin/argmax return the first (least) index on ties
        idx = windows.argmax(axis=1) if isinstance(phi, Eventually) else windows.argmin(axis=1)
        pos = np.arange(count) + idx
        return rho[pos], lo[pos], hi[pos]

    def _until(self, phi: Until, start: int, count: int):
        a, b = phi.interval.steps(self.dt)
        rows = np.arange(count)
        r_rho, r_lo, r_hi = self.eval(phi.right, start + a, count + b - a)
        psi = sliding_window_view(r_rho, b - a + 1)[:count]

        # prefix[t, j] = min of the left operand over [t, t + j), +inf when j = 0
        prefix = np.full((count, b + 1), INF)
        if b >= 1:
            l_rho, l_lo, l_hi = self.eval(phi.left, start, count + b - 1)
            left_win = sliding_window_view(l_rho, b)[:count]
            prefix[:, 1:] = np.minimum.accumulate(left_win, axis=1)
        prefix = prefix[:, a:]

        value = np.minimum(psi, prefix)
        u = value.argmax(axis=1)
        rho = value[rows, u]
        psi_wins = psi[rows, u] <= prefix[rows, u]
        lo = r_lo[rows + u].copy()
        hi = r_hi[rows + u].copy()
        if not psi_wins.all():
            # least index of the left operand's minimum on [t, t + a + u)
            span = a + u
            target = prefix[rows, u]
            hit = (left_win == target[:, None]) & (np.arange(b)[None, :] < span[:, None])
            h = hit.argmax(axis=1)
            lo = np.where(psi_wins, lo, l_lo[rows + h])
            hi = np.where(psi_wins, hi, l_hi[rows + h])
        return rho, lo, hi


def eval_robustness(
    phi: Formula,
    trace: Trace,
    ranges: Mapping[str, SignalRange],
    t: int = 0,
) -> RobustnessResult:
    """Robustness of ``phi`` on ``trace`` at sample ``t`` with its effective
    range and scaled value."""
    used = signals(phi)
    missing = used - set(trace.components)
    if missing:
        raise UnknownSignalError(f"trace has no signal(s) {sorted(missing)}")
    unranged = used - set(ranges)
    if unranged:
        raise MissingRangeError(f"no declared range for signal(s) {sorted(unranged)}")
    need = horizon(phi, trace.time_step)
    if t < 0 or t + need >= trace.length:
        raise HorizonError(
            f"formula needs samples up to index {t + need}, trace has {trace.length}"
        )
    rho, lo, hi = _Evaluator(trace, ranges).eval(phi, t, 1)
    value, lo, hi = float(rho[0]), float(lo[0]), float(hi[0])
    return RobustnessResult(value, lo, hi, scale_robustness(value, hi))


def strict_equality_fixup(phi: Formula) -> Formula:
    """Identity transform, kept as the documented hook for equality handling.

    Robustness cannot tell ``X >= Y`` from ``X > Y`` when ``X == Y``: both
    give 0.  Such a trace is one arbitrarily small perturbation away from
    violating either relation, so zero robustness is counted as falsified
    (``RobustnessResult.falsified``) for strict and non-strict relations.
    """
    return phi
