"""Survival statistics for executions-to-falsification.

A replica that exhausts its budget ``B`` without falsifying is a censored
observation at ``B``.  The Kaplan-Meier curve then ends at ``1 - FR``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import chi2

Z95 = 1.959963984540054


@dataclass(frozen=True)
class SurvivalData:
    times: tuple[int, ...]
    censored: tuple[bool, ...]
    budget: int

    def __post_init__(self):
        times = tuple(int(t) for t in self.times)
        cens = tuple(bool(c) for c in self.censored)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "censored", cens)
        if len(times) != len(cens):
            raise ValueError("times and censored flags differ in length")
        if not times:
            raise ValueError("survival data needs at least one replica")
        for t, c in zip(times, cens):
            if not 1 <= t <= self.budget:
                raise ValueError(f"event time {t} outside [1, {self.budget}]")
            if c and t != self.budget:
                raise ValueError("censored replicas must have time equal to the budget")

    @classmethod
    def from_outcomes(cls, outcomes: Iterable, budget: int | None = None) -> "SurvivalData":
        """From objects (or dicts) with ``executions`` and ``falsified``."""
        times, cens = [], []
        for o in outcomes:
            get = o.get if isinstance(o, dict) else lambda k, o=o: getattr(o, k)
            times.append(int(get("executions")))
            cens.append(not bool(get("falsified")))
            budget = budget if budget is not None else int(get("budget"))
        if budget is None:
            raise ValueError("survival data needs at least one replica")
        return cls(tuple(times), tuple(cens), budget)

    @property
    def size(self) -> int:
        return len(self.times)

    @property
    def events(self) -> int:
        return sum(not c for c in self.censored)


@dataclass(frozen=True)
class SurvivalCurve:
    """Values for t = 0..B (index t)."""

    survival: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray

    @property
    def budget(self) -> int:
        return self.survival.size - 1

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "S", "lo", "hi"])
        for t in range(self.survival.size):
            w.writerow([t, f"{self.survival[t]:.6f}", f"{self.lower[t]:.6f}", f"{self.upper[t]:.6f}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _loglog_bounds(s: float, greenwood_sum: float) -> tuple[float, float]:
    if s >= 1.0 or greenwood_sum == 0.0:
        return s, s
    if s <= 0.0:
        return 0.0, 0.0
    se = math.sqrt(greenwood_sum) / abs(math.log(s))
    return s ** math.exp(Z95 * se), s ** math.exp(-Z95 * se)


def kaplan_meier(data: SurvivalData) -> SurvivalCurve:
    """Product-limit estimate with Greenwood variance and log(-log) bounds."""
    B = data.budget
    times = np.asarray(data.times)
    event = ~np.asarray(data.censored)
    d = np.bincount(times[event], minlength=B + 1)[: B + 1]
    # at risk at i: time >= i
    leaving = np.bincount(times, minlength=B + 2)[: B + 2]
    n = data.size - np.concatenate([[0], np.cumsum(leaving)[:-1]])[: B + 1]
    surv = np.ones(B + 1)
    lo = np.ones(B + 1)
    hi = np.ones(B + 1)
    s, gw = 1.0, 0.0
    for i in range(1, B + 1):
        if d[i]:
            s *= 1.0 - d[i] / n[i]
            if n[i] > d[i]:
                gw += d[i] / (n[i] * (n[i] - d[i]))
        surv[i] = s
        lo[i], hi[i] = _loglog_bounds(s, gw)
    return SurvivalCurve(surv, lo, hi, n.astype(int), d.astype(int))


@dataclass(frozen=True)
class Rate:
    value: float
    lower: float
    upper: float

    def __iter__(self):
        return iter((self.value, self.lower, self.upper))

    def rounded(self, digits: int = 2) -> tuple[float, float, float]:
        return tuple(round(v + 0.0, digits) for v in self)


def falsification_rate(data: SurvivalData) -> Rate:
    """Fraction of falsifying replicas with the 95% interval of ``1 - S(B)``."""
    curve = kaplan_meier(data)
    fr = data.events / data.size
    return Rate(fr, float(1.0 - curve.upper[-1]), float(1.0 - curve.lower[-1]))


def mean_executions(data: SurvivalData) -> float | None:
    """Mean executions over falsifying replicas; ``None`` if there are none."""
    ev = [t for t, c in zip(data.times, data.censored) if not c]
    return float(np.mean(ev)) if ev else None


@dataclass(frozen=True)
class LogRank:
    statistic: float
    p_value: float
    observed_minus_expected: float
    variance: float


def logrank_test(a: SurvivalData, b: SurvivalData) -> LogRank:
    """Two-group log-rank test against the chi-square(1) tail."""
    ta, ea = np.asarray(a.times), ~np.asarray(a.censored)
    tb, eb = np.asarray(b.times), ~np.asarray(b.censored)
    event_times = np.unique(np.concatenate([ta[ea], tb[eb]]))
    o_e, var = 0.0, 0.0
    for t in event_times:
        na, nb = int(np.sum(ta >= t)), int(np.sum(tb >= t))
        da, db = int(np.sum(ta[ea] == t)), int(np.sum(tb[eb] == t))
        n, d = na + nb, da + db
        o_e += da - d * na / n
        if n > 1:
            var += d * (na / n) * (nb / n) * (n - d) / (n - 1)
    if var <= 0.0:
        return LogRank(0.0, 1.0, o_e, var)
    stat = o_e * o_e / var
    return LogRank(stat, float(chi2.sf(stat, 1)), o_e, var)


def overlay_csv(curves: Sequence[tuple[str, SurvivalCurve]], path: str | Path | None = None) -> str:
    """Curves side by side: ``t,<name>_S,<name>_lo,<name>_hi,...``."""
    length = max(c.survival.size for _, c in curves)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *(f"{name}_{k}" for name, _ in curves for k in ("S", "lo", "hi"))])
    for t in range(length):
        row = [t]
        for _, c in curves:
            i = min(t, c.survival.size - 1)
            row += [f"{c.survival[i]:.6f}", f"{c.lower[i]:.6f}", f"{c.upper[i]:.6f}"]
        w.writerow(row)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
