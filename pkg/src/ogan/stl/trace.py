"""Discrete-time execution traces and declared signal ranges."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .formula import StlError


@dataclass(frozen=True)
class SignalRange:
    """Declared value range ``[lo, hi]`` of one signal component."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"signal range needs lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled multi-component signal.

    ``components`` maps a signal name to its samples; all components share
    the same length and sampling period ``time_step``.  Arrays are copied and
    made read-only on construction.
    """

    time_step: float
    components: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.time_step > 0 and math.isfinite(self.time_step)):
            raise StlError(f"time step must be positive, got {self.time_step}")
        if not self.components:
            raise StlError("a trace needs at least one component")
        frozen = {}
        lengths = set()
        for name, values in self.components.items():
            arr = np.array(values, dtype=float).reshape(-1)
            arr.setflags(write=False)
            frozen[name] = arr
            lengths.add(arr.size)
        if len(lengths) != 1:
            raise StlError(f"trace components have different lengths: {sorted(lengths)}")
        if lengths.pop() < 1:
            raise StlError("trace components must have at least one sample")
        object.__setattr__(self, "components", frozen)

    @property
    def length(self) -> int:
        return next(iter(self.components.values())).size

    @property
    def names(self) -> list[str]:
        return list(self.components)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.length) * self.time_step

    def __getitem__(self, name: str) -> np.ndarray:
        return self.components[name]

    def merged(self, other: "Trace") -> "Trace":
        if other.length != self.length or not math.isclose(other.time_step, self.time_step):
            raise StlError("cannot merge traces on different grids")
        return Trace(self.time_step, {**self.components, **other.components})

    # -- CSV: header ``time,<name1>,<name2>,...``
    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time", *self.names])
        cols = [self.components[n] for n in self.names]
        for i, t in enumerate(self.times):
            writer.writerow([repr(float(t)), *(repr(float(c[i])) for c in cols)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source: str | Path | io.TextIOBase) -> "Trace":
        if isinstance(source, io.TextIOBase):
            text = source.read()
        elif isinstance(source, Path) or "\n" not in str(source):
            text = Path(source).read_text()
        else:
            text = str(source)
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows or rows[0][0].strip() != "time":
            raise StlError("trace CSV must start with a 'time' column header")
        header = [h.strip() for h in rows[0]]
        data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] != len(header):
            raise StlError("trace CSV has no samples or ragged rows")
        times = data[:, 0]
        if len(times) > 1:
            steps = np.diff(times)
            dt = float(steps.mean())
            if dt <= 0 or not np.allclose(steps, dt, rtol=1e-6, atol=1e-9):
                raise StlError("trace CSV time column is not uniformly increasing")
        else:
            dt = 1.0
        return cls(dt, {name: data[:, j] for j, name in enumerate(header) if j > 0})
