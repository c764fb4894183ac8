"""Normalized search space and piecewise-constant input signals.

A test is a vector in [-1, 1]^D.  Each input channel contributes
``segments`` coordinates, one per equal-length piece of its signal; the
vector is the concatenation of the channels in declaration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stl.trace import SignalRange, Trace


def normalize(value, rng: SignalRange):
    """Map ``rng.lo -> -1`` and ``rng.hi -> 1`` linearly."""
    a, b = rng.lo, rng.hi
    return _scalar((-2.0 * np.asarray(value, dtype=float) + a + b) / (a - b))


def denormalize(x, rng: SignalRange):
    a, b = rng.lo, rng.hi
    return _scalar((np.asarray(x, dtype=float) * (b - a) + a + b) / 2.0)


def _scalar(arr: np.ndarray):
    return float(arr) if arr.ndim == 0 else arr


@dataclass(frozen=True)
class InputChannel:
    name: str
    range: SignalRange
    segments: int = 1

    def __post_init__(self):
        if self.segments < 1:
            raise ValueError(f"channel {self.name!r} needs at least one segment")


@dataclass(frozen=True)
class InputSpec:
    """Shape of a SUT's input.

    ``vector=True`` marks a plain vector input (one segment per channel) that
    is not a time series; it is still materialised as a constant signal so
    the rest of the pipeline needs no special case.
    """

    channels: tuple[InputChannel, ...]
    duration: float
    period: float = 0.01
    vector: bool = False

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.channels:
            raise ValueError("an input spec needs at least one channel")
        if not self.duration > 0 or not self.period > 0:
            raise ValueError("duration and period must be positive")
        if self.vector and any(c.segments != 1 for c in self.channels):
            raise ValueError("vector inputs have exactly one segment per channel")

    @property
    def dimension(self) -> int:
        return sum(c.segments for c in self.channels)

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.duration / self.period + 1e-9)) + 1

    @property
    def ranges(self) -> dict[str, SignalRange]:
        return {c.name: c.range for c in self.channels}

    def segment_index(self, segments: int) -> np.ndarray:
        """Segment that each sample falls into (half-open pieces, last piece
        closed at the right endpoint)."""
        steps = self.duration / self.period
        i = np.arange(self.n_samples)
        idx = np.floor(i * segments / steps + 1e-9).astype(int)
        return np.minimum(idx, segments - 1)

    def split(self, test) -> list[np.ndarray]:
        """Per-channel slices of the normalized test vector."""
        x = np.asarray(test, dtype=float).reshape(-1)
        if x.size != self.dimension:
            raise ValueError(f"test has dimension {x.size}, input spec expects {self.dimension}")
        out, k = [], 0
        for c in self.channels:
            out.append(x[k:k + c.segments])
            k += c.segments
        return out


def to_signals(test, spec: InputSpec) -> Trace:
    """Denormalize ``test`` and sample it as piecewise-constant signals."""
    parts = spec.split(test)
    comps = {}
    for channel, part in zip(spec.channels, parts):
        values = denormalize(part, channel.range)
        comps[channel.name] = values[spec.segment_index(channel.segments)]
    return Trace(spec.period, comps)


def clip_test(test) -> np.ndarray:
    return np.clip(np.asarray(test, dtype=float), -1.0, 1.0)
