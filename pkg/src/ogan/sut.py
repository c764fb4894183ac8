"""Systems under test: deterministic maps from a test vector to a trace.

Three built-in benchmarks have falsifying sets that are known analytically:

* ``quadratic-basin`` (SUT-A): a vector input, falsified inside a ball.
* ``first-order-speed`` (SUT-B): a throttle-driven first-order lag that must
  stay below a speed limit.
* ``deceptive-ridge`` (SUT-C): the same dynamics, falsified only by holding
  the speed inside a band for a long window.

``ExternalSut`` runs any command that reads the input signals as CSV on
standard input and writes the output trace as CSV on standard output.
"""

from __future__ import annotations

import math
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.signal import lfilter

from .signals import InputChannel, InputSpec, to_signals
from .stl.trace import SignalRange, Trace


class SutError(RuntimeError):
    """The SUT failed to produce a trace."""


@dataclass(frozen=True)
class OdeSystem:
    """``x' = f(x, u, t)`` with ``u`` the input values at time ``t``.

    ``f`` receives the state vector and a dict of input values and returns the
    derivative.  ``outputs`` maps output names to state indices.
    """

    derivative: Callable[[np.ndarray, Mapping[str, float], float], np.ndarray]
    initial: Sequence[float]
    outputs: Mapping[str, int]
    step: float = 0.01

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("integrator step must be positive")

    @property
    def dimension(self) -> int:
        return len(self.initial)


def integrate_rk4(system: OdeSystem, inputs: Trace, duration: float) -> Trace:
    """Classical fixed-step RK4, inputs held constant over each step.

    The output is sampled on the input grid; the integrator takes
    ``round(time_step / system.step)`` substeps per sample.
    """
    dt = inputs.time_step
    n = int(math.floor(duration / dt + 1e-9)) + 1
    if inputs.length < n:
        raise ValueError(f"input trace covers {inputs.length} samples, {n} needed")
    sub = max(1, int(round(dt / system.step)))
    h = dt / sub
    x = np.array(system.initial, dtype=float)
    states = np.empty((n, x.size))
    states[0] = x
    names = inputs.names
    columns = [inputs[name] for name in names]
    f = system.derivative
    # overflow is reported below as a SUT error, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n - 1):
            u = {name: float(col[i]) for name, col in zip(names, columns)}
            for s in range(sub):
                t = i * dt + s * h
                k1 = np.asarray(f(x, u, t), dtype=float)
                k2 = np.asarray(f(x + 0.5 * h * k1, u, t + 0.5 * h), dtype=float)
                k3 = np.asarray(f(x + 0.5 * h * k2, u, t + 0.5 * h), dtype=float)
                k4 = np.asarray(f(x + h * k3, u, t + h), dtype=float)
                x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise SutError(f"state became non-finite at t={(i + 1) * dt:g}")
            states[i + 1] = x
    return Trace(dt, {name: states[:, k] for name, k in system.outputs.items()})


def rk4_linear_scalar(a: float, b: float, u: np.ndarray, h: float, x0: float = 0.0) -> np.ndarray:
    """RK4 for ``x' = a x + b u`` with ``u`` constant over each step.

    For a linear system one RK4 step is exactly
    ``x+ = P(ah) x + h b Q(ah) u`` with the truncated exponential series
    ``P(z) = 1 + z + z^2/2 + z^3/6 + z^4/24`` and
    ``Q(z) = 1 + z/2 + z^2/6 + z^3/24``, so the whole run is one IIR filter.
    """
    z = a * h
    p = 1.0 + z + z * z / 2.0 + z ** 3 / 6.0 + z ** 4 / 24.0
    q = 1.0 + z / 2.0 + z * z / 6.0 + z ** 3 / 24.0
    u = np.asarray(u, dtype=float)
    x = np.empty(u.size)
    x[0] = x0
    if u.size > 1:
        # x[k+1] = p x[k] + h b q u[k], seeded with x0
        zi = np.array([p * x0])
        x[1:] = lfilter([h * b * q], [1.0, -p], u[:-1], zi=zi)[0]
    if not np.all(np.isfinite(x)):
        bad = int(np.argmin(np.isfinite(x)))
        raise SutError(f"state became non-finite at sample {bad}")
    return x


@dataclass(frozen=True)
class ExecutionResult:
    trace: Trace
    seconds: float


@dataclass
class SutDescriptor:
    """A named deterministic system with declared signal ranges and a paired
    default requirement."""

    name: str
    input_spec: InputSpec
    output_ranges: dict[str, SignalRange]
    simulate: Callable[[Trace], Trace]
    requirement: str = ""
    description: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ranges(self) -> dict[str, SignalRange]:
        return {**self.input_spec.ranges, **self.output_ranges}

    @property
    def dimension(self) -> int:
        return self.input_spec.dimension


def execute(sut: SutDescriptor, test) -> ExecutionResult:
    """Run ``test`` (normalized vector) and return the input+output trace."""
    x = np.asarray(test, dtype=float).reshape(-1)
    if x.size != sut.dimension:
        raise ValueError(f"test has dimension {x.size}, SUT {sut.name!r} expects {sut.dimension}")
    start = time.perf_counter()
    inputs = to_signals(x, sut.input_spec)
    try:
        outputs = sut.simulate(inputs)
    except SutError:
        raise
    except Exception as exc:  # noqa: BLE001 - any simulator failure is a SUT failure
        raise SutError(f"SUT {sut.name!r} failed: {exc}") from exc
    trace = inputs.merged(outputs)
    return ExecutionResult(trace, time.perf_counter() - start)


# -- SUT-A ------------------------------------------------------------------

BASIN_CENTER = (0.5, -0.4, 0.2)
BASIN_RADIUS = 0.15


def sut_quadratic_basin(center: Sequence[float] = BASIN_CENTER,
                        radius: float = BASIN_RADIUS) -> SutDescriptor:
    """``y = |u - center|`` for ``u`` in [-1, 1]^3; falsified inside the ball."""
    c = np.asarray(center, dtype=float)
    if c.shape != (3,):
        raise ValueError("center must be a 3-vector")
    if not radius > 0:
        raise ValueError("radius must be positive")
    if np.any(c - radius < -1.0) or np.any(c + radius > 1.0):
        raise ValueError("the ball must lie inside [-1, 1]^3")
    names = ("u1", "u2", "u3")
    unit = SignalRange(-1.0, 1.0)
    spec = InputSpec(tuple(InputChannel(n, unit) for n in names), duration=1.0, period=1.0, vector=True)

    def simulate(inputs: Trace) -> Trace:
        u = np.array([inputs[n][0] for n in names])
        y = float(np.linalg.norm(u - c))
        return Trace(inputs.time_step, {"y": np.full(inputs.length, y)})

    return SutDescriptor(
        name="quadratic-basin",
        input_spec=spec,
        output_ranges={"y": SignalRange(0.0, 2.0 * math.sqrt(3.0))},
        simulate=simulate,
        requirement=f"always[0,1] (y > {radius!r})",
        description="distance to a hidden point; falsified inside a ball",
        extra={"center": tuple(c.tolist()), "radius": radius,
               "falsifying_fraction": 4.0 / 3.0 * math.pi * radius ** 3 / 8.0},
    )


# -- SUT-B and SUT-C ----------------------------------------------------------

SPEED_GAIN = 0.05
SPEED_DRAG = 0.01
SPEED_DURATION = 30.0
SPEED_PERIOD = 0.01


def _speed_spec() -> InputSpec:
    return InputSpec((InputChannel("throttle", SignalRange(0.0, 100.0), segments=6),),
                     duration=SPEED_DURATION, period=SPEED_PERIOD)


def speed_system() -> OdeSystem:
    """``v' = 0.05 u - 0.01 v``, ``v(0) = 0``."""
    return OdeSystem(
        derivative=lambda x, u, t: np.array([SPEED_GAIN * u["throttle"] - SPEED_DRAG * x[0]]),
        initial=(0.0,),
        outputs={"v": 0},
        step=SPEED_PERIOD,
    )


def _simulate_speed(inputs: Trace) -> Trace:
    v = rk4_linear_scalar(-SPEED_DRAG, SPEED_GAIN, inputs["throttle"], inputs.time_step)
    return Trace(inputs.time_step, {"v": v})


def sut_first_order_speed() -> SutDescriptor:
    return SutDescriptor(
        name="first-order-speed",
        input_spec=_speed_spec(),
        output_ranges={"v": SignalRange(0.0, 130.0)},
        simulate=_simulate_speed,
        requirement="always[0,30] (v < 120)",
        description="first-order speed lag; must stay below 120",
    )


RIDGE_BAND = (45.0, 50.0)


def sut_deceptive_ridge(band: Sequence[float] = RIDGE_BAND) -> SutDescriptor:
    """Falsified only by holding ``v`` in the band over the whole of [10, 30]."""
    lo, hi = (float(b) for b in band)
    if not lo < hi:
        raise ValueError("band needs lo < hi")
    return SutDescriptor(
        name="deceptive-ridge",
        input_spec=_speed_spec(),
        output_ranges={"v": SignalRange(0.0, 130.0)},
        simulate=_simulate_speed,
        requirement=f"not (always[10,30] (v >= {lo:g} and v <= {hi:g}))",
        description="speed lag; falsified by holding v inside a band",
        extra={"band": (lo, hi)},
    )


# -- external process -----------------------------------------------------------

class ExternalSut:
    """Simulator in a child process: input signals as CSV on stdin, output
    trace as CSV on stdout (same ``time,<names>`` layout)."""

    def __init__(self, command: str | Sequence[str], timeout: float | None = 60.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout

    def __call__(self, inputs: Trace) -> Trace:
        try:
            proc = subprocess.run(self.command, input=inputs.to_csv(), capture_output=True,
                                  text=True, timeout=self.timeout, check=False)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise SutError(f"external SUT {self.command!r} failed to run: {exc}") from exc
        if proc.returncode != 0:
            raise SutError(f"external SUT exited with {proc.returncode}: {proc.stderr.strip()}")
        try:
            out = Trace.from_csv(proc.stdout)
        except Exception as exc:  # noqa: BLE001
            raise SutError(f"external SUT produced an unreadable trace: {exc}") from exc
        if out.length != inputs.length:
            raise SutError(f"external SUT returned {out.length} samples, expected {inputs.length}")
        return Trace(inputs.time_step, out.components)


def external_sut(command: str | Sequence[str], input_spec: InputSpec,
                 output_ranges: Mapping[str, SignalRange], requirement: str = "",
                 name: str = "external") -> SutDescriptor:
    return SutDescriptor(name=name, input_spec=input_spec, output_ranges=dict(output_ranges),
                         simulate=ExternalSut(command), requirement=requirement)


REGISTRY: dict[str, Callable[..., SutDescriptor]] = {
    "quadratic-basin": sut_quadratic_basin,
    "first-order-speed": sut_first_order_speed,
    "deceptive-ridge": sut_deceptive_ridge,
}
ALIASES = {"sut-a": "quadratic-basin", "sut-b": "first-order-speed", "sut-c": "deceptive-ridge"}


def get_sut(name: str, **params) -> SutDescriptor:
    key = ALIASES.get(name.lower(), name)
    try:
        factory = REGISTRY[key]
    except KeyError:
        raise KeyError(f"unknown SUT {name!r}; known: {sorted(REGISTRY)}") from None
    return factory(**params)
