"""Online generative falsification.

A discriminator learns to predict the scaled robustness of a test from the
tests executed so far; a generator is then trained against the frozen
discriminator to propose tests with low predicted robustness.  Both networks
are re-created from scratch before every new test.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .nn import Adam, conv_discriminator, dense_discriminator, generator, init_weights, loss_and_grad
from .stl import Formula, eval_boolean, eval_robustness, parse_stl
from .sut import SutDescriptor, SutError, execute

SAMPLERS = ("uniform", "lhs")
VARIANTS = ("adaptive", "nonadaptive")
STOPS = ("first-falsification", "budget-exhausted")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OganConfig:
    budget: int = 300
    initial: int = 75
    sample_probability: float = 0.0
    batch_size: int = 32
    discriminator_epochs: int = 15
    generator_epochs: int = 375
    alpha: float = 0.95
    latent_dim: int = 20
    lr_discriminator: float = 0.005
    lr_generator: float = 0.0001
    sampler: str = "uniform"
    variant: str = "adaptive"
    stop: str = "first-falsification"
    seed: int = 0
    discriminator: str = "auto"  # auto | conv | dense
    dtype: str = "float32"

    def __post_init__(self):
        if not 0 < self.initial <= self.budget:
            raise ConfigError(f"need 0 < initial <= budget, got {self.initial} and {self.budget}")
        if not 0.0 <= self.sample_probability <= 1.0:
            raise ConfigError("sample_probability must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.latent_dim < 1 or self.batch_size < 1:
            raise ConfigError("latent_dim and batch_size must be positive")
        if self.discriminator_epochs < 0 or self.generator_epochs < 0:
            raise ConfigError("epoch counts must be nonnegative")
        for value, allowed, what in ((self.sampler, SAMPLERS, "sampler"),
                                     (self.variant, VARIANTS, "variant"),
                                     (self.stop, STOPS, "stop"),
                                     (self.discriminator, ("auto", "conv", "dense"), "discriminator"),
                                     (self.dtype, ("float32", "float64"), "dtype")):
            if value not in allowed:
                raise ConfigError(f"{what} must be one of {allowed}, got {value!r}")

    def with_seed(self, seed: int) -> "OganConfig":
        return replace(self, seed=int(seed))


# -- sampling -----------------------------------------------------------------

def sample_uniform(dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points uniform on [-1, 1]^dim, shape (n, dim)."""
    if n < 0:
        raise ValueError("sample count must be nonnegative")
    return rng.uniform(-1.0, 1.0, size=(n, dim))


def sample_lhs(dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube: per dimension, one point in each of the ``n`` equal
    strata of [-1, 1], strata assigned by an independent permutation."""
    if n < 1:
        raise ValueError("LHS needs at least one point")
    strata = np.stack([rng.permutation(n) for _ in range(dim)], axis=1)
    u = (strata + rng.uniform(0.0, 1.0, size=(n, dim))) / n
    return np.clip(2.0 * u - 1.0, -1.0, 1.0)


def sample_tests(kind: str, dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if kind == "lhs" and n > 1:
        return sample_lhs(dim, n, rng)
    # a single LHS point is just a uniform point
    return sample_uniform(dim, n, rng)


def acceptance_thresholds(alpha: float, k: int) -> np.ndarray:
    """Threshold after each of ``k`` pushes, via ``t <- 1 - alpha (1 - t)``."""
    out = np.empty(k)
    t = 0.0
    for i in range(k):
        t = 1.0 - alpha * (1.0 - t)
        out[i] = t
    return out


# -- state and records ---------------------------------------------------------

@dataclass
class TestRecord:
    index: int  # 1-based execution count at which this test was executed
    test: list[float]
    robustness: float  # scaled, in [0, 1]
    raw: float  # traditional robustness
    falsified: bool
    stage: str  # initial | generator | monte-carlo | random
    used_for_training: bool
    t_generation: float = 0.0
    t_training: float = 0.0
    t_execution: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FalsificationOutcome:
    falsified: bool
    executions: int  # executions to first falsification, or the budget if censored
    budget: int
    executions_used: int
    records: list[TestRecord]
    algorithm: str = ""
    seed: int = 0

    @property
    def censored(self) -> bool:
        return not self.falsified

    @property
    def falsifying_test(self) -> np.ndarray | None:
        for r in self.records:
            if r.falsified and r.index == self.executions:
                return np.array(r.test)
        return None


@dataclass
class OganState:
    tests: list[np.ndarray] = field(default_factory=list)
    robustness: list[float] = field(default_factory=list)
    generator: object = None
    discriminator: object = None
    executions: int = 0

    def add(self, test: np.ndarray, robustness: float):
        self.tests.append(np.asarray(test, dtype=float))
        self.robustness.append(float(robustness))


class _Streams:
    """Independent RNG streams derived from one master seed."""

    def __init__(self, seed: int):
        children = np.random.SeedSequence(int(seed)).spawn(4)
        self.sampling, self.latent, self.init, self.coin = (np.random.default_rng(c) for c in children)


# -- execution helpers ----------------------------------------------------------

class Evaluator:
    """Executes tests on a SUT and scores them against a requirement."""

    def __init__(self, sut: SutDescriptor, requirement: str | Formula | None = None):
        self.sut = sut
        text = requirement if requirement is not None else sut.requirement
        self.formula = parse_stl(text) if isinstance(text, str) else text
        self.ranges = sut.ranges

    def __call__(self, test) -> tuple[float, float, bool, float]:
        """Returns (scaled, raw, falsified, seconds)."""
        start = time.perf_counter()
        trace = execute(self.sut, test).trace
        res = eval_robustness(self.formula, trace, self.ranges)
        # a nonpositive value is confirmed with the Boolean monitor
        falsified = res.value <= 0 and not eval_boolean(self.formula, trace)
        return res.scaled, res.value, bool(falsified), time.perf_counter() - start


def _discriminator_kind(config: OganConfig, sut: SutDescriptor) -> str:
    if config.discriminator != "auto":
        return config.discriminator
    return "dense" if sut.input_spec.vector else "conv"


def build_models(config: OganConfig, dim: int, kind: str, rng: np.random.Generator):
    dtype = np.dtype(config.dtype)
    g = generator(config.latent_dim, dim, dtype=dtype)
    d = conv_discriminator(dim, dtype=dtype) if kind == "conv" else dense_discriminator(dim, dtype=dtype)
    init_weights(g, rng)
    init_weights(d, rng)
    return g, d


def train_models(state: OganState, config: OganConfig, dim: int, kind: str,
                 init_rng: np.random.Generator, latent_rng: np.random.Generator):
    """Fresh networks; discriminator on all of (T, F), then the generator
    against the frozen discriminator with target robustness 0."""
    if not state.tests:
        raise ValueError("cannot train on an empty test suite")
    g, d = build_models(config, dim, kind, init_rng)
    x = np.asarray(state.tests, dtype=g.dtype)
    y = np.asarray(state.robustness, dtype=float).reshape(-1, 1)
    opt_d = Adam(d, lr=config.lr_discriminator)
    for _ in range(config.discriminator_epochs):
        _, grad = loss_and_grad(d(x), y)
        d.backward(grad)
        opt_d.step()
    d.frozen = True
    opt_g = Adam(g, lr=config.lr_generator)
    for _ in range(config.generator_epochs):
        z = latent_rng.uniform(-1.0, 1.0, size=(config.batch_size, config.latent_dim))
        _, grad = loss_and_grad(d(g(z)), 0.0)
        g.backward(d.backward(grad))
        opt_g.step()
    state.generator, state.discriminator = g, d


def generator_candidate(state: OganState, config: OganConfig, latent_rng: np.random.Generator,
                        chunk: int = 32, trace: list | None = None) -> np.ndarray:
    """Queue-based acceptance: draw candidates until the best estimate falls
    below a threshold that rises towards 1.  ``trace`` (if given) collects
    (estimate, threshold) per push."""
    g, d = state.generator, state.discriminator
    queue: list = []
    threshold = 0.0
    pushes = 0
    while True:
        z = latent_rng.uniform(-1.0, 1.0, size=(chunk, config.latent_dim))
        cand = g(z)
        est = d(cand).reshape(-1)
        for i in range(chunk):
            heapq.heappush(queue, (float(est[i]), pushes, i, cand[i]))
            pushes += 1
            threshold = 1.0 - config.alpha * (1.0 - threshold)
            if trace is not None:
                trace.append((float(est[i]), threshold))
            if queue[0][0] <= threshold:
                return np.asarray(queue[0][3], dtype=float)


def sample_test(state: OganState, config: OganConfig, dim: int, streams: "_Streams",
                force: str | None = None) -> tuple[np.ndarray, str]:
    """One new test and the branch that produced it (``monte-carlo`` or
    ``generator``).  ``force`` selects a branch without tossing the coin."""
    branch = force
    if branch is None:
        branch = "monte-carlo" if streams.coin.random() < config.sample_probability else "generator"
    if branch == "monte-carlo":
        return sample_tests(config.sampler, dim, 1, streams.sampling)[0], branch
    return generator_candidate(state, config, streams.latent), branch


# -- main loops -------------------------------------------------------------------

def _initial_phase(evaluate: Evaluator, config: OganConfig, streams: _Streams,
                   state: OganState, records: list[TestRecord]) -> int | None:
    dim = evaluate.sut.dimension
    start = time.perf_counter()
    tests = sample_tests(config.sampler, dim, config.initial, streams.sampling)
    t_gen = (time.perf_counter() - start) / config.initial
    for x in tests:
        scaled, raw, bad, secs = evaluate(x)
        state.executions += 1
        state.add(x, scaled)
        records.append(TestRecord(state.executions, x.tolist(), scaled, raw, bad, "initial", True,
                                  t_gen, 0.0, secs))
        if bad and config.stop == "first-falsification":
            return state.executions
    return None


def _first_falsification(records: list[TestRecord], stream: Callable[[TestRecord], bool]) -> int | None:
    hits = [r.index for r in records if r.falsified and stream(r)]
    return min(hits) if hits else None


def run_falsification(sut: SutDescriptor, requirement: str | Formula | None, config: OganConfig,
                      progress: Callable[[TestRecord], None] | None = None) -> FalsificationOutcome:
    """Run the online generative falsifier (either variant) on ``sut``.

    A SUT failure propagates with the tests executed so far as ``exc.records``.
    """
    loop = _nonadaptive_loop if config.variant == "nonadaptive" else _adaptive_loop
    records: list[TestRecord] = []
    try:
        return loop(sut, requirement, config, progress, records)
    except SutError as exc:
        exc.records = records
        raise


def run_nonadaptive(sut: SutDescriptor, requirement: str | Formula | None, config: OganConfig,
                    progress: Callable[[TestRecord], None] | None = None) -> FalsificationOutcome:
    """Ablation: the discriminator only ever sees Monte-Carlo tests.

    Each iteration executes a Monte-Carlo test (trained on) and a generator
    test (recorded only); the pair costs one unit of budget and falsification
    is judged on the generator tests (and the shared initial phase)."""
    return run_falsification(sut, requirement, replace(config, variant="nonadaptive"), progress)


def _adaptive_loop(sut: SutDescriptor, requirement: str | Formula | None, config: OganConfig,
                   progress: Callable[[TestRecord], None] | None, records: list[TestRecord]
                   ) -> FalsificationOutcome:
    evaluate = Evaluator(sut, requirement)
    streams = _Streams(config.seed)
    dim, kind = sut.dimension, _discriminator_kind(config, sut)
    state = OganState()
    _initial_phase(evaluate, config, streams, state, records)
    stop_early = config.stop == "first-falsification"
    while state.executions < config.budget:
        if stop_early and _first_falsification(records, lambda r: True) is not None:
            break
        start = time.perf_counter()
        train_models(state, config, dim, kind, streams.init, streams.latent)
        t_train = time.perf_counter() - start
        start = time.perf_counter()
        x, branch = sample_test(state, config, dim, streams)
        t_gen = time.perf_counter() - start
        scaled, raw, bad, secs = evaluate(x)
        state.executions += 1
        state.add(x, scaled)
        rec = TestRecord(state.executions, x.tolist(), scaled, raw, bad, branch, True, t_gen, t_train, secs)
        records.append(rec)
        if progress:
            progress(rec)
    first = _first_falsification(records, lambda r: True)
    return _outcome(first, config, state, records, "ogan-adaptive")


def _nonadaptive_loop(sut: SutDescriptor, requirement: str | Formula | None, config: OganConfig,
                      progress: Callable[[TestRecord], None] | None, records: list[TestRecord]
                      ) -> FalsificationOutcome:
    evaluate = Evaluator(sut, requirement)
    streams = _Streams(config.seed)
    dim, kind = sut.dimension, _discriminator_kind(config, sut)
    state = OganState()
    _initial_phase(evaluate, config, streams, state, records)

    def counts(r: TestRecord) -> bool:
        return r.stage != "monte-carlo"

    stop_early = config.stop == "first-falsification"
    while state.executions < config.budget:
        if stop_early and _first_falsification(records, counts) is not None:
            break
        start = time.perf_counter()
        train_models(state, config, dim, kind, streams.init, streams.latent)
        t_train = time.perf_counter() - start
        start = time.perf_counter()
        x1, _ = sample_test(state, config, dim, streams, force="monte-carlo")
        t_gen1 = time.perf_counter() - start
        start = time.perf_counter()
        x2, _ = sample_test(state, config, dim, streams, force="generator")
        t_gen2 = time.perf_counter() - start
        state.executions += 1
        s1, raw1, bad1, secs1 = evaluate(x1)
        state.add(x1, s1)
        records.append(TestRecord(state.executions, x1.tolist(), s1, raw1, bad1, "monte-carlo", True,
                                  t_gen1, t_train, secs1))
        s2, raw2, bad2, secs2 = evaluate(x2)
        rec = TestRecord(state.executions, x2.tolist(), s2, raw2, bad2, "generator", False,
                         t_gen2, 0.0, secs2)
        records.append(rec)
        if progress:
            progress(rec)
    first = _first_falsification(records, counts)
    return _outcome(first, config, state, records, "ogan-nonadaptive")


def random_search(sut: SutDescriptor, requirement: str | Formula | None, budget: int,
                  sampler: str = "uniform", seed: int = 0,
                  stop: str = "first-falsification") -> FalsificationOutcome:
    """Baseline: ``budget`` tests drawn up front (uniform or one LHS design)."""
    if budget < 1:
        raise ConfigError("budget must be positive")
    evaluate = Evaluator(sut, requirement)
    streams = _Streams(seed)
    start = time.perf_counter()
    tests = sample_tests(sampler, sut.dimension, budget, streams.sampling)
    t_gen = (time.perf_counter() - start) / budget
    records, first = [], None
    for i, x in enumerate(tests, start=1):
        scaled, raw, bad, secs = evaluate(x)
        records.append(TestRecord(i, x.tolist(), scaled, raw, bad, "random", False, t_gen, 0.0, secs))
        if bad and first is None:
            first = i
            if stop == "first-falsification":
                break
    falsified = first is not None
    return FalsificationOutcome(falsified, first if falsified else budget, budget, len(records),
                                records, f"random-{sampler}", seed)


def _outcome(first: int | None, config: OganConfig, state: OganState,
             records: list[TestRecord], name: str) -> FalsificationOutcome:
    falsified = first is not None
    return FalsificationOutcome(falsified, first if falsified else config.budget, config.budget,
                                state.executions, records, name, config.seed)
