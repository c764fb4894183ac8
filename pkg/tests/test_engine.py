import numpy as np
import pytest

import ogan.engine as engine
from ogan.engine import (
    ConfigError,
    OganConfig,
    OganState,
    _Streams,
    acceptance_thresholds,
    build_models,
    generator_candidate,
    random_search,
    run_falsification,
    run_nonadaptive,
    sample_lhs,
    sample_test,
    sample_uniform,
    train_models,
)
from ogan.stl import eval_boolean, parse_stl
from ogan.sut import SutError, execute, sut_first_order_speed, sut_quadratic_basin

FAST = dict(generator_epochs=20, discriminator_epochs=5)


def strip(records):
    return [(r.index, r.test, r.robustness, r.raw, r.falsified, r.stage, r.used_for_training) for r in records]


# -- sampling -----------------------------------------------------------------------

def test_uniform_sampling():
    rng = np.random.default_rng(0)
    assert sample_uniform(4, 0, rng).shape == (0, 4)
    x = sample_uniform(3, 1000, rng)
    assert x.min() >= -1 and x.max() <= 1
    np.testing.assert_array_equal(sample_uniform(3, 5, np.random.default_rng(1)),
                                  sample_uniform(3, 5, np.random.default_rng(1)))


def test_lhs_two_points_one_dimension():
    for seed in range(20):
        x = np.sort(sample_lhs(1, 2, np.random.default_rng(seed))[:, 0])
        assert -1 <= x[0] < 0 <= x[1] <= 1


@pytest.mark.parametrize("n,dim", [(5, 3), (17, 2), (100, 6)])
def test_lhs_strata_are_permutations(n, dim):
    x = sample_lhs(dim, n, np.random.default_rng(n))
    strata = np.floor((x + 1) / 2 * n).astype(int)
    for k in range(dim):
        assert sorted(strata[:, k]) == list(range(n))


def test_threshold_sequence():
    t = acceptance_thresholds(0.95, 4)
    np.testing.assert_allclose(t, [0.05, 0.0975, 0.142625, 1 - 0.95 ** 4], atol=1e-15)


# -- training ------------------------------------------------------------------------

def small_state(rng, n=12, dim=3):
    state = OganState()
    for _ in range(n):
        x = rng.uniform(-1, 1, dim)
        state.add(x, float(np.clip(np.linalg.norm(x) / 2, 0, 1)))
    return state


def test_training_changes_both_networks():
    config = OganConfig(**FAST)
    state = small_state(np.random.default_rng(0))
    g0, d0 = build_models(config, 3, "dense", np.random.default_rng(5))
    train_models(state, config, 3, "dense", np.random.default_rng(5), np.random.default_rng(6))
    assert np.any(state.generator.flat_params != g0.flat_params)
    assert np.any(state.discriminator.flat_params != d0.flat_params)


def test_generator_phase_leaves_discriminator_alone():
    state_a = small_state(np.random.default_rng(0))
    state_b = small_state(np.random.default_rng(0))
    train_models(state_a, OganConfig(generator_epochs=0, discriminator_epochs=5), 3, "conv",
                 np.random.default_rng(5), np.random.default_rng(6))
    train_models(state_b, OganConfig(generator_epochs=30, discriminator_epochs=5), 3, "conv",
                 np.random.default_rng(5), np.random.default_rng(6))
    np.testing.assert_array_equal(state_a.discriminator.flat_params, state_b.discriminator.flat_params)


def test_single_point_overfit():
    config = OganConfig(**FAST)
    x = np.array([0.3, -0.2, 0.8])
    _, d0 = build_models(config, 3, "dense", np.random.default_rng(1))
    before = float(d0(x[None])[0, 0])
    state = OganState()
    state.add(x, 0.0)
    train_models(state, config, 3, "dense", np.random.default_rng(1), np.random.default_rng(2))
    assert float(state.discriminator(x[None])[0, 0]) < before


def test_training_needs_data():
    with pytest.raises(ValueError):
        train_models(OganState(), OganConfig(), 3, "dense", np.random.default_rng(0), np.random.default_rng(0))


# -- test selection ------------------------------------------------------------------

def trained_state(seed=0):
    state = small_state(np.random.default_rng(seed))
    train_models(state, OganConfig(**FAST), 3, "dense", np.random.default_rng(seed), np.random.default_rng(seed + 1))
    return state


def test_candidate_is_queue_minimum_and_stops_at_threshold():
    state = trained_state()
    config = OganConfig(alpha=0.95)
    for seed in range(5):
        pushes = []
        x = generator_candidate(state, config, np.random.default_rng(seed), trace=pushes)
        estimates = np.array([e for e, _ in pushes])
        thresholds = np.array([t for _, t in pushes])
        np.testing.assert_allclose(thresholds, acceptance_thresholds(0.95, len(pushes)), atol=1e-12)
        running_min = np.minimum.accumulate(estimates)
        assert running_min[-1] <= thresholds[-1]
        assert np.all(running_min[:-1] > thresholds[:-1])
        est = float(state.discriminator(x[None].astype(state.discriminator.dtype))[0, 0])
        assert est == pytest.approx(estimates.min(), abs=1e-6)


def test_probability_one_always_monte_carlo():
    state = trained_state()
    streams = _Streams(3)
    config = OganConfig(sample_probability=1.0)
    assert all(sample_test(state, config, 3, streams)[1] == "monte-carlo" for _ in range(20))
    config = OganConfig(sample_probability=0.0)
    assert all(sample_test(state, config, 3, streams)[1] == "generator" for _ in range(5))


# -- main loop ---------------------------------------------------------------------------

def test_budget_equal_to_initial_is_censored():
    sut = sut_first_order_speed()
    out = run_falsification(sut, None, OganConfig(budget=5, initial=5, seed=1))
    assert not out.falsified and out.executions == 5 and len(out.records) == 5
    assert all(r.stage == "initial" for r in out.records)


def test_first_falsification_is_sound():
    sut = sut_quadratic_basin(radius=0.5, center=(0.3, 0.2, -0.5))
    phi = parse_stl(sut.requirement)
    out = run_falsification(sut, None, OganConfig(budget=40, initial=5, seed=0, **FAST))
    assert out.falsified and out.executions <= 40
    assert out.records[-1].index == out.executions
    assert not any(r.falsified for r in out.records[:-1])
    assert not eval_boolean(phi, execute(sut, out.falsifying_test).trace)


def test_budget_exhausted_runs_everything():
    sut = sut_quadratic_basin()
    config = OganConfig(budget=12, initial=8, stop="budget-exhausted", seed=4, **FAST)
    out = run_falsification(sut, None, config)
    assert out.executions_used == 12 and len(out.records) == 12
    assert [r.index for r in out.records] == list(range(1, 13))
    assert all(0 <= r.robustness <= 1 for r in out.records)


def test_replay_determinism():
    sut = sut_first_order_speed()
    config = OganConfig(budget=10, initial=6, seed=9, **FAST)
    a = run_falsification(sut, None, config)
    b = run_falsification(sut, None, config)
    assert strip(a.records) == strip(b.records)


def test_nonadaptive_never_trains_on_generator_tests(monkeypatch):
    seen = []
    real = engine.train_models

    def spy(state, *args, **kwargs):
        seen.append([t.copy() for t in state.tests])
        return real(state, *args, **kwargs)

    monkeypatch.setattr(engine, "train_models", spy)
    sut = sut_first_order_speed()
    config = OganConfig(budget=10, initial=5, stop="budget-exhausted", seed=3, **FAST)
    out = run_nonadaptive(sut, None, config)
    generated = [np.array(r.test) for r in out.records if r.stage == "generator"]
    assert len(generated) == 5 and out.executions_used == 10
    for suite in seen:
        for g in generated:
            assert not any(np.array_equal(g, t) for t in suite)
    assert all(not r.used_for_training for r in out.records if r.stage == "generator")


def test_variants_share_initial_phase():
    sut = sut_first_order_speed()
    config = OganConfig(budget=9, initial=6, stop="budget-exhausted", seed=5, **FAST)
    a = run_falsification(sut, None, config)
    b = run_nonadaptive(sut, None, config)
    assert strip(a.records[:6]) == strip(b.records[:6])


def test_sut_failure_keeps_partial_suite():
    sut = sut_first_order_speed()
    calls = {"n": 0}
    real = sut.simulate

    def flaky(inputs):
        calls["n"] += 1
        if calls["n"] == 4:
            raise RuntimeError("solver diverged")
        return real(inputs)

    sut.simulate = flaky
    with pytest.raises(SutError) as info:
        run_falsification(sut, None, OganConfig(budget=10, initial=6, seed=0, **FAST))
    assert len(info.value.records) == 3


def test_random_search_baselines():
    sut = sut_quadratic_basin()
    a = random_search(sut, None, 50, "uniform", seed=1, stop="budget-exhausted")
    b = random_search(sut, None, 50, "lhs", seed=1, stop="budget-exhausted")
    assert len(a.records) == len(b.records) == 50
    x = np.array([r.test for r in b.records])
    strata = np.floor((x + 1) / 2 * 50).astype(int)
    assert all(sorted(strata[:, k]) == list(range(50)) for k in range(3))


@pytest.mark.parametrize("kwargs", [
    dict(budget=10, initial=11), dict(initial=0), dict(sample_probability=1.5),
    dict(alpha=1.0), dict(alpha=0.0), dict(latent_dim=0), dict(sampler="sobol"),
    dict(variant="other"), dict(stop="never"),
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        OganConfig(**kwargs)
