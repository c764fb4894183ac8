import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ogan.stl import (
    Always,
    Constant,
    DegenerateRangeError,
    Eventually,
    HorizonError,
    Interval,
    MissingRangeError,
    Not,
    Or,
    Predicate,
    SignalRange,
    SignalRef,
    StlSyntaxError,
    Trace,
    TrueFormula,
    UnknownSignalError,
    Until,
    eval_boolean,
    eval_robustness,
    expand,
    horizon,
    parse_stl,
    strict_equality_fixup,
    to_text,
)
from ogan.stl.robustness import scale_robustness

from formulas import RANGES, random_case, random_formula, random_trace

SPEED_RANGES = {"SPEED": SignalRange(0, 120), "RPM": SignalRange(0, 4800)}


def speed_rpm_trace():
    rng = np.random.default_rng(5)
    n = 3001
    speed = rng.uniform(0, 5, n)
    speed[400] = 5.0
    rpm = rng.uniform(0, 1000, n)
    rpm[2000] = 1000.0
    return Trace(0.01, {"SPEED": speed, "RPM": rpm})


# -- parsing --------------------------------------------------------------------

def test_parse_always():
    phi = parse_stl("always[0,20] (SPEED < 120)")
    assert phi == Always(Interval(0, 20), Predicate(SignalRef("SPEED"), "<", Constant(120)))


def test_parse_disjunction_of_temporal_operators():
    phi = parse_stl("(always[0,10] (SPEED < 50)) or (eventually[0,30] (RPM > 2700))")
    assert isinstance(phi, Or)
    assert isinstance(phi.left, Always) and isinstance(phi.right, Eventually)


@pytest.mark.parametrize("text", ["always[20,10] p > 1", "always[-1,2] (x > 1)", "eventually[3,1] x < 0"])
def test_malformed_interval(text):
    with pytest.raises(StlSyntaxError, match="malformed interval"):
        parse_stl(text)


@pytest.mark.parametrize("text,line,column", [
    ("always[0,1] (x >\n  )", 2, 3),
    ("x > 1 and", 1, 10),
    ("(x > 1", 1, 7),
])
def test_syntax_error_position(text, line, column):
    with pytest.raises(StlSyntaxError) as info:
        parse_stl(text)
    assert (info.value.line, info.value.column) == (line, column)


@pytest.mark.parametrize("text", ["x == 1", "x > 1 && y < 2", "x -> y", "!(x > 1)", "x / 2 > 1"])
def test_unknown_operator(text):
    with pytest.raises(StlSyntaxError, match="unknown operator"):
        parse_stl(text)


def test_precedence_and_keywords():
    phi = parse_stl("not x > 1 and y < 2 or true implies x >= 0")
    assert to_text(phi) == "(((not (x > 1)) and (y < 2)) or (true)) implies (x >= 0)"


def test_arithmetic_expressions():
    phi = parse_stl("2 * abs(x - y) + -1 <= 3.5e1")
    assert parse_stl(to_text(phi)) == phi
    assert set(phi.lhs.__dict__) == {"left", "right"}


def test_round_trip_random_formulas():
    rng = np.random.default_rng(0)
    for _ in range(300):
        phi = random_formula(rng, 3)
        assert parse_stl(to_text(phi)) == phi


# -- Boolean semantics ----------------------------------------------------------------

def test_constant_speed_satisfies_bound():
    trace = Trace(0.01, {"SPEED": np.full(3001, 100.0)})
    assert eval_boolean(parse_stl("always[0,20] (SPEED < 120)"), trace)


def test_speed_rpm_scenario_boolean():
    trace = speed_rpm_trace()
    assert eval_boolean(parse_stl("always[0,10] (SPEED < 50)"), trace)
    assert not eval_boolean(parse_stl("eventually[0,30] (RPM > 2700)"), trace)


def test_until_half_open_prefix():
    # psi first holds at t=2; phi holds on [0, 2) only
    trace = Trace(1.0, {"a": [1, 1, -1, -1], "b": [-1, -1, 1, -1]})
    phi = parse_stl("(a > 0) until[0,3] (b > 0)")
    assert eval_boolean(phi, trace)
    assert eval_robustness(phi, trace, {"a": SignalRange(-1, 1), "b": SignalRange(-1, 1)}).value > 0


def test_until_needs_witness_inside_interval():
    trace = Trace(1.0, {"a": [1, 1, 1, 1], "b": [1, -1, -1, -1]})
    assert not eval_boolean(parse_stl("(a > 0) until[1,3] (b > 0)"), trace)


def test_horizon_overflow():
    trace = Trace(1.0, {"x": np.zeros(5)})
    with pytest.raises(HorizonError):
        eval_boolean(parse_stl("always[0,5] (x < 1)"), trace)
    with pytest.raises(HorizonError):
        eval_robustness(parse_stl("always[0,5] (x < 1)"), trace, {"x": SignalRange(0, 1)})


def test_unknown_signal():
    trace = Trace(1.0, {"x": np.zeros(5)})
    with pytest.raises(UnknownSignalError):
        eval_boolean(parse_stl("z > 0"), trace)


def test_interval_rounding_to_samples():
    assert horizon(parse_stl("always[0,0.3] (x > 0)"), 0.1) == 3
    assert horizon(parse_stl("always[0,1] eventually[0,2] (x > 0)"), 0.5) == 6


# -- robustness -------------------------------------------------------------------

def test_golden_scaled_robustness():
    trace = speed_rpm_trace()
    phi = parse_stl("(always[0,10] (SPEED < 50)) or (eventually[0,30] (RPM > 2700))")
    res = eval_robustness(phi, trace, SPEED_RANGES)
    assert res.value == 45.0
    assert (res.effective_lo, res.effective_hi) == (-70.0, 50.0)
    assert abs(res.scaled - 0.9) < 1e-12
    assert abs(res.scaled - 45 / 2100) > 0.8


def test_rpm_disjunct_alone():
    res = eval_robustness(parse_stl("eventually[0,30] (RPM > 2700)"), speed_rpm_trace(), SPEED_RANGES)
    assert res.value == -1700.0
    assert res.scaled == 0.0
    assert (res.effective_lo, res.effective_hi) == (-2700.0, 2100.0)


def test_negation_negates_and_swaps():
    rng = np.random.default_rng(1)
    for _ in range(100):
        phi, trace = random_case(rng)
        a = eval_robustness(phi, trace, RANGES)
        b = eval_robustness(Not(phi), trace, RANGES)
        assert b.value == -a.value
        assert (b.effective_lo, b.effective_hi) == (-a.effective_hi, -a.effective_lo)


@pytest.mark.parametrize("relation,x,expected", [(">=", 2.0, 0.0), (">", 3.0, 1.0), ("<", 2.0, 0.0)])
def test_equality_robustness(relation, x, expected):
    trace = Trace(1.0, {"X": [x], "Y": [2.0]})
    phi = strict_equality_fixup(Predicate(SignalRef("X"), relation, SignalRef("Y")))
    res = eval_robustness(phi, trace, {"X": SignalRange(0, 5), "Y": SignalRange(0, 5)})
    assert res.value == expected
    assert res.falsified == (expected == 0.0)


def test_true_has_infinite_range():
    res = eval_robustness(TrueFormula(), Trace(1.0, {"x": [0.0]}), {})
    assert res.value == math.inf and res.effective_hi == math.inf and res.scaled == 1.0


def test_missing_range():
    with pytest.raises(MissingRangeError):
        eval_robustness(parse_stl("x > 0"), Trace(1.0, {"x": [1.0]}), {})


def test_degenerate_range():
    with pytest.raises(DegenerateRangeError):
        scale_robustness(1.0, 0.0)
    assert scale_robustness(-1.0, 0.0) == 0.0


def test_derived_operators_are_exact():
    rng = np.random.default_rng(2)
    for _ in range(200):
        phi, trace = random_case(rng)
        interval = Interval(float(rng.integers(0, 4)), float(rng.integers(4, 8)))
        ev = Eventually(interval, phi)
        trace = random_trace(rng, ev)
        r1 = eval_robustness(ev, trace, RANGES)
        r2 = eval_robustness(Until(interval, TrueFormula(), phi), trace, RANGES)
        assert (r1.value, r1.effective_lo, r1.effective_hi) == (r2.value, r2.effective_lo, r2.effective_hi)
        al = Always(interval, phi)
        r3 = eval_robustness(al, trace, RANGES)
        r4 = eval_robustness(Not(Eventually(interval, Not(phi))), trace, RANGES)
        assert (r3.value, r3.effective_lo, r3.effective_hi) == (r4.value, r4.effective_lo, r4.effective_hi)
        r5 = eval_robustness(expand(al), trace, RANGES)
        assert r5.value == r3.value


def test_bounds_contain_value_and_scaled_in_unit_interval():
    rng = np.random.default_rng(3)
    for _ in range(300):
        phi, trace = random_case(rng)
        res = eval_robustness(phi, trace, RANGES)
        assert res.effective_lo <= res.value <= res.effective_hi
        assert 0.0 <= res.scaled <= 1.0
        if not eval_boolean(phi, trace):
            assert res.scaled == 0.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=12, max_size=40), st.integers(0, 10))
def test_always_window_monotone(values, horizon_end):
    trace = Trace(1.0, {"x": values})
    rho = [eval_robustness(Always(Interval(0, T), Predicate(SignalRef("x"), "<", Constant(5.0))),
                           trace, RANGES).value
           for T in range(0, horizon_end + 1)]
    assert all(b <= a for a, b in zip(rho, rho[1:]))


# -- traces -----------------------------------------------------------------------

def test_trace_csv_round_trip(tmp_path):
    trace = Trace(0.5, {"a": [1.0, 2.5, -3.0], "b": [0.0, 1e-9, 7.0]})
    path = tmp_path / "t.csv"
    trace.to_csv(path)
    back = Trace.from_csv(path)
    assert back.time_step == 0.5
    for name in ("a", "b"):
        np.testing.assert_array_equal(back[name], trace[name])


def test_trace_rejects_ragged_components():
    with pytest.raises(ValueError):
        Trace(1.0, {"a": [1, 2], "b": [1]})
