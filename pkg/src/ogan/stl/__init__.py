"""Signal temporal logic: parsing, Boolean monitoring and robustness."""

from .boolean import eval_boolean
from .formula import (
    Abs,
    Always,
    And,
    Constant,
    DegenerateRangeError,
    Difference,
    Eventually,
    Formula,
    HorizonError,
    Implies,
    Interval,
    MissingRangeError,
    Not,
    Or,
    Predicate,
    Scale,
    SignalRef,
    StlError,
    Sum,
    TrueFormula,
    UnknownSignalError,
    Until,
    expand,
    horizon,
    signals,
    to_text,
)
from .parser import StlSyntaxError, parse_stl
from .robustness import RobustnessResult, eval_robustness, strict_equality_fixup
from .trace import SignalRange, Trace

__all__ = [
    "Abs", "Always", "And", "Constant", "DegenerateRangeError", "Difference",
    "Eventually", "Formula", "HorizonError", "Implies", "Interval",
    "MissingRangeError", "Not", "Or", "Predicate", "RobustnessResult", "Scale",
    "SignalRange", "SignalRef", "StlError", "StlSyntaxError", "Sum", "Trace",
    "TrueFormula", "UnknownSignalError", "Until", "eval_boolean",
    "eval_robustness", "expand", "horizon", "parse_stl", "signals",
    "strict_equality_fixup", "to_text",
]
