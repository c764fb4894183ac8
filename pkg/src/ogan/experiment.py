"""Configuration-driven replicas, persisted outcomes and report tables.

Configuration is TOML::

    [sut]
    name = "deceptive-ridge"        # or: command = "python sim.py" + inputs/outputs
    [requirement]
    text = "not (always[10,30] (v >= 45 and v <= 50))"   # optional
    [algorithm]
    name = "ogan-adaptive"          # ogan-nonadaptive | random-uniform | random-lhs
    [ogan]
    budget = 300
    initial = 75
    [experiment]
    replicas = 25
    seed = 1
    out = "results/ridge"
"""

from __future__ import annotations

import json
import multiprocessing
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .engine import ConfigError, FalsificationOutcome, OganConfig, random_search, run_falsification
from .signals import InputChannel, InputSpec
from .stl import StlError, parse_stl, signals
from .stl.trace import SignalRange
from .survival import (
    SurvivalData,
    falsification_rate,
    kaplan_meier,
    logrank_test,
    mean_executions,
    overlay_csv,
)
from .sut import REGISTRY, SutDescriptor, SutError, external_sut, get_sut

ALGORITHMS = ("ogan-adaptive", "ogan-nonadaptive", "random-uniform", "random-lhs")
TIMING_KEYS = ("t_generation", "t_training", "t_execution")


@dataclass(frozen=True)
class ExperimentConfig:
    sut: dict
    algorithm: str = "ogan-adaptive"
    requirement: str | None = None
    ogan: OganConfig = field(default_factory=OganConfig)
    replicas: int = 1
    seed: int = 0
    out: str = "results"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.replicas < 1:
            raise ConfigError("replicas must be at least 1")

    @property
    def budget(self) -> int:
        return self.ogan.budget

    def build_sut(self) -> SutDescriptor:
        return build_sut(self.sut)

    def requirement_text(self, sut: SutDescriptor) -> str:
        return self.requirement if self.requirement else sut.requirement

    def validate(self) -> SutDescriptor:
        """Check that the SUT exists and the requirement fits its signals."""
        sut = self.build_sut()
        text = self.requirement_text(sut)
        if not text:
            raise ConfigError("no requirement given and the SUT has no default one")
        try:
            phi = parse_stl(text)
        except StlError as exc:
            raise ConfigError(f"requirement does not parse: {exc}") from exc
        unknown = signals(phi) - set(sut.ranges)
        if unknown:
            raise ConfigError(f"requirement uses signals the SUT lacks: {sorted(unknown)}")
        return sut


def build_sut(spec: dict) -> SutDescriptor:
    spec = dict(spec)
    if "command" in spec:
        try:
            channels = tuple(
                InputChannel(c["name"], SignalRange(float(c["lo"]), float(c["hi"])), int(c.get("segments", 1)))
                for c in spec["inputs"]
            )
            input_spec = InputSpec(channels, float(spec["duration"]), float(spec.get("period", 0.01)),
                                   bool(spec.get("vector", False)))
            outputs = {k: SignalRange(float(v[0]), float(v[1])) for k, v in spec["outputs"].items()}
        except (KeyError, TypeError, ValueError, StlError) as exc:
            raise ConfigError(f"bad external SUT description: {exc}") from exc
        return external_sut(spec["command"], input_spec, outputs, spec.get("requirement", ""),
                            spec.get("name", "external"))
    name = spec.pop("name", None)
    if name is None:
        raise ConfigError("[sut] needs a name or a command")
    params = spec.pop("params", {})
    try:
        return get_sut(name, **params)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for SUT {name!r}: {exc}") from exc


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    if "sut" not in raw:
        raise ConfigError("config needs a [sut] table")
    known = {f.name for f in fields(OganConfig)}
    ogan_raw = raw.get("ogan", {})
    unknown = set(ogan_raw) - known
    if unknown:
        raise ConfigError(f"unknown [ogan] keys: {sorted(unknown)}")
    exp = raw.get("experiment", {})
    try:
        ogan = OganConfig(**ogan_raw)
        out = str(exp.get("out", "results"))
        if base_dir is not None and not Path(out).is_absolute():
            out = str(base_dir / out)
        return ExperimentConfig(
            sut=raw["sut"],
            algorithm=raw.get("algorithm", {}).get("name", "ogan-adaptive"),
            requirement=raw.get("requirement", {}).get("text"),
            ogan=ogan,
            replicas=int(exp.get("replicas", 1)),
            seed=int(exp.get("seed", 0)),
            out=out,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)


# -- replicas -------------------------------------------------------------------

def run_replica(config: ExperimentConfig, index: int) -> dict:
    """Replica ``index`` uses seed ``config.seed + index``."""
    seed = config.seed + index
    sut = config.build_sut()
    requirement = config.requirement_text(sut)
    try:
        if config.algorithm.startswith("random-"):
            outcome = random_search(sut, requirement, config.budget, config.algorithm.split("-", 1)[1],
                                    seed, config.ogan.stop)
        else:
            variant = config.algorithm.split("-", 1)[1]
            outcome = run_falsification(sut, requirement, replace(config.ogan, variant=variant, seed=seed))
    except SutError as exc:
        return {"replica": index, "seed": seed, "algorithm": config.algorithm, "error": str(exc)}
    return outcome_record(outcome, index)


def outcome_record(outcome: FalsificationOutcome, index: int) -> dict:
    recs = outcome.records
    timing = {k: [r.__dict__[k] for r in recs] for k in TIMING_KEYS}
    return {
        "replica": index,
        "seed": outcome.seed,
        "algorithm": outcome.algorithm,
        "falsified": outcome.falsified,
        "censored": outcome.censored,
        "executions": outcome.executions,
        "budget": outcome.budget,
        "executions_used": outcome.executions_used,
        "index": [r.index for r in recs],
        "tests": [r.test for r in recs],
        "robustness": [r.robustness for r in recs],
        "raw_robustness": [r.raw for r in recs],
        "test_falsified": [r.falsified for r in recs],
        "stage": [r.stage for r in recs],
        "used_for_training": [r.used_for_training for r in recs],
        "timing": timing,
    }


def strip_timing(record: dict) -> dict:
    return {k: v for k, v in record.items() if k != "timing"}


def _replica_job(args):
    config, index = args
    return run_replica(config, index)


def time_breakdown(records: list[dict]) -> dict:
    """Per-test means of generation, training and execution time, the total
    and the share of the total spent executing."""
    tg, tt, te = [], [], []
    for r in records:
        t = r.get("timing")
        if t:
            tg += t["t_generation"]
            tt += t["t_training"]
            te += t["t_execution"]
    total = sum(tg) + sum(tt) + sum(te)
    mean = (lambda xs: sum(xs) / len(xs) if xs else 0.0)
    return {
        "t_generation": mean(tg),
        "t_training": mean(tt),
        "t_execution": mean(te),
        "total": total,
        "ratio": sum(te) / total if total > 0 else 0.0,
    }


def aggregate(records: list[dict], budget: int, meta: dict | None = None) -> dict:
    """Report from per-replica records (errored replicas are counted apart)."""
    ok = [r for r in records if "error" not in r]
    report: dict[str, Any] = dict(meta or {})
    report.update({
        "budget": budget,
        "replicas": len(records),
        "errors": [{"replica": r["replica"], "error": r["error"]} for r in records if "error" in r],
    })
    if not ok:
        report.update({"fr": None, "ci": None, "mean_executions": None, "survival": None})
        return report
    data = SurvivalData.from_outcomes(ok, budget)
    rate = falsification_rate(data)
    curve = kaplan_meier(data)
    report.update({
        "fr": rate.value,
        "ci": [rate.lower, rate.upper],
        "mean_executions": mean_executions(data),
        "survival": {"times": list(data.times), "censored": list(data.censored)},
        "curve": {"S": curve.survival.tolist(), "lo": curve.lower.tolist(), "hi": curve.upper.tolist()},
        "time": time_breakdown(ok),
    })
    return report


def run_experiment(config: ExperimentConfig, workers: int = 1, out: str | Path | None = None,
                   progress=None) -> dict:
    """Run all replicas, write ``outcomes.jsonl``, ``report.json`` and
    ``curve.csv`` under the output directory, and return the report."""
    sut = config.validate()
    out_dir = Path(out if out is not None else config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(config, i) for i in range(config.replicas)]
    records: list[dict] = []
    with open(out_dir / "outcomes.jsonl", "w") as fh:
        if workers > 1:
            with multiprocessing.get_context("spawn").Pool(workers) as pool:
                results = pool.imap(_replica_job, jobs)  # ordered by replica index
                for rec in results:
                    records.append(rec)
                    fh.write(json.dumps(rec) + "\n")
                    if progress:
                        progress(rec)
        else:
            for job in jobs:
                rec = _replica_job(job)
                records.append(rec)
                fh.write(json.dumps(rec) + "\n")
                fh.flush()
                if progress:
                    progress(rec)
    meta = {"algorithm": config.algorithm, "sut": sut.name,
            "requirement": config.requirement_text(sut), "seed": config.seed}
    report = aggregate(records, config.budget, meta)
    (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    if report.get("survival"):
        kaplan_meier(report_data(report)).to_csv(out_dir / "curve.csv")
    return report


def load_records(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_report(path: str | Path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "report.json"
    return json.loads(path.read_text())


def report_data(report: dict) -> SurvivalData:
    s = report.get("survival")
    if not s:
        raise ValueError("report has no successful replicas")
    return SurvivalData(tuple(s["times"]), tuple(s["censored"]), int(report["budget"]))


def compare(report_a: dict, report_b: dict, csv_path: str | Path | None = None) -> dict:
    """Log-rank test plus FR difference (positive favours ``report_a``)."""
    if int(report_a["budget"]) != int(report_b["budget"]):
        raise ValueError(f"budgets differ: {report_a['budget']} vs {report_b['budget']}")
    a, b = report_data(report_a), report_data(report_b)
    lr = logrank_test(a, b)
    fa, fb = falsification_rate(a), falsification_rate(b)
    name_a = report_a.get("algorithm", "a")
    name_b = report_b.get("algorithm", "b")
    if name_a == name_b:
        name_a, name_b = f"{name_a}_a", f"{name_b}_b"
    csv_text = overlay_csv([(name_a, kaplan_meier(a)), (name_b, kaplan_meier(b))], csv_path)
    return {
        "a": name_a,
        "b": name_b,
        "fr_a": fa.value,
        "fr_b": fb.value,
        "effect": fa.value - fb.value,
        "statistic": lr.statistic,
        "p_value": lr.p_value,
        "p_value_3dp": f"{lr.p_value:.3f}",
        "csv": csv_text,
    }


__all__ = [
    "ALGORITHMS", "ExperimentConfig", "REGISTRY", "aggregate", "build_sut", "compare",
    "load_config", "load_records", "load_report", "outcome_record", "parse_config",
    "report_data", "run_experiment", "run_replica", "strip_timing", "time_breakdown",
]
