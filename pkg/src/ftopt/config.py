"""Scenario files: TOML or JSON documents describing one simulation.

Example (TOML)::

    n = 4
    f = 1
    protocol = "alg2"
    faulty = [3]
    max_iters = 2000
    seed = 7
    init = [0.0, 1.0, 2.0, 3.0]

    [schedule]
    kind = "harmonic"
    scale = 1.0

    [[functions]]
    kind = "huber"
    center = 1.0
    curvature = 1.0
    cap = 1.0
    # ... one table per agent

    [[crashes]]
    agent = 3
    iteration = 5
    phase = "mid_send"
    recipients = [0, 1]

Instead of explicit ``functions`` and ``init`` a scenario may ask for
seeded random ones with a ``[generate]`` table (keys ``center_range`` and
``init_range``). ``[adversary]`` selects a Byzantine strategy (alg3),
``[crash_generator]`` draws random crashes and ``[delay]`` a delay model
(alg4 on the event queue).
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import _rng
from .adversary import (CrashEvent, CrashSchedule, generate_crash_schedule,
                        strategy_from_dict)
from .engine import DelayModel, ScenarioConfig
from .errors import ConfigError, ParameterError
from .functions import AdmissibleFunction, Huber, SmoothAbs, from_dict
from .protocol import StepSchedule

TOP_LEVEL = {"n", "f", "protocol", "seed", "max_iters", "faulty", "functions", "init",
             "generate", "schedule", "adversary", "crashes", "crash_generator", "delay",
             "record_messages", "checks"}


def load_document(path: str | Path) -> dict[str, Any]:
    """Read a TOML or JSON scenario; syntax errors become ConfigError with a position."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc.strerror}", str(path)) from None
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                              str(path)) from None
    else:
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}", str(path)) from None
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a table/object at top level", str(path))
    return doc


def mixed_functions(n: int, seed: int, center_range=(-3.0, 3.0)) -> list[AdmissibleFunction]:
    """Seeded mix of huber and smooth_abs costs with centers in ``center_range``.

    Huber quadratic regions are wide enough to contain every center, so the
    average objective is strongly convex around its minimizer.
    """
    lo, hi = center_range
    out: list[AdmissibleFunction] = []
    for i in range(n):
        r = _rng.stream(seed, "functions", i)
        c = r.uniform(lo, hi)
        if r.random() < 0.5:
            k = r.uniform(0.5, 2.0)
            out.append(Huber(c, k, k * r.uniform(hi - lo, 2 * (hi - lo))))
        else:
            out.append(SmoothAbs(c, r.uniform(0.5, 1.5), r.uniform(1.0, 3.0)))
    return out


def random_init(n: int, seed: int, init_range=(-5.0, 5.0)) -> list[float]:
    u, U = init_range
    return [u + (U - u) * _rng.uniform(seed, "init", i) for i in range(n)]


def _req(doc: Mapping, key: str, kind: type | tuple, path: str = ""):
    if key not in doc:
        raise ConfigError("missing", path + key)
    v = doc[key]
    if isinstance(v, bool) and kind is not bool or not isinstance(v, kind):
        raise ConfigError(f"expected {getattr(kind, '__name__', kind)}, got {v!r}", path + key)
    return v


def _range(v, path: str) -> tuple[float, float]:
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(a, (int, float)) for a in v)
            and v[0] <= v[1]):
        raise ConfigError("expected [lo, hi] with lo <= hi", path)
    return float(v[0]), float(v[1])


def scenario_from_dict(doc: Mapping[str, Any]) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from a parsed document."""
    unknown = set(doc) - TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", "<top>")
    n = _req(doc, "n", int)
    f = _req(doc, "f", int)
    protocol = _req(doc, "protocol", str)
    max_iters = _req(doc, "max_iters", int)
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"expected int, got {seed!r}", "seed")
    faulty = doc.get("faulty", [])
    if not isinstance(faulty, list) or not all(isinstance(i, int) for i in faulty):
        raise ConfigError("expected a list of agent ids", "faulty")

    gen = doc.get("generate")
    if gen is not None and not isinstance(gen, Mapping):
        raise ConfigError("expected a table", "generate")
    if "functions" in doc:
        fl = doc["functions"]
        if not isinstance(fl, list):
            raise ConfigError("expected a list of function tables", "functions")
        functions = [from_dict(s, f"functions[{k}]") for k, s in enumerate(fl)]
    elif gen is not None:
        functions = mixed_functions(n, seed, _range(gen.get("center_range", [-3, 3]),
                                                    "generate.center_range"))
    else:
        raise ConfigError("missing (give 'functions' or a [generate] table)", "functions")
    if "init" in doc:
        init = doc["init"]
        if not isinstance(init, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in init):
            raise ConfigError("expected a list of numbers", "init")
    elif gen is not None:
        init = random_init(n, seed, _range(gen.get("init_range", [-5, 5]), "generate.init_range"))
    else:
        raise ConfigError("missing (give 'init' or a [generate] table)", "init")

    sd = doc.get("schedule", {"kind": "harmonic", "scale": 1.0})
    if not isinstance(sd, Mapping):
        raise ConfigError("expected a table", "schedule")
    try:
        kind = sd.get("kind", "harmonic")
        if kind == "harmonic":
            schedule = StepSchedule.harmonic(sd.get("scale", 1.0))
        elif kind == "power":
            schedule = StepSchedule.power(sd.get("scale", 1.0), _req(sd, "exponent", (int, float), "schedule."))
        else:
            raise ConfigError(f"unknown schedule kind {kind!r}", "schedule.kind")
    except ParameterError as exc:
        raise ConfigError(str(exc), "schedule") from None

    adversary = strategy_from_dict(doc["adversary"]) if "adversary" in doc else None

    events = []
    for k, e in enumerate(doc.get("crashes", [])):
        p = f"crashes[{k}]"
        if not isinstance(e, Mapping):
            raise ConfigError("expected a table", p)
        try:
            events.append(CrashEvent(_req(e, "agent", int, p + "."), _req(e, "iteration", int, p + "."),
                                     e.get("phase", "before_send"), frozenset(e.get("recipients", []))))
        except ParameterError as exc:
            raise ConfigError(str(exc), p) from None
    cg = doc.get("crash_generator")
    try:
        if cg is not None:
            if events:
                raise ConfigError("give either 'crashes' or 'crash_generator', not both", "crash_generator")
            crash_schedule = generate_crash_schedule(
                cg.get("kind", "none"), faulty, seed, prob=float(cg.get("prob", 0.0)),
                horizon=int(cg.get("horizon", max_iters)), n=n)
        else:
            crash_schedule = CrashSchedule(tuple(events))
    except ParameterError as exc:
        raise ConfigError(str(exc), "crash_generator" if cg is not None else "crashes") from None

    delay = None
    if "delay" in doc:
        dd = dict(doc["delay"])
        if "by_sender" in dd:
            dd["by_sender"] = {int(k): int(v) for k, v in dd["by_sender"].items()}
        if "slow_ids" in dd:
            dd["slow_ids"] = tuple(dd["slow_ids"])
        try:
            delay = DelayModel(**dd)
        except TypeError as exc:
            raise ConfigError(str(exc), "delay") from None

    record = doc.get("record_messages", False)
    if not isinstance(record, bool):
        raise ConfigError("expected true/false", "record_messages")

    config = ScenarioConfig(
        n=n, f=f, protocol=protocol, functions=tuple(functions), init_estimates=tuple(init),
        schedule=schedule, max_iters=max_iters, seed=seed, faulty_ids=frozenset(faulty),
        adversary=adversary, crash_schedule=crash_schedule, delay_model=delay,
        record_messages=record)
    config.validate()
    return config


def check_thresholds(doc: Mapping[str, Any], defaults: Mapping[str, float]) -> dict[str, float]:
    """Per-scenario overrides from the optional ``[checks]`` table."""
    out = dict(defaults)
    checks = doc.get("checks", {})
    if not isinstance(checks, Mapping):
        raise ConfigError("expected a table", "checks")
    for k, v in checks.items():
        if k not in out:
            raise ConfigError(f"unknown threshold; choose from {sorted(out)}", f"checks.{k}")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            raise ConfigError("expected a non-negative number", f"checks.{k}")
        out[k] = float(v)
    return out


def load_scenario(path: str | Path) -> tuple[ScenarioConfig, dict[str, Any]]:
    doc = load_document(path)
    return scenario_from_dict(doc), doc
