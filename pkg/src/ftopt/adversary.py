"""Byzantine payload strategies and crash schedules.

A Byzantine strategy decides, per receiver, the ``(estimate, gradient)`` pair
a faulty agent claims. Receivers may be told different things. Strategies
only control payloads; dropping or delaying honest traffic is the job of the
crash and delay models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, NamedTuple

from . import _rng
from .errors import ConfigError, ParameterError
from .protocol import WireTuple


class RoundView(NamedTuple):
    """What an adversary may inspect when forging round-t payloads."""

    estimates: Mapping[int, float]  # non-faulty x_i[t-1]
    gradients: Mapping[int, float]  # non-faulty h_i'(x_i[t-1])
    gradient_bound: float  # largest L over all agents
    seed: int


@dataclass(frozen=True)
class ByzantineStrategy:
    kind: str = "silent"

    def payload(self, view: RoundView, sender: int, receiver: int, t: int) -> tuple[float, float] | None:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind}


@dataclass(frozen=True)
class Constant(ByzantineStrategy):
    w: float = 100.0
    g: float = 100.0
    kind: str = field(default="constant", init=False)

    def payload(self, view, sender, receiver, t):
        return (self.w, self.g)

    def to_dict(self):
        return {"kind": self.kind, "w": self.w, "g": self.g}


@dataclass(frozen=True)
class RandomUniform(ByzantineStrategy):
    w_range: tuple[float, float] = (-50.0, 50.0)
    g_range: tuple[float, float] = (-50.0, 50.0)
    kind: str = field(default="random_uniform", init=False)

    def __post_init__(self):
        for name in ("w_range", "g_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ParameterError(f"{name} must be a finite [lo, hi] pair")
            object.__setattr__(self, name, (float(lo), float(hi)))

    def payload(self, view, sender, receiver, t):
        u = _rng.uniform(view.seed, "adversary-w", sender, receiver, t)
        v = _rng.uniform(view.seed, "adversary-g", sender, receiver, t)
        (wl, wh), (gl, gh) = self.w_range, self.g_range
        return (wl + (wh - wl) * u, gl + (gh - gl) * v)

    def to_dict(self):
        return {"kind": self.kind, "w_range": list(self.w_range), "g_range": list(self.g_range)}


@dataclass(frozen=True)
class OppositeExtreme(ByzantineStrategy):
    """Push receivers below the median up and the rest down."""

    offset: float = 10.0
    kind: str = field(default="opposite_extreme", init=False)

    def payload(self, view, sender, receiver, t):
        xs = sorted(view.estimates.values())
        k = len(xs)
        median = xs[k // 2] if k % 2 else 0.5 * (xs[k // 2 - 1] + xs[k // 2])
        if view.estimates[receiver] < median:
            return (xs[-1] + self.offset, view.gradient_bound)
        return (xs[0] - self.offset, -view.gradient_bound)

    def to_dict(self):
        return {"kind": self.kind, "offset": self.offset}


@dataclass(frozen=True)
class ColludeShift(ByzantineStrategy):
    """All faulty agents claim to sit at ``target`` with zero gradient."""

    target: float = 50.0
    kind: str = field(default="collude_shift", init=False)

    def payload(self, view, sender, receiver, t):
        return (self.target, 0.0)

    def to_dict(self):
        return {"kind": self.kind, "target": self.target}


@dataclass(frozen=True)
class Silent(ByzantineStrategy):
    kind: str = field(default="silent", init=False)

    def payload(self, view, sender, receiver, t):
        return None


@dataclass(frozen=True)
class Mimic(ByzantineStrategy):
    """Replay a non-faulty victim's true pair."""

    victim: int = 0
    kind: str = field(default="mimic", init=False)

    def payload(self, view, sender, receiver, t):
        return (view.estimates[self.victim], view.gradients[self.victim])

    def to_dict(self):
        return {"kind": self.kind, "victim": self.victim}


STRATEGIES = {
    "constant": Constant,
    "random_uniform": RandomUniform,
    "opposite_extreme": OppositeExtreme,
    "collude_shift": ColludeShift,
    "silent": Silent,
    "mimic": Mimic,
}


def apply_adversary(
    strategy: ByzantineStrategy, view: RoundView, sender: int, receiver: int, t: int
) -> WireTuple | None:
    """Payload faulty ``sender`` delivers to ``receiver`` in iteration ``t``.

    ``None`` means the sender stays silent and the receiver falls back to its
    default tuple.
    """
    p = strategy.payload(view, sender, receiver, t)
    if p is None:
        return None
    w, g = float(p[0]), float(p[1])
    if not (math.isfinite(w) and math.isfinite(g)):
        raise ParameterError(f"strategy {strategy.kind} produced a non-finite payload")
    return WireTuple(sender, t, "pair", (w, g))


def strategy_from_dict(spec: Mapping[str, Any], path: str = "adversary") -> ByzantineStrategy:
    if not isinstance(spec, Mapping) or "kind" not in spec:
        raise ConfigError("expected a table with a 'kind' entry", path)
    kind = spec["kind"]
    cls = STRATEGIES.get(kind)
    if cls is None:
        raise ConfigError(f"unknown strategy {kind!r}; choose from {sorted(STRATEGIES)}", f"{path}.kind")
    kwargs = {k: v for k, v in spec.items() if k != "kind"}
    for k in ("w_range", "g_range"):
        if k in kwargs:
            kwargs[k] = tuple(kwargs[k])
    try:
        return cls(**kwargs)
    except (TypeError, ParameterError) as exc:
        raise ConfigError(str(exc), path) from None


# -- crash schedules ---------------------------------------------------------

PHASES = ("before_send", "mid_send", "after_step3")


@dataclass(frozen=True)
class CrashEvent:
    """Agent ``agent`` crashes during iteration ``iteration``.

    ``before_send``  sends nothing in that iteration.
    ``mid_send``     its messages of that iteration reach only ``recipients``.
    ``after_step3``  (alg1) finishes the gradient exchange, but its auxiliary
                     value reaches only ``recipients`` (empty by default).
    """

    agent: int
    iteration: int
    phase: str = "before_send"
    recipients: frozenset[int] = frozenset()

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ParameterError(f"unknown crash phase {self.phase!r}")
        if self.iteration < 1:
            raise ParameterError(f"crash iteration must be >= 1, got {self.iteration}")
        object.__setattr__(self, "recipients", frozenset(self.recipients))

    def to_dict(self) -> dict[str, Any]:
        return {"agent": self.agent, "iteration": self.iteration, "phase": self.phase,
                "recipients": sorted(self.recipients)}


@dataclass(frozen=True)
class CrashSchedule:
    events: tuple[CrashEvent, ...] = ()

    def __post_init__(self):
        events = tuple(sorted(self.events, key=lambda e: (e.iteration, e.agent)))
        agents = [e.agent for e in events]
        if len(set(agents)) != len(agents):
            raise ParameterError("an agent can crash at most once")
        object.__setattr__(self, "events", events)

    def at(self, t: int) -> dict[int, CrashEvent]:
        return {e.agent: e for e in self.events if e.iteration == t}

    def agents(self) -> frozenset[int]:
        return frozenset(e.agent for e in self.events)

    def to_list(self) -> list[dict[str, Any]]:
        return [e.to_dict() for e in self.events]


def generate_crash_schedule(
    kind: str,
    faulty_ids: Iterable[int],
    seed: int = 0,
    *,
    events: Iterable[CrashEvent | tuple] = (),
    prob: float = 0.0,
    horizon: int = 1000,
    n: int | None = None,
) -> CrashSchedule:
    """Build a crash schedule.

    ``none``            nobody crashes.
    ``at_iterations``   the given events, as CrashEvents or
                        ``(agent, iteration, phase[, recipients])`` tuples.
    ``random``          each faulty agent crashes in each iteration up to
                        ``horizon`` with probability ``prob``; the phase is
                        drawn from before_send/mid_send and a mid-send
                        delivers to a random subset of the ``n`` agents.
    """
    faulty = frozenset(faulty_ids)
    if kind == "none":
        return CrashSchedule()
    if kind == "at_iterations":
        built = [e if isinstance(e, CrashEvent) else CrashEvent(*e) for e in events]
        stray = {e.agent for e in built} - faulty
        if stray:
            raise ParameterError(f"crash targets {sorted(stray)} are not faulty agents")
        return CrashSchedule(tuple(built))
    if kind == "random":
        if not 0.0 <= prob <= 1.0:
            raise ParameterError(f"crash probability must lie in [0, 1], got {prob}")
        out = []
        for a in sorted(faulty):
            for t in range(1, horizon + 1):
                if _rng.uniform(seed, "crash-time", a, t) < prob:
                    phase = PHASES[int(_rng.uniform(seed, "crash-phase", a) * 2)]
                    rec = frozenset()
                    if phase == "mid_send" and n is not None:
                        rec = frozenset(j for j in range(n)
                                        if j != a and _rng.uniform(seed, "crash-recipients", a, j) < 0.5)
                    out.append(CrashEvent(a, t, phase, rec))
                    break
        return CrashSchedule(tuple(out))
    raise ParameterError(f"unknown crash schedule kind {kind!r}")
