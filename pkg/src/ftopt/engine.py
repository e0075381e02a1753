"""Deterministic simulation of the fault-tolerant optimization algorithms.

``run_sync`` executes lock-step rounds for alg1, alg2, alg3 (and alg4 with
all delays equal). ``run_async`` executes alg4 on an event queue with
per-message delays. Both are pure functions of the ScenarioConfig: the same
config always yields the same Trace, byte for byte once serialized.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterator, Mapping

import numpy as np

from . import _rng, kernels
from .adversary import (ByzantineStrategy, CrashEvent, CrashSchedule, RoundView,
                        Silent, apply_adversary)
from .errors import ConfigError
from .functions import AdmissibleFunction
from .protocol import (StepSchedule, WireTuple, alg1_step3_update, alg1_step5_update,
                       stepsize)

PROTOCOLS = ("alg1", "alg2", "alg3", "alg4")


# -- delay models ------------------------------------------------------------

@dataclass(frozen=True)
class DelayModel:
    """Message delay in integer time units.

    ``uniform_int``           delay drawn uniformly from ``lo..hi`` per
                              (sender, receiver, iteration).
    ``fixed``                 ``by_sender`` / ``by_link`` ("i->j") tables,
                              ``default`` elsewhere.
    ``adversarial_slowest``   messages from ``slow_ids`` (or the ``k``
                              highest ids never scheduled to crash) take
                              ``slow_delay``; everything else takes 1.
    """

    kind: str
    lo: int = 1
    hi: int = 1
    default: int = 1
    by_sender: Mapping[int, int] = field(default_factory=dict)
    by_link: Mapping[str, int] = field(default_factory=dict)
    k: int = 0
    slow_delay: int = 1_000_000
    slow_ids: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("uniform_int", "fixed", "adversarial_slowest"):
            raise ConfigError(f"unknown delay model {self.kind!r}", "delay.kind")
        if self.kind == "uniform_int" and not 0 <= self.lo <= self.hi:
            raise ConfigError("need 0 <= lo <= hi", "delay")
        if self.kind == "adversarial_slowest" and (self.k < 0 or self.slow_delay < 1):
            raise ConfigError("need k >= 0 and slow_delay >= 1", "delay")
        for d in [self.default, *self.by_sender.values(), *self.by_link.values()]:
            if d < 0:
                raise ConfigError("delays must be non-negative", "delay")

    def resolve(self, n: int, never_crash: list[int]) -> "DelayModel":
        if self.kind != "adversarial_slowest" or self.slow_ids is not None:
            return self
        return replace(self, slow_ids=tuple(sorted(never_crash)[-self.k:] if self.k else ()))

    def delay(self, sender: int, receiver: int, iteration: int, seed: int) -> int:
        if self.kind == "uniform_int":
            u = _rng.uniform(seed, "delay", sender, receiver, iteration)
            return self.lo + int(u * (self.hi - self.lo + 1))
        if self.kind == "fixed":
            link = self.by_link.get(f"{sender}->{receiver}")
            if link is not None:
                return link
            return self.by_sender.get(sender, self.default)
        return self.slow_delay if sender in (self.slow_ids or ()) else 1

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "uniform_int":
            return {"kind": self.kind, "lo": self.lo, "hi": self.hi}
        if self.kind == "fixed":
            return {"kind": self.kind, "default": self.default,
                    "by_sender": {str(k): v for k, v in sorted(self.by_sender.items())},
                    "by_link": dict(sorted(self.by_link.items()))}
        d = {"kind": self.kind, "k": self.k, "slow_delay": self.slow_delay}
        if self.slow_ids is not None:
            d["slow_ids"] = list(self.slow_ids)
        return d


# -- scenario ----------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    f: int
    protocol: str
    functions: tuple[AdmissibleFunction, ...]
    init_estimates: tuple[float, ...]
    schedule: StepSchedule
    max_iters: int
    seed: int = 0
    faulty_ids: frozenset[int] = frozenset()
    adversary: ByzantineStrategy | None = None
    crash_schedule: CrashSchedule = CrashSchedule()
    delay_model: DelayModel | None = None
    record_messages: bool = False

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "init_estimates", tuple(float(x) for x in self.init_estimates))
        object.__setattr__(self, "faulty_ids", frozenset(self.faulty_ids))

    @property
    def non_faulty(self) -> list[int]:
        return [i for i in range(self.n) if i not in self.faulty_ids]

    @property
    def gradient_bound(self) -> float:
        return max(fn.gradient_bound for fn in self.functions)

    def validate(self) -> None:
        n, f = self.n, self.f
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"must be a positive integer, got {n!r}", "n")
        if not isinstance(f, int) or f < 0:
            raise ConfigError(f"must be a non-negative integer, got {f!r}", "f")
        if n <= 3 * f:
            raise ConfigError(f"invariant n > 3f violated (n={n}, f={f})", "n")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; choose from {PROTOCOLS}", "protocol")
        if len(self.functions) != n:
            raise ConfigError(f"expected {n} functions, got {len(self.functions)}", "functions")
        if len(self.init_estimates) != n:
            raise ConfigError(f"expected {n} initial estimates, got {len(self.init_estimates)}", "init")
        if not all(math.isfinite(x) for x in self.init_estimates):
            raise ConfigError("initial estimates must be finite", "init")
        if not isinstance(self.max_iters, int) or self.max_iters < 0:
            raise ConfigError(f"must be a non-negative integer, got {self.max_iters!r}", "max_iters")
        bad = [i for i in self.faulty_ids if not 0 <= i < n]
        if bad:
            raise ConfigError(f"agent ids {sorted(bad)} out of range 0..{n - 1}", "faulty")
        if len(self.faulty_ids) > f:
            raise ConfigError(f"{len(self.faulty_ids)} faulty agents exceed f={f}", "faulty")

        events = self.crash_schedule.events
        if self.protocol == "alg3":
            if events:
                raise ConfigError("alg3 models Byzantine faults; crash events are not allowed", "crashes")
            if self.faulty_ids and self.adversary is None:
                raise ConfigError("alg3 with faulty agents needs an adversary strategy", "adversary")
            victim = getattr(self.adversary, "victim", None)
            if victim is not None and (victim in self.faulty_ids or not 0 <= victim < n):
                raise ConfigError("mimic victim must be a non-faulty agent", "adversary.victim")
        else:
            if self.adversary is not None:
                raise ConfigError(f"{self.protocol} models crash faults; adversary not allowed", "adversary")
            for k, e in enumerate(events):
                if e.agent not in self.faulty_ids:
                    raise ConfigError(f"agent {e.agent} is not in the faulty set", f"crashes[{k}].agent")
                if e.phase == "after_step3" and self.protocol != "alg1":
                    raise ConfigError("phase after_step3 exists only in alg1", f"crashes[{k}].phase")
                if any(not 0 <= r < n for r in e.recipients):
                    raise ConfigError("recipient out of range", f"crashes[{k}].recipients")

    def to_dict(self) -> dict[str, Any]:
        d = {
            "n": self.n, "f": self.f, "protocol": self.protocol,
            "functions": [fn.to_dict() for fn in self.functions],
            "init": list(self.init_estimates),
            "schedule": self.schedule.to_dict(),
            "max_iters": self.max_iters, "seed": self.seed,
            "faulty": sorted(self.faulty_ids),
            "crashes": self.crash_schedule.to_list(),
        }
        if self.adversary is not None:
            d["adversary"] = self.adversary.to_dict()
        if self.delay_model is not None:
            d["delay"] = self.delay_model.to_dict()
        return d


# -- trace -------------------------------------------------------------------

@dataclass
class RoundRecord:
    """Snapshot after iteration ``t``; ``estimates`` covers exactly N[t]."""

    t: int
    lam: float
    estimates: dict[int, float]
    crashes_applied: list[CrashEvent] = field(default_factory=list)
    delivered: list[tuple[int, WireTuple]] = field(default_factory=list)
    aux: dict[int, float] = field(default_factory=dict)
    honest_gradients: dict[int, float] = field(default_factory=dict)
    aggregates: dict[int, tuple[float, float]] = field(default_factory=dict)
    trims: dict[int, tuple[tuple[int, ...], tuple[int, ...]]] = field(default_factory=dict)
    byz_payloads: list[tuple[int, int, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "lambda": self.lam,
            "estimates": {str(k): v for k, v in sorted(self.estimates.items())},
            "crashes": [e.to_dict() for e in self.crashes_applied],
            "aux": {str(k): v for k, v in sorted(self.aux.items())},
            "honest_gradients": {str(k): v for k, v in sorted(self.honest_gradients.items())},
            "aggregates": {str(k): list(v) for k, v in sorted(self.aggregates.items())},
            "trims": {str(k): {"w": list(a), "g": list(b)} for k, (a, b) in sorted(self.trims.items())},
            "byz_payloads": [list(p) for p in self.byz_payloads],
            "delivered": [[r, m.to_dict()] for r, m in self.delivered],
        }


@dataclass
class Trace:
    config: dict[str, Any]
    rounds: list[RoundRecord]
    metrics: dict[str, list] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rounds)

    @property
    def final(self) -> RoundRecord:
        return self.rounds[-1]

    def jsonl_lines(self) -> Iterator[str]:
        for r in self.rounds:
            yield json.dumps(r.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(self.config, sort_keys=True).encode())
        for line in self.jsonl_lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()


# -- synchronous engine ------------------------------------------------------

def _reaches(event: CrashEvent | None, receiver: int) -> bool:
    """Whether a message from a (possibly crashing) sender gets to ``receiver``."""
    if event is None:
        return True
    if event.phase == "before_send":
        return False
    return receiver in event.recipients


def run_sync(config: ScenarioConfig) -> Trace:
    config.validate()
    n = config.n
    x = {i: config.init_estimates[i] for i in range(n)}
    if config.protocol == "alg3":
        x = {i: x[i] for i in config.non_faulty}
    rounds = [RoundRecord(0, 0.0, dict(x))]
    step = {"alg1": _round_alg1, "alg2": _round_alg2,
            "alg3": _round_alg3, "alg4": _round_alg4_sync}[config.protocol]
    for t in range(1, config.max_iters + 1):
        lam = stepsize(config.schedule, t - 1)
        rec = step(config, x, t, lam)
        x = rec.estimates
        rounds.append(rec)
    return Trace(config.to_dict(), rounds)


def _crashing(config: ScenarioConfig, alive, t: int) -> dict[int, CrashEvent]:
    return {a: e for a, e in config.crash_schedule.at(t).items() if a in alive}


def _round_alg1(config, x, t, lam):
    fns = config.functions
    crashing = _crashing(config, x, t)
    active = [i for i in sorted(x)
              if crashing.get(i) is None or crashing[i].phase != "before_send"]
    rec = RoundRecord(t, lam, {}, crashes_applied=list(crashing.values()))

    def round1(i: int, j: int) -> bool:
        e = crashing.get(i)
        return i == j or e is None or e.phase == "after_step3" or j in e.recipients

    s = {}
    for j in active:
        grads = [fns[i].grad(x[j]) for i in active if round1(i, j) and round1(j, i)]
        s[j] = alg1_step3_update(x[j], grads, lam)
        if config.record_messages:
            rec.delivered.extend((j, WireTuple(i, t, "gradient_reply", (fns[i].grad(x[j]),)))
                                 for i in active if round1(i, j) and round1(j, i))
    rec.aux = s

    cache: dict[tuple[int, ...], float] = {}
    for j in active:
        if j in crashing:
            continue
        senders = tuple(i for i in active if _reaches(crashing.get(i), j))
        if senders not in cache:
            cache[senders] = alg1_step5_update([s[i] for i in senders])
        rec.estimates[j] = cache[senders]
        if config.record_messages:
            rec.delivered.extend((j, WireTuple(i, t, "aux", (s[i],))) for i in senders)
    return rec


def _displaced_round(config, x, t, lam, crashing, select):
    fns = config.functions
    senders = [i for i in sorted(x) if crashing.get(i) is None or crashing[i].phase != "before_send"]
    grads = {i: fns[i].grad(x[i]) for i in senders}
    rec = RoundRecord(t, lam, {}, crashes_applied=list(crashing.values()))
    cache: dict[tuple[int, ...], float] = {}
    for j in sorted(x):
        if j in crashing:
            continue
        got = select([i for i in senders if _reaches(crashing.get(i), j)])
        key = tuple(got)
        if key not in cache:
            w = np.array([x[i] for i in got])
            g = np.array([grads[i] for i in got])
            cache[key] = float(kernels.displaced_mean(w, g, lam))
        rec.estimates[j] = cache[key]
        if config.record_messages:
            kind = "pair" if config.protocol == "alg2" else "triple"
            rec.delivered.extend(
                (j, WireTuple(i, t, kind, (x[i], grads[i]) if kind == "pair" else (x[i], grads[i], t)))
                for i in got)
    return rec


def _round_alg2(config, x, t, lam):
    return _displaced_round(config, x, t, lam, _crashing(config, x, t), lambda got: got)


def _round_alg4_sync(config, x, t, lam):
    # lock-step alg4: all triples arrive together, the n-f lowest ids are used
    quota = config.n - config.f
    return _displaced_round(config, x, t, lam, _crashing(config, x, t), lambda got: got[:quota])


def _round_alg3(config, x, t, lam):
    n, f = config.n, config.f
    honest = sorted(x)
    faulty = sorted(config.faulty_ids)
    fns = config.functions
    grads = {i: fns[i].grad(x[i]) for i in honest}
    view = RoundView(x, grads, config.gradient_bound, config.seed)
    strategy = config.adversary or Silent()

    W = np.empty((len(honest), n))
    G = np.empty((len(honest), n))
    W[:, honest] = [x[i] for i in honest]
    G[:, honest] = [grads[i] for i in honest]
    rec = RoundRecord(t, lam, {}, honest_gradients=grads)
    for r, j in enumerate(honest):
        for i in faulty:
            msg = apply_adversary(strategy, view, i, j, t)
            if msg is None:
                W[r, i], G[r, i] = x[j], 0.0  # default tuple
            else:
                W[r, i], G[r, i] = msg.values
                rec.byz_payloads.append((i, j, msg.values[0], msg.values[1]))
    x_new, w_bar, g_mid, kw, kg = kernels.trimmed_round(W, G, f, lam)
    for r, j in enumerate(honest):
        rec.estimates[j] = float(x_new[r])
        rec.aggregates[j] = (float(w_bar[r]), float(g_mid[r]))
        rec.trims[j] = (tuple(int(c) for c in kw[r]), tuple(int(c) for c in kg[r]))
        if config.record_messages:
            rec.delivered.extend((j, WireTuple(i, t, "pair", (float(W[r, i]), float(G[r, i]))))
                                 for i in range(n))
    return rec


# -- asynchronous engine -----------------------------------------------------

def run_async(config: ScenarioConfig) -> Trace:
    """Event-queue execution of alg4.

    Each agent broadcasts ``(x[t-1], h'(x[t-1]), t)`` as soon as it finishes
    iteration t-1 and updates once ``n - f`` iteration-t triples have
    arrived, using the earliest ones (ties by sender id). Time is an integer.
    """
    config.validate()
    if config.protocol != "alg4":
        raise ConfigError("run_async executes alg4 only", "protocol")
    if config.delay_model is None:
        raise ConfigError("run_async needs a delay model", "delay")
    n, f, T, seed = config.n, config.f, config.max_iters, config.seed
    fns = config.functions
    crash_at = {e.agent: e for e in config.crash_schedule.events}
    delays = config.delay_model.resolve(n, [i for i in range(n) if i not in crash_at])
    quota = n - f

    hist = {j: [config.init_estimates[j]] for j in range(n)}
    crashed: set[int] = set()
    inbox: dict[int, dict[int, list]] = {j: {} for j in range(n)}
    used: dict[tuple[int, int], list] = {}
    heap: list = []

    pending = set(range(n))  # live agents that still owe iterations

    def broadcast(i: int, it: int, now: int) -> None:
        e = crash_at.get(i)
        if e is not None and e.iteration == it:
            crashed.add(i)
            pending.discard(i)
            if e.phase == "before_send":
                return
        w = hist[i][it - 1]
        g = fns[i].grad(w)
        for j in range(n):
            if e is not None and e.iteration == it and j not in e.recipients:
                continue
            heapq.heappush(heap, (now + delays.delay(i, j, it, seed), j, i, it, w, g))

    if T > 0:
        for i in range(n):
            broadcast(i, 1, 0)

    while heap and pending:
        now, j, i, it, w, g = heapq.heappop(heap)
        if j in crashed:
            continue
        cur = len(hist[j])
        if it < cur or cur > T:
            continue
        inbox[j].setdefault(it, []).append((now, i, w, g))
        while cur <= T and len(inbox[j].get(cur, ())) >= quota:
            first = sorted(inbox[j].pop(cur))[:quota]
            first.sort(key=lambda m: m[1])
            lam = stepsize(config.schedule, cur - 1)
            hist[j].append(float(kernels.displaced_mean(
                np.array([m[2] for m in first]), np.array([m[3] for m in first]), lam)))
            if config.record_messages:
                used[(j, cur)] = first
            cur += 1
            if cur > T:
                pending.discard(j)
            else:
                broadcast(j, cur, now)
                if j in crashed:
                    break

    rounds = []
    for t in range(T + 1):
        est = {j: hist[j][t] for j in range(n)
               if len(hist[j]) > t and not (j in crash_at and crash_at[j].iteration <= t)}
        rec = RoundRecord(t, stepsize(config.schedule, t - 1) if t else 0.0, est,
                          crashes_applied=[e for e in config.crash_schedule.events if e.iteration == t])
        if config.record_messages and t:
            for j in sorted(est):
                rec.delivered.extend((j, WireTuple(i, t, "triple", (w, g, t)))
                                     for _, i, w, g in used.get((j, t), ()))
        rounds.append(rec)
    d = config.to_dict()
    d["delay"] = delays.to_dict()
    return Trace(d, rounds)


def simulate(config: ScenarioConfig) -> Trace:
    """Run alg4 on the event queue when a delay model is given, else lock-step."""
    if config.protocol == "alg4" and config.delay_model is not None:
        return run_async(config)
    return run_sync(config)
