"""Per-agent state transitions for the four iterative algorithms.

Every function here is pure: it maps the messages an agent received in one
iteration to its new state. Which messages get delivered is the engine's
business.

alg1  two exchanges per iteration: gradients of every agent at my estimate,
      then averaging of the displaced estimates ``s``.
alg2  one exchange of ``(x, h'(x))`` pairs, average of displaced estimates.
alg3  Byzantine-tolerant: trimmed mean of estimates minus the step times the
      midpoint of the trimmed gradients.
alg4  asynchronous alg2 over the first ``n - f`` triples received.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import ParameterError, ProtocolViolation


@dataclass(frozen=True)
class StepSchedule:
    """Diminishing stepsizes ``scale / (t + 1) ** exponent``.

    ``harmonic`` is the exponent-1 case. Exponents in (0.5, 1] keep the sum
    of steps divergent and the sum of squares finite.
    """

    kind: str
    scale: float = 1.0
    exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in ("harmonic", "power"):
            raise ParameterError(f"unknown schedule kind {self.kind!r}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ParameterError(f"scale must be positive, got {self.scale}")
        if self.kind == "harmonic" and self.exponent != 1.0:
            raise ParameterError("harmonic schedules have exponent 1")
        if not 0.5 < self.exponent <= 1.0:
            raise ParameterError(f"exponent must lie in (0.5, 1], got {self.exponent}")

    @classmethod
    def harmonic(cls, scale: float = 1.0) -> "StepSchedule":
        return cls("harmonic", float(scale), 1.0)

    @classmethod
    def power(cls, scale: float, exponent: float) -> "StepSchedule":
        return cls("power", float(scale), float(exponent))

    def to_dict(self) -> dict:
        if self.kind == "harmonic":
            return {"kind": "harmonic", "scale": self.scale}
        return {"kind": "power", "scale": self.scale, "exponent": self.exponent}


def stepsize(sched: StepSchedule, t: int) -> float:
    if t < 0:
        raise ParameterError(f"stepsize index must be >= 0, got {t}")
    if sched.exponent == 1.0:
        return sched.scale / (t + 1)
    return sched.scale / (t + 1) ** sched.exponent


def square_sum_tail_bound(sched: StepSchedule, t0: int) -> float:
    """Analytic upper bound on ``sum_{t >= t0} stepsize(t)**2`` (integral test)."""
    if t0 < 1:
        raise ParameterError("tail bound needs t0 >= 1")
    p2 = 2 * sched.exponent
    # sum_{t>=t0} (t+1)^-p2 <= int_{t0}^inf u^-p2 du
    return sched.scale ** 2 * t0 ** (1 - p2) / (p2 - 1)


@dataclass
class AgentState:
    id: int
    x: float
    s: float | None = None


PAYLOAD_ARITY = {"estimate": 1, "gradient_reply": 1, "aux": 1, "pair": 2, "triple": 3}


@dataclass(frozen=True)
class WireTuple:
    sender: int
    iteration: int
    kind: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.iteration < 1:
            raise ProtocolViolation(f"iteration tags start at 1, got {self.iteration}")
        arity = PAYLOAD_ARITY.get(self.kind)
        if arity is None:
            raise ProtocolViolation(f"unknown payload kind {self.kind!r}")
        if len(self.values) != arity:
            raise ProtocolViolation(f"{self.kind} carries {arity} values, got {len(self.values)}")

    def to_dict(self) -> dict:
        return {"sender": self.sender, "iteration": self.iteration,
                "kind": self.kind, "values": list(self.values)}


def _nonempty(values, what: str) -> None:
    if len(values) == 0:
        raise ProtocolViolation(f"no {what} received")


def alg1_step3_update(x_prev: float, received_gradients: Sequence[float], lam: float) -> float:
    """Displaced estimate ``s = x - lam * mean(received gradients)``."""
    _nonempty(received_gradients, "gradients")
    total = 0.0
    for g in received_gradients:
        total += g
    return x_prev - lam / len(received_gradients) * total


def alg1_step5_update(received_aux: Sequence[float]) -> float:
    _nonempty(received_aux, "auxiliary values")
    total = 0.0
    for s in received_aux:
        total += s
    return total / len(received_aux)


def alg2_update(received_pairs: Sequence[tuple[float, float]], lam: float) -> float:
    _nonempty(received_pairs, "pairs")
    w = np.array([p[0] for p in received_pairs], dtype=np.float64)
    g = np.array([p[1] for p in received_pairs], dtype=np.float64)
    return float(kernels.displaced_mean(w, g, lam))


def trim(values: Sequence[tuple[int, float]], f: int) -> list[tuple[int, float]]:
    """Drop the f smallest and f largest values; ties ordered by agent id."""
    if f < 0:
        raise ParameterError("f must be non-negative")
    if len(values) < 2 * f + 1:
        raise ProtocolViolation(f"need at least {2 * f + 1} values to trim f={f}, got {len(values)}")
    ordered = sorted(values, key=lambda item: (item[1], item[0]))
    return ordered[f:len(ordered) - f]


class Alg3Step(NamedTuple):
    x: float
    w_bar: float
    g_tilde: float
    kept_w: tuple[int, ...]
    kept_g: tuple[int, ...]


def alg3_step(received: Sequence[tuple[int, float, float]], f: int, lam: float,
              n: int | None = None) -> Alg3Step:
    """Full alg3 transition, including which senders survived each trim."""
    if n is not None and len(received) != n:
        raise ProtocolViolation(f"alg3 needs exactly n={n} tuples, got {len(received)}")
    if len(received) < 2 * f + 1:
        raise ProtocolViolation(f"need at least {2 * f + 1} tuples, got {len(received)}")
    ordered = sorted(received, key=lambda r: r[0])
    ids = [r[0] for r in ordered]
    if len(set(ids)) != len(ids):
        raise ProtocolViolation("duplicate sender in alg3 input")
    W = np.array([[r[1] for r in ordered]], dtype=np.float64)
    G = np.array([[r[2] for r in ordered]], dtype=np.float64)
    x, wb, gt, kw, kg = kernels.trimmed_round(W, G, f, lam)
    return Alg3Step(float(x[0]), float(wb[0]), float(gt[0]),
                    tuple(ids[k] for k in kw[0]), tuple(ids[k] for k in kg[0]))


def alg3_update(received: Sequence[tuple[int, float, float]], f: int, lam: float,
                n: int | None = None) -> float:
    return alg3_step(received, f, lam, n).x


def alg4_update(received_triples: Sequence[tuple[float, float, int]], lam: float,
                n: int, f: int, iteration: int) -> float:
    """alg2 update over exactly ``n - f`` triples tagged with ``iteration``."""
    if len(received_triples) != n - f:
        raise ProtocolViolation(f"alg4 needs exactly n-f={n - f} triples, got {len(received_triples)}")
    for w, g, t in received_triples:
        if t != iteration:
            raise ProtocolViolation(f"triple tagged {t} used in iteration {iteration}")
    return alg2_update([(w, g) for w, g, _ in received_triples], lam)
