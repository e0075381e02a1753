"""Finite-horizon checks of the convergence and structural guarantees.

The guarantees are limits as t grows; each one becomes a threshold test at a
fixed horizon. All thresholds live in ``THRESHOLDS``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .engine import ScenarioConfig, Trace
from .errors import ParameterError
from .protocol import StepSchedule, stepsize
from .valid_set import (FaultSplit, ValidSet, compute_valid_set_async,
                        compute_valid_set_byz, compute_valid_set_crash, dist_to_set)

THRESHOLDS = {
    "final_gap": 1e-3,
    "final_max_dist": 5e-2,
    "oracle_hausdorff": 0.1,
    "dist_recursion_slack": 1e-9,
    "gap_sum_last_quarter": 0.05,
    "geometric_tail": 1e-3,
    "hull_slack": 1e-12,
}


@dataclass
class MetricSeries:
    name: str
    values: list[float]

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, t: int) -> float:
        return self.values[t]

    @property
    def final(self) -> float:
        return self.values[-1]


class Violation(NamedTuple):
    t: int
    receiver: int
    check: str
    value: float
    lo: float
    hi: float


def valid_set_for(config: ScenarioConfig, tol: float = 1e-9) -> ValidSet:
    """Target interval for the scenario's fault model."""
    if config.protocol in ("alg1", "alg2"):
        split = FaultSplit.from_faulty(config.n, config.faulty_ids, config.f)
        return compute_valid_set_crash(config.functions, split, tol)
    if config.protocol == "alg3":
        return compute_valid_set_byz([config.functions[i] for i in config.non_faulty], config.f, tol)
    return compute_valid_set_async(config.functions, config.n, config.f, tol)


def consensus_gap(trace: Trace) -> MetricSeries:
    if not trace.rounds:
        raise ParameterError("empty trace")
    vals = []
    for r in trace.rounds:
        xs = r.estimates.values()
        vals.append(max(xs) - min(xs))
    return MetricSeries("gap", vals)


def max_dist_series(trace: Trace, vs: ValidSet) -> MetricSeries:
    return MetricSeries("max_dist", [max(dist_to_set(x, vs) for x in r.estimates.values())
                                     for r in trace.rounds])


class GapSum(NamedTuple):
    total: float
    last_quarter: float

    @property
    def last_quarter_fraction(self) -> float:
        return self.last_quarter / self.total if self.total > 0 else 0.0


def weighted_gap_sum(trace: Trace, sched: StepSchedule) -> GapSum:
    """``sum_t stepsize(t) * gap[t]`` and the part contributed by the last quarter."""
    gap = consensus_gap(trace).values
    T = len(gap)
    start = (3 * T) // 4
    total = last = 0.0
    for t, g in enumerate(gap):
        term = stepsize(sched, t) * g
        total += term
        if t >= start:
            last += term
    return GapSum(total, last)


def geometric_tail(sched: StepSchedule, b: float, T: int) -> MetricSeries:
    """``l(t) = sum_{r<t} stepsize(r) * b**(t-r)`` for t = 0..T."""
    if not 0 <= b < 1:
        raise ParameterError(f"need 0 <= b < 1, got {b}")
    vals = [0.0]
    ell = 0.0
    for t in range(T):
        ell = b * (ell + stepsize(sched, t))
        vals.append(ell)
    return MetricSeries("geometric_tail", vals)


def _hull_violations(trace: Trace, which: str) -> list[Violation]:
    slack = THRESHOLDS["hull_slack"]
    out = []
    for prev, rec in zip(trace.rounds, trace.rounds[1:]):
        if not rec.aggregates:
            continue
        if which == "gradient":
            ref = rec.honest_gradients.values()
        else:
            ref = prev.estimates.values()
        lo, hi = min(ref), max(ref)
        pad = slack * max(1.0, abs(lo), abs(hi))
        for j, (w_bar, g_tilde) in rec.aggregates.items():
            v = g_tilde if which == "gradient" else w_bar
            if not lo - pad <= v <= hi + pad:
                out.append(Violation(rec.t, j, f"{which}_hull", v, lo, hi))
    return out


def check_gradient_hull(trace: Trace) -> list[Violation]:
    """Trimmed gradient midpoints outside the hull of the true non-faulty gradients."""
    return _hull_violations(trace, "gradient")


def check_estimate_hull(trace: Trace) -> list[Violation]:
    """Trimmed-mean estimates outside the hull of last round's non-faulty estimates."""
    return _hull_violations(trace, "estimate")


def check_weight_bound(trace: Trace, f: int) -> list[Violation]:
    """Midpoints not expressible with >= |N|-f weights of at least 1/(2(|N|-f))."""
    rows = [r for r in trace.rounds[1:] if r.aggregates]
    if not rows:
        return []
    ids = sorted(rows[0].honest_gradients)
    m = len(ids) - f
    if m < 1:
        raise ParameterError(f"need |N| > f, got |N|={len(ids)}, f={f}")
    beta = 1.0 / (2 * m)
    G = np.array([[r.honest_gradients[i] for i in ids] for r in rows])
    lo, hi = kernels.envelope_bounds(G, beta, m)
    slack = THRESHOLDS["hull_slack"]
    out = []
    for k, rec in enumerate(rows):
        pad = slack * max(1.0, float(np.max(np.abs(G[k]))))
        for j, (_, g_tilde) in rec.aggregates.items():
            if not lo[k] - pad <= g_tilde <= hi[k] + pad:
                out.append(Violation(rec.t, j, "weight_bound", g_tilde, float(lo[k]), float(hi[k])))
    return out


def check_dist_recursion(trace: Trace, vs: ValidSet, gradient_bound: float,
                         loose: bool = False) -> list[Violation]:
    """Rounds where the worst distance to the valid set grew more than allowed.

    Strict form: ``d[t] <= max(lam*L, d[t-1]) + slack``. The loose form adds
    ``lam*L*gap[t-1]`` for algorithms whose updates mix other agents' steps.
    """
    d = max_dist_series(trace, vs).values
    gap = consensus_gap(trace).values
    slack = THRESHOLDS["dist_recursion_slack"]
    out = []
    for t in range(1, len(d)):
        step = trace.rounds[t].lam * gradient_bound
        bound = max(step, d[t - 1]) + slack
        if loose:
            bound += step * gap[t - 1]
        if d[t] > bound:
            out.append(Violation(t, -1, "dist_recursion", d[t], 0.0, bound))
    return out


def classify_resilient(x: float, g: float, lam: float, vs: ValidSet) -> bool:
    """Whether one gradient step from x leaves, or jumps across, the valid set."""
    y = x - lam * g
    if vs.lo <= x <= vs.hi:
        return not vs.lo <= y <= vs.hi
    if x > vs.hi:
        return y < vs.lo
    return y > vs.hi


def per_round_flags(trace: Trace, violations: list[Violation]) -> list[int]:
    """1 for rounds without a violation, 0 otherwise."""
    bad = {v.t for v in violations}
    return [0 if r.t in bad else 1 for r in trace.rounds]


def attach_metrics(trace: Trace, config: ScenarioConfig, vs: ValidSet | None = None) -> dict:
    """Compute the standard series and checks and store them on ``trace.metrics``."""
    vs = vs if vs is not None else valid_set_for(config)
    gap = consensus_gap(trace)
    dist = max_dist_series(trace, vs)
    if config.protocol == "alg3":
        grad_v = check_gradient_hull(trace)
        est_v = check_estimate_hull(trace)
        weight_v = check_weight_bound(trace, config.f)
    else:
        grad_v = est_v = weight_v = []
    trace.metrics.update({
        "lambda": [r.lam for r in trace.rounds],
        "gap": gap.values,
        "max_dist": dist.values,
        "grad_hull_ok": per_round_flags(trace, grad_v),
        "est_hull_ok": per_round_flags(trace, est_v),
        "weight_ok": per_round_flags(trace, weight_v),
    })
    return {"valid_set": vs, "gradient_hull": grad_v, "estimate_hull": est_v,
            "weight_bound": weight_v}
