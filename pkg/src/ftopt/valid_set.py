"""Achievable-optima intervals for crash, Byzantine and asynchronous faults.

A *valid function* is a weighted combination of the agents' costs whose
weights satisfy the fault model's constraints. The valid set is the union of
the minimizers of all valid functions; in one dimension it is a closed
interval. Its endpoints are located by bisection on monotone gradient
envelopes: the largest (resp. smallest) gradient any valid function can have
at ``x``. ``brute_force_valid_set`` recomputes the same interval by direct
enumeration of weight vectors and serves as the independent check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ParameterError
from .functions import AdmissibleFunction
from .roots import threshold

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ValidSet:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ParameterError(f"valid set endpoints must be finite: [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ParameterError(f"empty valid set: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class FaultSplit:
    """Partition of agent ids into non-faulty and faulty, with fault budget f."""

    non_faulty: frozenset[int]
    faulty: frozenset[int]
    f: int

    def __post_init__(self):
        object.__setattr__(self, "non_faulty", frozenset(self.non_faulty))
        object.__setattr__(self, "faulty", frozenset(self.faulty))
        if self.non_faulty & self.faulty:
            raise ParameterError("non-faulty and faulty sets overlap")
        if self.f < 0 or len(self.faulty) > self.f:
            raise ParameterError(f"{len(self.faulty)} faulty agents exceed f={self.f}")
        if self.n <= 3 * self.f:
            raise ParameterError(f"need n > 3f, got n={self.n}, f={self.f}")

    @property
    def n(self) -> int:
        return len(self.non_faulty) + len(self.faulty)

    @classmethod
    def from_faulty(cls, n: int, faulty: Iterable[int], f: int) -> "FaultSplit":
        faulty = frozenset(faulty)
        return cls(frozenset(range(n)) - faulty, faulty, f)


@dataclass(frozen=True)
class WeightConstraint:
    """Weights a >= 0 with sum 1 and at least ``gamma`` entries >= ``beta``."""

    beta: float
    gamma: int
    index_set: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "index_set", frozenset(self.index_set))
        _check_constraint(self.beta, self.gamma, len(self.index_set))


def _check_constraint(beta: float, gamma: int, count: int) -> None:
    if count < 1:
        raise ParameterError("constraint over an empty index set")
    if beta < 0 or gamma < 0:
        raise ParameterError(f"beta and gamma must be non-negative (beta={beta}, gamma={gamma})")
    if gamma > count:
        raise ParameterError(f"gamma={gamma} exceeds the {count} available weights")
    if gamma * beta > 1 + 1e-12:
        raise ParameterError(f"unsatisfiable: gamma*beta = {gamma * beta} > 1")


def byzantine_constraint(non_faulty: Iterable[int], f: int) -> WeightConstraint:
    """beta = 1/(2(|N|-f)), gamma = |N|-f over the non-faulty agents."""
    ids = frozenset(non_faulty)
    m = len(ids) - f
    if m < 1:
        raise ParameterError(f"need |N| > f, got |N|={len(ids)}, f={f}")
    return WeightConstraint(1.0 / (2 * m), m, ids)


def async_constraint(n: int, f: int) -> WeightConstraint:
    """beta = 1/n, gamma = n-f over all agents."""
    if not 0 <= f < n:
        raise ParameterError(f"need 0 <= f < n, got n={n}, f={f}")
    return WeightConstraint(1.0 / n, n - f, frozenset(range(n)))


# -- envelopes ---------------------------------------------------------------

def aux_r_crash(functions: Sequence[AdmissibleFunction], split: FaultSplit, x: float) -> float:
    """Largest (unnormalized) valid gradient at x under crash faults."""
    s = 0.0
    for i in sorted(split.non_faulty):
        s += functions[i].grad(x)
    for i in sorted(split.faulty):
        g = functions[i].grad(x)
        if g > 0:
            s += g
    return s


def aux_r_crash_min(functions: Sequence[AdmissibleFunction], split: FaultSplit, x: float) -> float:
    """Smallest (unnormalized) valid gradient at x under crash faults."""
    s = 0.0
    for i in sorted(split.non_faulty):
        s += functions[i].grad(x)
    for i in sorted(split.faulty):
        g = functions[i].grad(x)
        if g < 0:
            s += g
    return s


def gradient_envelope(
    gradients: Sequence[float],
    constraint: WeightConstraint | tuple[float, int],
    direction: str = "max",
) -> float:
    """Extreme value of ``sum(a_i g_i)`` over weights meeting the constraint.

    For ``max`` the optimum puts ``beta`` on each of the ``gamma`` largest
    gradients and the leftover mass ``1 - gamma*beta`` on the largest one;
    ``min`` is symmetric.
    """
    beta, gamma = _beta_gamma(constraint)
    g = np.asarray(gradients, dtype=np.float64)
    if g.ndim != 1 or g.size == 0:
        raise ParameterError("need a non-empty list of gradients")
    _check_constraint(beta, gamma, g.size)
    lo, hi = kernels.envelope_bounds(g.reshape(1, -1), float(beta), int(gamma))
    if direction == "max":
        return float(hi[0])
    if direction == "min":
        return float(lo[0])
    raise ParameterError(f"direction must be 'max' or 'min', got {direction!r}")


def _beta_gamma(constraint) -> tuple[float, int]:
    if isinstance(constraint, WeightConstraint):
        return constraint.beta, constraint.gamma
    beta, gamma = constraint
    return float(beta), int(gamma)


def weight_feasibility(
    gradients: Sequence[float], target: float, beta: float, gamma: int, tol: float = 1e-12
) -> bool:
    """Whether some constrained weighting of ``gradients`` sums to ``target``.

    The reachable values form the interval between the min and max envelopes.
    ``tol`` is relative to the largest gradient magnitude.
    """
    g = np.asarray(gradients, dtype=np.float64)
    if g.ndim != 1 or g.size == 0:
        raise ParameterError("need a non-empty list of gradients")
    _check_constraint(beta, gamma, g.size)
    lo, hi = kernels.envelope_bounds(g.reshape(1, -1), float(beta), int(gamma))
    slack = tol * max(1.0, float(np.max(np.abs(g))))
    return bool(lo[0] - slack <= target <= hi[0] + slack)


# -- bisection sets ----------------------------------------------------------

def _bracket(functions: Iterable[AdmissibleFunction]) -> tuple[float, float]:
    los, his = zip(*(fn.argmin() for fn in functions))
    return min(los), max(his)


def compute_valid_set_crash(
    functions: Sequence[AdmissibleFunction], split: FaultSplit, tol: float = DEFAULT_TOL
) -> ValidSet:
    """Valid set for crash faults (faulty weights anywhere in [0, 1])."""
    ids = sorted(split.non_faulty | split.faulty)
    a, b = _bracket(functions[i] for i in ids)
    lo = threshold(lambda x: aux_r_crash(functions, split, x) >= 0, a, b, tol)
    hi = threshold(lambda x: aux_r_crash_min(functions, split, x) > 0, a, b, tol)
    return _ordered(lo, hi)


def _ordered(lo: float, hi: float) -> ValidSet:
    # independent bisections on a degenerate set can cross by < tol
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return ValidSet(lo, hi)


def _envelope_set(
    functions: Sequence[AdmissibleFunction], beta: float, gamma: int, tol: float
) -> ValidSet:
    fns = list(functions)

    def bounds(x: float) -> tuple[float, float]:
        g = np.array([[fn.grad(x) for fn in fns]])
        lo, hi = kernels.envelope_bounds(g, beta, gamma)
        return lo[0], hi[0]

    a, b = _bracket(fns)
    lo = threshold(lambda x: bounds(x)[1] >= 0, a, b, tol)
    hi = threshold(lambda x: bounds(x)[0] > 0, a, b, tol)
    return _ordered(lo, hi)


def compute_valid_set_byz(
    functions: Sequence[AdmissibleFunction], f: int, tol: float = DEFAULT_TOL
) -> ValidSet:
    """Valid set for Byzantine faults; ``functions`` are the non-faulty agents' only."""
    m = len(functions) - f
    if len(functions) <= 2 * f:
        raise ParameterError(f"need |N| > 2f, got |N|={len(functions)}, f={f}")
    return _envelope_set(functions, 1.0 / (2 * m), m, tol)


def compute_valid_set_async(
    functions: Sequence[AdmissibleFunction], n: int, f: int, tol: float = DEFAULT_TOL
) -> ValidSet:
    """Valid set for the asynchronous crash algorithm (beta = 1/n, gamma = n-f)."""
    if len(functions) != n:
        raise ParameterError(f"expected {n} functions, got {len(functions)}")
    c = async_constraint(n, f)
    return _envelope_set(functions, c.beta, c.gamma, tol)


def dist_to_set(x: float, s: ValidSet) -> float:
    return max(0.0, s.lo - x, x - s.hi)


def hausdorff(a: ValidSet, b: ValidSet) -> float:
    """Hausdorff distance between two closed intervals."""
    return max(abs(a.lo - b.lo), abs(a.hi - b.hi))


# -- brute-force oracle ------------------------------------------------------

@dataclass(frozen=True)
class BruteForceResult:
    valid_set: ValidSet
    n_weightings: int
    clipped: bool  # some minimizer sat on the edge of the search window


def simplex_grid(m: int, steps: int) -> np.ndarray:
    """All weight vectors of length m with entries in {0, 1/steps, ..., 1} summing to 1."""
    rows = []
    for bars in itertools.combinations(range(steps + m - 1), m - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(steps + m - 2 - prev)
        rows.append(row)
    return np.asarray(rows, dtype=np.float64) / steps


def _weightings(functions, mode, weight_res) -> tuple[list[int], np.ndarray]:
    steps = int(round(1.0 / weight_res))
    if steps < 1 or abs(steps * weight_res - 1.0) > 1e-9:
        raise ParameterError(f"weight_res must divide 1, got {weight_res}")
    if isinstance(mode, FaultSplit):
        ids = sorted(mode.non_faulty) + sorted(mode.faulty)
        levels = np.arange(steps + 1) / steps
        k = len(mode.faulty)
        fault_w = np.array(list(itertools.product(levels, repeat=k))).reshape(-1, k)
        A = np.hstack([np.ones((fault_w.shape[0], len(mode.non_faulty))), fault_w])
        A = A / A.sum(axis=1, keepdims=True)
        return ids, A
    if isinstance(mode, WeightConstraint):
        # every feasible vector is beta on some gamma-subset plus a free remainder
        ids = sorted(mode.index_set)
        m = len(ids)
        rest = 1.0 - mode.gamma * mode.beta
        mu = simplex_grid(m, max(1, math.ceil(rest / weight_res - 1e-9))) * rest
        blocks = []
        for subset in itertools.combinations(range(m), mode.gamma):
            base = np.zeros(m)
            base[list(subset)] = mode.beta
            blocks.append(mu + base)
        A = np.unique(np.round(np.vstack(blocks), 14), axis=0)
        return ids, A
    raise ParameterError("mode must be a FaultSplit or a WeightConstraint")


def brute_force_valid_set(
    functions: Sequence[AdmissibleFunction],
    mode: FaultSplit | WeightConstraint,
    weight_res: float,
    x_lo: float,
    x_hi: float,
    x_res: float,
    chunk: int | None = None,
) -> BruteForceResult:
    """Hull of grid minimizers of every weighting on a weight grid.

    Crash mode puts faulty weights on a grid in [0, 1] and non-faulty weights
    at 1, then normalizes. Constraint mode gives ``beta`` to each choice of
    ``gamma`` indices and spreads the remaining mass on a simplex grid with
    step at most ``weight_res``, so boundary weightings are always included.
    Each weighted objective is minimized by exhaustive search on a uniform x
    grid; ties within a relative 1e-12 of the minimum all count as minimizers.
    """
    if not (weight_res > 0 and x_res > 0 and x_hi > x_lo):
        raise ParameterError("resolutions must be positive and the window non-empty")
    ids, A = _weightings(functions, mode, weight_res)
    if A.shape[0] == 0:
        raise ParameterError("no weight vector on the grid satisfies the constraint")
    xs = np.linspace(x_lo, x_hi, int(round((x_hi - x_lo) / x_res)) + 1)
    H = np.vstack([functions[i].values(xs) for i in ids])
    if chunk is None:
        chunk = max(1, 4_000_000 // len(xs))
    lo_idx, hi_idx = len(xs), -1
    for start in range(0, A.shape[0], chunk):
        obj = A[start:start + chunk] @ H
        best = obj.min(axis=1, keepdims=True)
        tie = obj <= best + 1e-12 * np.maximum(1.0, np.abs(best))
        first = tie.argmax(axis=1)
        last = len(xs) - 1 - tie[:, ::-1].argmax(axis=1)
        lo_idx = min(lo_idx, int(first.min()))
        hi_idx = max(hi_idx, int(last.max()))
    clipped = lo_idx == 0 or hi_idx == len(xs) - 1
    return BruteForceResult(ValidSet(float(xs[lo_idx]), float(xs[hi_idx])), A.shape[0], clipped)
