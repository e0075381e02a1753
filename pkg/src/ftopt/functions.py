"""Admissible scalar cost functions.

Every function here is convex, continuously differentiable, has a bounded
gradient and a Lipschitz gradient, and a compact set of minimizers. The two
bounds are derived from the parameters at construction time so a function
cannot advertise a bound it does not satisfy.

Three kinds exist:

``huber(center, curvature, cap)``
    Quadratic ``curvature/2 * d**2`` for ``|d| <= cap/curvature`` and linear
    with slope ``+-cap`` outside, where ``d = x - center``.
``smooth_abs(center, softness, scale)``
    ``scale * (sqrt(d**2 + softness**2) - softness)``.
``scaled_sum(terms)``
    Non-negative combination of other admissible functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ParameterError
from .roots import threshold

ARGMIN_TOL = 1e-10


class AdmissibleFunction:
    """Common interface. Subclasses are frozen dataclasses."""

    kind: str = ""

    @property
    def gradient_bound(self) -> float:
        raise NotImplementedError

    @property
    def lipschitz_bound(self) -> float:
        raise NotImplementedError

    def value(self, x: float) -> float:
        raise NotImplementedError

    def grad(self, x: float) -> float:
        raise NotImplementedError

    def values(self, xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grads(self, xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def argmin(self) -> tuple[float, float]:
        raise NotImplementedError

    def centers(self) -> list[float]:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


def _positive(name: str, v: float) -> float:
    v = float(v)
    if not (math.isfinite(v) and v > 0):
        raise ParameterError(f"{name} must be a finite positive number, got {v}")
    return v


def _finite(name: str, v: float) -> float:
    v = float(v)
    if not math.isfinite(v):
        raise ParameterError(f"{name} must be finite, got {v}")
    return v


@dataclass(frozen=True)
class Huber(AdmissibleFunction):
    center: float
    curvature: float
    cap: float
    kind = "huber"

    def __post_init__(self):
        object.__setattr__(self, "center", _finite("center", self.center))
        object.__setattr__(self, "curvature", _positive("curvature", self.curvature))
        object.__setattr__(self, "cap", _positive("cap", self.cap))

    @property
    def gradient_bound(self) -> float:
        return self.cap

    @property
    def lipschitz_bound(self) -> float:
        return self.curvature

    @property
    def radius(self) -> float:
        """Half-width of the quadratic region."""
        return self.cap / self.curvature

    def value(self, x):
        d = abs(x - self.center)
        if d <= self.radius:
            return 0.5 * self.curvature * d * d
        return self.cap * d - 0.5 * self.cap * self.radius

    def grad(self, x):
        g = self.curvature * (x - self.center)
        if g > self.cap:
            return self.cap
        if g < -self.cap:
            return -self.cap
        return g

    def values(self, xs):
        d = np.abs(np.asarray(xs, dtype=float) - self.center)
        quad = 0.5 * self.curvature * d * d
        lin = self.cap * d - 0.5 * self.cap * self.radius
        return np.where(d <= self.radius, quad, lin)

    def grads(self, xs):
        g = self.curvature * (np.asarray(xs, dtype=float) - self.center)
        return np.clip(g, -self.cap, self.cap)

    def argmin(self):
        return (self.center, self.center)

    def centers(self):
        return [self.center]

    def to_dict(self):
        return {"kind": "huber", "center": self.center,
                "curvature": self.curvature, "cap": self.cap}


@dataclass(frozen=True)
class SmoothAbs(AdmissibleFunction):
    center: float
    softness: float
    scale: float
    kind = "smooth_abs"

    def __post_init__(self):
        object.__setattr__(self, "center", _finite("center", self.center))
        object.__setattr__(self, "softness", _positive("softness", self.softness))
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    @property
    def gradient_bound(self) -> float:
        return self.scale

    @property
    def lipschitz_bound(self) -> float:
        # second derivative peaks at the center
        return self.scale / self.softness

    def value(self, x):
        d = x - self.center
        return self.scale * (math.hypot(d, self.softness) - self.softness)

    def grad(self, x):
        d = x - self.center
        return self.scale * d / math.hypot(d, self.softness)

    def values(self, xs):
        d = np.asarray(xs, dtype=float) - self.center
        return self.scale * (np.hypot(d, self.softness) - self.softness)

    def grads(self, xs):
        d = np.asarray(xs, dtype=float) - self.center
        return self.scale * d / np.hypot(d, self.softness)

    def argmin(self):
        return (self.center, self.center)

    def centers(self):
        return [self.center]

    def to_dict(self):
        return {"kind": "smooth_abs", "center": self.center,
                "softness": self.softness, "scale": self.scale}


@dataclass(frozen=True)
class ScaledSum(AdmissibleFunction):
    terms: tuple[tuple[float, AdmissibleFunction], ...]
    kind = "scaled_sum"
    _argmin: tuple[float, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple((float(w), fn) for w, fn in self.terms)
        if not terms:
            raise ParameterError("scaled_sum needs at least one term")
        for w, fn in terms:
            if not (math.isfinite(w) and w >= 0):
                raise ParameterError(f"scaled_sum weights must be >= 0, got {w}")
            if not isinstance(fn, AdmissibleFunction):
                raise ParameterError(f"scaled_sum term is not a function: {fn!r}")
        if not any(w > 0 for w, _ in terms):
            raise ParameterError("scaled_sum needs a positive weight")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_argmin", self._locate_argmin())

    @property
    def gradient_bound(self) -> float:
        return sum(w * fn.gradient_bound for w, fn in self.terms)

    @property
    def lipschitz_bound(self) -> float:
        return sum(w * fn.lipschitz_bound for w, fn in self.terms)

    def value(self, x):
        return sum(w * fn.value(x) for w, fn in self.terms)

    def grad(self, x):
        return sum(w * fn.grad(x) for w, fn in self.terms)

    def values(self, xs):
        return sum(w * fn.values(xs) for w, fn in self.terms)

    def grads(self, xs):
        return sum(w * fn.grads(xs) for w, fn in self.terms)

    def centers(self):
        return [c for w, fn in self.terms if w > 0 for c in fn.centers()]

    def _locate_argmin(self) -> tuple[float, float]:
        cs = self.centers()
        a, b = min(cs), max(cs)
        lo = threshold(lambda x: self.grad(x) >= 0, a, b, ARGMIN_TOL)
        hi = threshold(lambda x: self.grad(x) > 0, a, b, ARGMIN_TOL)
        if hi - lo <= 2 * ARGMIN_TOL:
            mid = 0.5 * (lo + hi)
            return (mid, mid)
        return (min(lo, hi), max(lo, hi))

    def argmin(self):
        return self._argmin

    def to_dict(self):
        return {"kind": "scaled_sum",
                "terms": [{"weight": w, "function": fn.to_dict()} for w, fn in self.terms]}


def huber(center: float, curvature: float, cap: float) -> Huber:
    return Huber(center, curvature, cap)


def smooth_abs(center: float, softness: float, scale: float) -> SmoothAbs:
    return SmoothAbs(center, softness, scale)


def scaled_sum(terms: Sequence[tuple[float, AdmissibleFunction]]) -> ScaledSum:
    return ScaledSum(tuple(terms))


def _check_point(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"cannot evaluate at non-finite point {x}")
    return x


def evaluate(f: AdmissibleFunction, x: float) -> float:
    """Return ``h(x)``."""
    return f.value(_check_point(x))


def gradient(f: AdmissibleFunction, x: float) -> float:
    """Return the exact derivative ``h'(x)``."""
    return f.grad(_check_point(x))


def argmin_interval(f: AdmissibleFunction) -> tuple[float, float]:
    """Closed interval of minimizers ``(lo, hi)``."""
    return f.argmin()


@dataclass(frozen=True)
class AdmissibilityReport:
    gradient_bound_violated: bool
    lipschitz_violated: bool
    fd_mismatch: bool
    convexity_violated: bool
    max_abs_gradient: float
    max_fd_error: float

    @property
    def ok(self) -> bool:
        return not (self.gradient_bound_violated or self.lipschitz_violated
                    or self.fd_mismatch or self.convexity_violated)


FD_STEP = 1e-6
FD_TOL = 1e-4


def finite_difference(f: AdmissibleFunction, xs, step: float = FD_STEP) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    return (f.values(xs + step) - f.values(xs - step)) / (2 * step)


def verify_admissible(
    f: AdmissibleFunction, grid_lo: float, grid_hi: float, n_points: int
) -> AdmissibilityReport:
    """Check the admissibility conditions numerically on a uniform grid."""
    if not (math.isfinite(grid_lo) and math.isfinite(grid_hi) and grid_lo < grid_hi):
        raise ParameterError(f"degenerate grid [{grid_lo}, {grid_hi}]")
    if n_points < 3:
        raise ParameterError(f"need at least 3 grid points, got {n_points}")
    xs = np.linspace(grid_lo, grid_hi, n_points)
    h = f.values(xs)
    g = f.grads(xs)
    L, Ld = f.gradient_bound, f.lipschitz_bound

    max_abs = float(np.max(np.abs(g)))
    bound_bad = bool(np.any(np.abs(g) > L * (1 + 1e-12)))

    dx = np.diff(xs)
    lip_bad = bool(np.any(np.abs(np.diff(g)) > Ld * dx * (1 + 1e-9) + 1e-15))

    fd = finite_difference(f, xs)
    scale = np.maximum(1.0, np.abs(h))
    fd_err = np.abs(fd - g) / scale
    fd_bad = bool(np.any(fd_err > FD_TOL))

    mid = 0.5 * (h[:-2] + h[2:])
    slack = 1e-12 * np.maximum(1.0, np.abs(h[1:-1]))
    convex_bad = bool(np.any(h[1:-1] > mid + slack))

    return AdmissibilityReport(bound_bad, lip_bad, fd_bad, convex_bad,
                               max_abs, float(np.max(fd_err)))


_FIELDS = {
    "huber": (Huber, ("center", "curvature", "cap")),
    "smooth_abs": (SmoothAbs, ("center", "softness", "scale")),
}


def from_dict(spec: Mapping[str, Any], path: str = "function") -> AdmissibleFunction:
    """Build a function from its tagged-record form (as found in configs)."""
    if not isinstance(spec, Mapping):
        raise ConfigError("expected a table with a 'kind' entry", path)
    kind = spec.get("kind")
    if kind == "scaled_sum":
        terms = spec.get("terms")
        if not isinstance(terms, list) or not terms:
            raise ConfigError("scaled_sum needs a non-empty 'terms' list", f"{path}.terms")
        built = []
        for k, term in enumerate(terms):
            tp = f"{path}.terms[{k}]"
            if not isinstance(term, Mapping) or "weight" not in term or "function" not in term:
                raise ConfigError("each term needs 'weight' and 'function'", tp)
            built.append((term["weight"], from_dict(term["function"], f"{tp}.function")))
        try:
            return ScaledSum(tuple(built))
        except ParameterError as exc:
            raise ConfigError(str(exc), path) from None
    if kind not in _FIELDS:
        raise ConfigError(f"unknown function kind {kind!r}", f"{path}.kind")
    cls, names = _FIELDS[kind]
    extra = set(spec) - set(names) - {"kind"}
    if extra:
        raise ConfigError(f"unexpected keys {sorted(extra)}", path)
    args = []
    for name in names:
        if name not in spec:
            raise ConfigError("missing", f"{path}.{name}")
        v = spec[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"must be a number, got {v!r}", f"{path}.{name}")
        args.append(v)
    try:
        return cls(*args)
    except ParameterError as exc:
        raise ConfigError(str(exc), path) from None
