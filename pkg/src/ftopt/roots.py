"""Bracketing and bisection for monotone threshold problems."""

from __future__ import annotations

from typing import Callable

from .errors import NumericError

MAX_DOUBLINGS = 64
MAX_ITERATIONS = 200


def threshold(
    pred: Callable[[float], bool],
    lo: float,
    hi: float,
    tol: float = 1e-9,
) -> float:
    """Locate ``inf{x : pred(x)}`` for a predicate that is monotone in ``x``.

    ``pred`` must be False to the left of the threshold and True to the right.
    The initial ``[lo, hi]`` is widened by doubling until it brackets the
    switch, then halved until its width drops below ``tol``. The midpoint of
    the final bracket is returned.
    """
    if not tol > 0:
        raise NumericError(f"tolerance must be positive, got {tol}")
    if lo > hi:
        lo, hi = hi, lo
    width = max(hi - lo, 1.0)
    doublings = 0
    while pred(lo):
        if doublings >= MAX_DOUBLINGS:
            raise NumericError("could not bracket threshold from below")
        lo -= width
        width *= 2.0
        doublings += 1
    width = max(hi - lo, 1.0)
    doublings = 0
    while not pred(hi):
        if doublings >= MAX_DOUBLINGS:
            raise NumericError("could not bracket threshold from above")
        hi += width
        width *= 2.0
        doublings += 1

    for _ in range(MAX_ITERATIONS):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # float resolution exhausted
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
