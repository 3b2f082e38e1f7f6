"""Piecewise-linear utility functions mapping raw metric values to [0, 1]."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from rrmeval.errors import InvalidInputError, Violation

HIGHER_BETTER = "higher-better"
LOWER_BETTER = "lower-better"
DIRECTIONS = (HIGHER_BETTER, LOWER_BETTER)


@dataclass(frozen=True)
class PiecewiseLinearUtility:
    """Utility given by breakpoints ``(x, u)``; interpolated linearly, clamped outside."""

    breakpoints: tuple[tuple[float, float], ...]
    id: str = ""

    def __post_init__(self):
        pts = tuple((float(x), float(u)) for x, u in self.breakpoints)
        if len(pts) < 2:
            raise InvalidInputError("a utility needs at least 2 breakpoints")
        object.__setattr__(self, "breakpoints", pts)

    @property
    def xs(self) -> np.ndarray:
        return np.array([p[0] for p in self.breakpoints])

    @property
    def us(self) -> np.ndarray:
        return np.array([p[1] for p in self.breakpoints])

    @property
    def span(self) -> tuple[float, float]:
        return self.breakpoints[0][0], self.breakpoints[-1][0]

    def __call__(self, values) -> np.ndarray:
        """Vectorized evaluation; see :func:`evaluate_utility`."""
        arr = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("utility input must be finite")
        return np.interp(arr, self.xs, self.us)

    def out_of_span(self, values) -> int:
        """How many inputs fall outside the breakpoint span and get clamped."""
        lo, hi = self.span
        arr = np.asarray(values, dtype=float)
        return int(np.count_nonzero((arr < lo) | (arr > hi)))


def identity_utility(lo: float = 0.0, hi: float = 1.0, direction: str = HIGHER_BETTER,
                     id: str = "") -> PiecewiseLinearUtility:
    if direction == HIGHER_BETTER:
        return PiecewiseLinearUtility(((lo, 0.0), (hi, 1.0)), id=id)
    return PiecewiseLinearUtility(((lo, 1.0), (hi, 0.0)), id=id)


def evaluate_utility(f: PiecewiseLinearUtility, x: float) -> float:
    if not math.isfinite(x):
        raise InvalidInputError(f"utility input must be finite, got {x!r}")
    return float(np.interp(x, f.xs, f.us))


def validate_utility(f: PiecewiseLinearUtility | Sequence, direction: str = HIGHER_BETTER) -> list[Violation]:
    """Report breakpoint ordering, score range, monotonicity and endpoint problems."""
    if not isinstance(f, PiecewiseLinearUtility):
        f = PiecewiseLinearUtility(tuple(f))
    where = f.id or "utility"
    out: list[Violation] = []
    if direction not in DIRECTIONS:
        out.append(Violation("direction", where, f"unknown direction {direction!r}"))
        return out
    xs, us = f.xs, f.us
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(us))):
        out.append(Violation("non-finite", where, "breakpoints must be finite"))
        return out
    dx = np.diff(xs)
    if np.any(dx <= 0):
        k = int(np.argmax(dx <= 0)) + 1
        out.append(Violation("x-order", f"{where} breakpoint {k}", "x values must be strictly increasing"))
    for k, u in enumerate(us):
        if u < 0.0 or u > 1.0:
            out.append(Violation("score-range", f"{where} breakpoint {k}", f"score {u} outside [0, 1]"))
    du = np.diff(us)
    bad = np.flatnonzero(du < 0) if direction == HIGHER_BETTER else np.flatnonzero(du > 0)
    for k in bad:
        out.append(Violation(
            "monotonicity", f"{where} breakpoint {k + 1}",
            f"score moves against {direction} direction ({us[k]} -> {us[k + 1]})",
        ))
    first, last = (0.0, 1.0) if direction == HIGHER_BETTER else (1.0, 0.0)
    if us[0] != first:
        out.append(Violation("endpoint", f"{where} breakpoint 0", f"first score is {us[0]}, expected {first}"))
    if us[-1] != last:
        out.append(Violation("endpoint", f"{where} breakpoint {len(us) - 1}",
                             f"last score is {us[-1]}, expected {last}"))
    return out
