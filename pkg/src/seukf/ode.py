"""Deterministic initial-value integration for the filter interiors.

Two schemes: classic fixed-step fourth-order Runge-Kutta, and the
Dormand-Prince 5(4) embedded pair with proportional step control (safety
0.9, step-factor clamp [0.2, 5.0], first-same-as-last stage reuse).  The
error test is componentwise: every entry of the estimate must satisfy
|err_i| <= abs_tol + rel_tol * |y_i|.

State vectors may be flattened stacks (all sigma points of a filter at
once); the right-hand side sees whatever shape the caller chose.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0

# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# Difference between the 5th- and embedded 4th-order weights.
_DP_E = np.array(
    [
        71 / 57600,
        0.0,
        -71 / 16695,
        71 / 1920,
        -17253 / 339200,
        22 / 525,
        -1 / 40,
    ]
)


class MaxStepsExceeded(RuntimeError):
    """Adaptive integration used up its step budget."""


class NonFiniteState(RuntimeError):
    """Integration produced NaN or infinity."""


@dataclass(frozen=True)
class IvpProblem:
    """Right-hand side f(t, y), initial value, and time span."""

    rhs: Callable[[float, Array], Array]
    y0: Array
    t_span: tuple[float, float]


@dataclass(frozen=True)
class SolverConfig:
    """Scheme choice plus its knobs.

    ``fixed_steps`` or ``steps_per_unit_time`` select the rk4_fixed grid
    (the former wins when both are set); the tolerances and ``max_steps``
    only apply to dormand_prince.
    """

    method: str = "dormand_prince"
    rel_tol: float = 1e-6
    abs_tol: float = 1e-8
    max_steps: int = 100_000
    fixed_steps: int | None = None
    steps_per_unit_time: float | None = None

    def __post_init__(self) -> None:
        if self.method not in ("dormand_prince", "rk4_fixed"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.fixed_steps is not None and self.fixed_steps < 1:
            raise ValueError("fixed_steps must be at least 1")
        if self.steps_per_unit_time is not None and self.steps_per_unit_time <= 0.0:
            raise ValueError("steps_per_unit_time must be positive")

    def resolve_steps(self, span: float) -> int:
        if self.fixed_steps is not None:
            return self.fixed_steps
        if self.steps_per_unit_time is not None:
            return max(1, math.ceil(self.steps_per_unit_time * span))
        raise ValueError(
            "rk4_fixed needs fixed_steps or steps_per_unit_time in SolverConfig"
        )


def solve_ivp(problem: IvpProblem, config: SolverConfig) -> Array:
    """Integrate the problem over its span and return the terminal state."""
    t0, t1 = problem.t_span
    if not t1 > t0:
        raise ValueError(f"time span must be increasing, got {problem.t_span}")
    y0 = np.asarray(problem.y0, dtype=float)
    if config.method == "rk4_fixed":
        return _rk4_fixed(problem.rhs, t0, t1, y0, config.resolve_steps(t1 - t0))
    return _dormand_prince(problem.rhs, t0, t1, y0, config)


def _rk4_fixed(
    rhs: Callable[[float, Array], Array],
    t0: float,
    t1: float,
    y0: Array,
    steps: int,
) -> Array:
    h = (t1 - t0) / steps
    y = y0.copy()
    t = t0
    for _ in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        t += h
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("rk4_fixed produced a non-finite state")
    return y


def _dormand_prince(
    rhs: Callable[[float, Array], Array],
    t0: float,
    t1: float,
    y0: Array,
    config: SolverConfig,
) -> Array:
    span = t1 - t0
    t = t0
    y = y0.copy()
    stages = np.empty((7, y.size))
    stages[0] = rhs(t, y)
    if not np.all(np.isfinite(stages[0])):
        raise NonFiniteState("right-hand side non-finite at the initial state")
    h = _initial_step(y, stages[0], span, config)
    steps = 0
    while t < t1:
        steps += 1
        if steps > config.max_steps:
            raise MaxStepsExceeded(
                f"exceeded {config.max_steps} steps at t={t:.6g} of [{t0:g}, {t1:g}]"
            )
        h = min(h, t1 - t)
        for i in range(1, 7):
            yi = y + h * (_DP_A[i] @ stages[:i])
            stages[i] = rhs(t + _DP_C[i] * h, yi)
        y_new = y + h * (_DP_B5 @ stages)
        err = h * (_DP_E @ stages)
        scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(invalid="ignore"):
            err_norm = float(np.max(np.abs(err) / scale)) if err.size else 0.0
        if not np.isfinite(err_norm) or not np.all(np.isfinite(y_new)):
            # Blow-up inside the step: retry smaller before giving up.
            h *= MIN_FACTOR
            if h < 1e-14 * span:
                raise NonFiniteState(
                    f"state became non-finite near t={t:.6g} and no step size recovers"
                )
            continue
        if err_norm <= 1.0:
            t += h
            y = y_new
            stages[0] = stages[6]  # first-same-as-last: stage 7 sits at (t, y)
        factor = MAX_FACTOR if err_norm == 0.0 else SAFETY * err_norm ** -0.2
        h *= min(MAX_FACTOR, max(MIN_FACTOR, factor))
    return y


def _initial_step(y0: Array, f0: Array, span: float, config: SolverConfig) -> float:
    """Crude first step from the size of y and f, clamped into the span."""
    scale = config.abs_tol + config.rel_tol * np.abs(y0)
    d0 = float(np.max(np.abs(y0) / scale)) if y0.size else 0.0
    d1 = float(np.max(np.abs(f0) / scale)) if f0.size else 0.0
    if d1 <= 1e-15 or d0 <= 1e-15:
        h = 1e-3 * span
    else:
        h = 0.01 * d0 / d1
    return min(h, span)
