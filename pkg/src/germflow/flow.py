"""Integrate dy/dt = W(t, y) over t in [0, 1] to realise phi and its inverse.

The integrator is an explicit Dormand-Prince 5(4) pair with PI step-size
control.  F(t, y(t)) is recorded at every accepted step; it is a first
integral of the flow, so its drift measures integration error.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .homotopy import GapViolation, HomotopyField

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0
# PI exponents (Gustafsson) for a 5th-order error estimate
_K_I = 0.7 / 5
_K_P = 0.4 / 5


class Status(str, Enum):
    completed = "completed"
    gap_violation = "gap_violation"
    step_underflow = "step_underflow"
    max_steps = "max_steps"


@dataclass(frozen=True)
class FlowConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    h_init: float = 1e-3
    h_min: float = 1e-12
    max_steps: int = 100_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if not 0 < self.h_min < self.h_init:
            raise ValueError("need 0 < h_min < h_init")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    @classmethod
    def from_env(cls, **kw) -> "FlowConfig":
        env = os.environ.get("GERMFLOW_MAX_STEPS")
        if env:
            kw.setdefault("max_steps", int(env))
        return cls(**kw)


@dataclass(frozen=True)
class State:
    t: float
    y: np.ndarray
    F_value: float
    step: float


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    status: Status = Status.completed
    rejected: int = 0
    message: str = ""

    @property
    def completed(self) -> bool:
        return self.status is Status.completed

    @property
    def final(self) -> State:
        return self.states[-1]

    def rows(self) -> list[list[float]]:
        """Rows ``[t, y..., F, h]`` for external plotting."""
        return [[s.t, *map(float, s.y), s.F_value, s.step] for s in self.states]


class FlowFailure(RuntimeError):
    def __init__(self, trajectory: Trajectory):
        self.trajectory = trajectory
        last = trajectory.final
        super().__init__(f"integration ended with {trajectory.status.value} at t={last.t:.6g}")


def _dopri(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    first_integral: Callable[[float, np.ndarray], float],
    y0: np.ndarray,
    config: FlowConfig,
) -> Trajectory:
    t, y = 0.0, np.array(y0, dtype=float)
    traj = Trajectory(states=[State(0.0, y.copy(), first_integral(0.0, y), 0.0)])
    try:
        k1 = rhs(t, y)
    except GapViolation as exc:
        traj.status = Status.gap_violation
        traj.message = str(exc)
        return traj

    h = min(config.h_init, 1.0)
    err_prev = 1.0
    attempts = 0
    while t < 1.0:
        if attempts >= config.max_steps:
            traj.status = Status.max_steps
            return traj
        attempts += 1
        h = min(h, 1.0 - t)
        last_step = t + h >= 1.0
        try:
            k = [k1]
            for s in range(1, 7):
                ys = y + h * sum(a * kk for a, kk in zip(_A[s], k))
                k.append(rhs(t + _C[s] * h, ys))
        except GapViolation as exc:
            # a stage left the admissible region: retreat and retry
            traj.rejected += 1
            h *= 0.25
            if h < config.h_min:
                traj.status = Status.gap_violation
                traj.message = str(exc)
                return traj
            continue
        y_new = ys  # stage 7 is the 5th-order solution (FSAL)
        err_vec = h * sum(e * kk for e, kk in zip(_E, k) if e)
        scale = config.atol + config.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale)) if y.size else 0.0

        if err <= 1.0:
            t = 1.0 if last_step else t + h
            y = y_new
            k1 = k[6]
            traj.states.append(State(t, y.copy(), first_integral(t, y), h))
            if err == 0.0:
                fac = FAC_MAX
            else:
                fac = SAFETY * err ** (-_K_I) * err_prev ** _K_P
            fac = min(FAC_MAX, max(FAC_MIN, fac))
            err_prev = max(err, 1e-4)
            h *= fac
        else:
            traj.rejected += 1
            h *= max(FAC_MIN, SAFETY * err ** (-1 / 5))
            if h < config.h_min:
                traj.status = Status.step_underflow
                return traj
    return traj


def integrate(
    field: HomotopyField,
    x0,
    config: FlowConfig | None = None,
    certified_radius: float | None = None,
) -> Trajectory:
    """Solve dy/dt = W(t, y), y(0) = x0, on [0, 1]."""
    config = config or FlowConfig()
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if certified_radius is not None and np.max(np.abs(x0), initial=0.0) > certified_radius:
        warnings.warn("starting point lies outside the certified domain", stacklevel=2)
    return _dopri(field.W_eval, field.F_eval, x0, config)


def integrate_backward(field: HomotopyField, x, config: FlowConfig | None = None) -> Trajectory:
    """Solve the time-reversed system from t = 1 down to t = 0.

    Runs in ``s = 1 - t``: dy/ds = -W(1 - s, y); recorded F values are at time 1 - s.
    """
    config = config or FlowConfig()
    return _dopri(
        lambda s, y: -field.W_eval(1.0 - s, y),
        lambda s, y: field.F_eval(1.0 - s, y),
        np.asarray(x, dtype=float).reshape(-1),
        config,
    )


def conservation_drift(traj: Trajectory) -> float:
    f0 = traj.states[0].F_value
    return max(abs(s.F_value - f0) for s in traj.states)


def phi(field: HomotopyField, x, config: FlowConfig | None = None) -> tuple[np.ndarray, float]:
    """Return ``(phi(x), drift)``; raises :class:`FlowFailure` if the flow stops early."""
    traj = integrate(field, x, config)
    if not traj.completed:
        raise FlowFailure(traj)
    return traj.final.y.copy(), conservation_drift(traj)


def phi_inverse(field: HomotopyField, x, config: FlowConfig | None = None) -> np.ndarray:
    traj = integrate_backward(field, x, config or FlowConfig())
    if not traj.completed:
        raise FlowFailure(traj)
    return traj.final.y.copy()


def equivalence_residual(field: HomotopyField, x, config: FlowConfig | None = None) -> float:
    """``|g(phi(x)) - f(x)|`` with both sides evaluated by compensated summation."""
    y, _ = phi(field, x, config)
    case = field.case
    return abs(case.g.eval(y) - case.f.eval(np.asarray(x, dtype=float).reshape(-1)))
