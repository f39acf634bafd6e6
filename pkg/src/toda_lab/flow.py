"""Time integration of TL_r and Kac-van Moerbeke flows.

The integrator is an explicit adaptive Runge-Kutta (DOP853) marched step
by step so every accepted step can be inspected: trace invariants
relative to the background, positivity of the off-diagonal data, and the
distance between the perturbation and the window edge (the tail margin).
Conservation is monitored, never enforced; drift is a test signal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy.integrate import DOP853

from .core import KvMState, LatticeState, tail_margin
from .errors import GuardBandError, PositivityError, StepFailureError
from .hierarchy import (
    HierarchyCoeffs,
    kvm_field_arrays,
    tl_field_arrays,
    trace_residuals,
)

__all__ = ["FlowConfig", "Trajectory", "integrate", "integrate_kvm"]


@dataclass(frozen=True)
class FlowConfig:
    """Tolerances and safety margins for one integration run.

    guard_band is the minimum number of background sites that must stay
    between the perturbation (anything deviating by more than
    10 * abs_tol) and the window edge; crossing it aborts the run.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    guard_band: int = 8

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.guard_band < 0:
            raise ValueError("guard band must be nonnegative")


@dataclass(frozen=True)
class Trajectory:
    """Accepted-step history of one flow: states plus a conservation log.

    conservation rows follow CONSERVATION_COLUMNS; the trace columns hold
    tr(H^k) - tr(H_bg^k) computed relative to the background so the sums
    are finite and window independent.
    """

    times: np.ndarray
    states: tuple
    conservation: np.ndarray

    CONSERVATION_COLUMNS: ClassVar[tuple] = (
        "t", "tr1", "tr2", "tr3", "tr4", "min_a", "tail_margin",
    )

    @property
    def initial(self):
        return self.states[0]

    @property
    def final(self):
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.states)


def _conservation_row(embedded: LatticeState, min_coeff: float, margin: int):
    tr = trace_residuals(embedded, 4)
    return [embedded.t, tr[0], tr[1], tr[2], tr[3], min_coeff, float(margin)]


def integrate(state: LatticeState, coeffs: HierarchyCoeffs, t_final: float,
              config: FlowConfig = None) -> Trajectory:
    """Integrate TL_r from state.t to t_final on a fixed window."""
    if config is None:
        config = FlowConfig()
    if config.guard_band < coeffs.r + 2:
        raise ValueError(
            "guard_band %d too small for order r=%d (needs at least r + 2)"
            % (config.guard_band, coeffs.r)
        )
    thresh = 10.0 * config.abs_tol
    margin0 = tail_margin(state, thresh)
    if margin0 < config.guard_band:
        raise GuardBandError(
            "initial tail margin %d is below the guard band %d"
            % (margin0, config.guard_band)
        )

    L = len(state.a)
    pad = np.full(coeffs.r + 3, 0.0)
    a_pad = pad + state.a0
    b_pad = pad + state.b0

    def rhs(t, y):
        a_full = np.concatenate([a_pad, y[:L], a_pad])
        b_full = np.concatenate([b_pad, y[L:], b_pad])
        adot, bdot = tl_field_arrays(a_full, b_full, coeffs, L)
        return np.concatenate([adot, bdot])

    states = [state]
    rows = [_conservation_row(state, float(np.min(state.a)), margin0)]
    t0 = state.t
    if t_final != t0:
        solver = DOP853(rhs, t0, np.concatenate([state.a, state.b]),
                        t_bound=t_final, rtol=config.rel_tol,
                        atol=config.abs_tol, max_step=config.max_step)
        while solver.status == "running":
            message = solver.step()
            if solver.status == "failed":
                raise StepFailureError(
                    "integration failed at t=%.8g: %s" % (solver.t, message)
                )
            y = solver.y
            if not np.all(np.isfinite(y)):
                raise StepFailureError(
                    "non-finite state at t=%.8g" % solver.t
                )
            if np.any(y[:L] <= 0.0):
                raise PositivityError(
                    "a(n) lost positivity at t=%.8g" % solver.t
                )
            snap = LatticeState(state.n_min, y[:L], y[L:],
                                state.a0, state.b0, solver.t)
            margin = tail_margin(snap, thresh)
            if margin < config.guard_band:
                raise GuardBandError(
                    "tail margin %d fell below the guard band %d at t=%.8g; "
                    "enlarge the window" % (margin, config.guard_band, solver.t)
                )
            states.append(snap)
            rows.append(_conservation_row(snap, float(np.min(snap.a)), margin))
    return Trajectory(
        times=np.array([s.t for s in states]),
        states=tuple(states),
        conservation=np.array(rows),
    )


def _kvm_margin(state: KvMState, thresh: float) -> int:
    dev = np.abs(state.rho - state.rho0)
    idx = np.nonzero(dev > thresh)[0]
    if len(idx) == 0:
        return len(state.rho)
    return int(min(idx[0], len(state.rho) - 1 - idx[-1]))


def _kvm_embedded(state: KvMState) -> LatticeState:
    return LatticeState(state.n_min, state.rho, np.zeros(len(state.rho)),
                        state.rho0, 0.0, state.t)


def integrate_kvm(state: KvMState, t_final: float,
                  config: FlowConfig = None) -> Trajectory:
    """Integrate the Kac-van Moerbeke flow; trajectory of KvMStates.

    Conservation traces are those of the embedded Jacobi operator with
    a = rho, b = 0, matching the odd-flow reduction.
    """
    if config is None:
        config = FlowConfig()
    if config.guard_band < 3:
        raise ValueError("guard_band below 3 cannot protect the KvM stencil")
    thresh = 10.0 * config.abs_tol
    margin0 = _kvm_margin(state, thresh)
    if margin0 < config.guard_band:
        raise GuardBandError(
            "initial tail margin %d is below the guard band %d"
            % (margin0, config.guard_band)
        )

    L = len(state.rho)
    edge = np.array([state.rho0])

    def rhs(t, y):
        return kvm_field_arrays(np.concatenate([edge, y, edge]))

    states = [state]
    rows = [_conservation_row(_kvm_embedded(state), float(np.min(state.rho)),
                              margin0)]
    if t_final != state.t:
        solver = DOP853(rhs, state.t, np.array(state.rho, dtype=float),
                        t_bound=t_final, rtol=config.rel_tol,
                        atol=config.abs_tol, max_step=config.max_step)
        while solver.status == "running":
            message = solver.step()
            if solver.status == "failed":
                raise StepFailureError(
                    "integration failed at t=%.8g: %s" % (solver.t, message)
                )
            y = solver.y
            if not np.all(np.isfinite(y)):
                raise StepFailureError("non-finite state at t=%.8g" % solver.t)
            if np.any(y <= 0.0):
                raise PositivityError(
                    "rho(n) lost positivity at t=%.8g" % solver.t
                )
            snap = KvMState(state.n_min, y, state.rho0, solver.t)
            margin = _kvm_margin(snap, thresh)
            if margin < config.guard_band:
                raise GuardBandError(
                    "tail margin %d fell below the guard band %d at t=%.8g"
                    % (margin, config.guard_band, solver.t)
                )
            states.append(snap)
            rows.append(_conservation_row(_kvm_embedded(snap),
                                          float(np.min(snap.rho)), margin))
    return Trajectory(
        times=np.array([s.t for s in states]),
        states=tuple(states),
        conservation=np.array(rows),
    )
