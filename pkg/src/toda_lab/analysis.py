"""Decay quantification and the two-time uniqueness witness.

The dichotomy under test: a solution whose tails beat the superfast
bound C M^{-(1+delta) 2M} at two distinct times must be constant.  The
witness integrates a state from t0 to t1, compares its right tails
against the bound at both ends, and reports one of three admissible
verdicts; the forbidden fourth outcome (nonconstant, superfast at both
times) raises instead of being reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import LatticeState, deviation
from .errors import InsufficientTailError, NumericalContradictionError
from .flow import FlowConfig, integrate
from .hierarchy import HierarchyCoeffs

__all__ = [
    "DecayBound",
    "TheoremScenario",
    "SuperfastRow",
    "TimeSlice",
    "DecayReport",
    "DecayClassification",
    "max_meaningful_m",
    "tail_sum",
    "first_moment",
    "superfast_check",
    "classify_decay",
    "theorem_witness",
]

NOISE_FLOOR = 1e-13

# model bases for classify_decay, in tie-break order
_MODELS = (
    ("superfast", lambda m: m * np.log(m)),
    ("gaussian-type", lambda m: m ** 2),
    ("exponential", lambda m: m),
    ("polynomial", lambda m: np.log(m)),
)


@dataclass(frozen=True)
class DecayBound:
    """The superfast envelope M -> C * M^(-(1+delta) 2M)."""

    C: float = 10.0
    delta: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "C", float(self.C))
        object.__setattr__(self, "delta", float(self.delta))
        if not (self.C > 0.0) or not (self.delta > 0.0):
            raise ValueError("need C > 0 and delta > 0")

    def value(self, M: int) -> float:
        M = int(M)
        if M < 1:
            raise ValueError("the bound is defined for M >= 1")
        return self.C * float(M) ** (-(1.0 + self.delta) * 2.0 * M)


def max_meaningful_m(bound: DecayBound, floor: float = NOISE_FLOOR) -> int:
    """Largest M whose bound value still exceeds the noise floor.

    Past this point the comparison is vacuous at double precision: the
    envelope dives below what tail sums can resolve.  C=10, delta=0.1
    gives 7.
    """
    M = 1
    while M < 10000 and bound.value(M + 1) >= floor:
        M += 1
    return M


@dataclass(frozen=True)
class TheoremScenario:
    """Two times, an initial state at the first, a flow, and a bound."""

    t0: float
    t1: float
    initial: LatticeState
    coeffs: HierarchyCoeffs
    bound: DecayBound

    def __post_init__(self):
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t1", float(self.t1))
        if not self.t0 < self.t1:
            raise ValueError("need t0 < t1 strictly")
        if abs(self.initial.t - self.t0) > 1e-9:
            raise ValueError("initial state is stamped t=%g, scenario says t0=%g"
                             % (self.initial.t, self.t0))


def tail_sum(state: LatticeState, M: int) -> float:
    """Right tail sum_{n >= M} (|a - a0| + |b - b0|), finite by windowing."""
    M = int(M)
    if M < 1:
        raise ValueError("M must be >= 1")
    dev = deviation(state)
    ns = np.arange(state.n_min, state.n_max + 1)
    return float(np.sum(dev[ns >= M]))


def first_moment(state: LatticeState) -> float:
    """sum_n |n| (|a - a0| + |b - b0|) over the window."""
    dev = deviation(state)
    ns = np.abs(np.arange(state.n_min, state.n_max + 1))
    return float(np.sum(ns * dev))


class SuperfastRow(NamedTuple):
    M: int
    tail: float
    bound_value: float
    satisfied: bool


def superfast_check(state: LatticeState, bound: DecayBound, M_range):
    """Compare tail_sum(M) against the bound for each M in M_range."""
    rows = []
    for M in M_range:
        M = int(M)
        if not 1 <= M <= max(abs(state.n_min), abs(state.n_max)):
            raise ValueError("M=%d outside [1, window radius]" % M)
        t = tail_sum(state, M)
        bv = bound.value(M)
        rows.append(SuperfastRow(M=M, tail=t, bound_value=bv, satisfied=t <= bv))
    return rows


@dataclass(frozen=True)
class DecayClassification:
    fitted_class: str
    rate: float
    residuals: dict


def classify_decay(state: LatticeState, noise_floor: float = NOISE_FLOOR,
                   max_m: int | None = None) -> DecayClassification:
    """Best-fitting tail model among the four canonical shapes.

    Fits log tail_sum(M) = intercept + rate * basis(M) for each model
    basis (M log M, M^2, M, log M) over the M with tails above the noise
    floor, and reports the winner by RMS residual.  Shape selection
    only; the superfast bound comparison lives in superfast_check.
    """
    hi = max_m if max_m is not None else max(state.n_max, 1)
    ms, ys = [], []
    for M in range(1, hi + 1):
        t = tail_sum(state, M)
        if t > noise_floor:
            ms.append(M)
            ys.append(math.log(t))
    if len(ms) < 4:
        raise InsufficientTailError(
            "only %d tail points above %g; need at least 4 to classify"
            % (len(ms), noise_floor)
        )
    m_arr = np.array(ms, dtype=float)
    y = np.array(ys)
    residuals = {}
    fits = {}
    for name, basis in _MODELS:
        x = basis(m_arr)
        A = np.stack([np.ones_like(x), x], axis=1)
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        res = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
        residuals[name] = res
        fits[name] = float(coef[1])
    best = min(_MODELS, key=lambda nb: residuals[nb[0]])[0]
    return DecayClassification(fitted_class=best, rate=fits[best],
                               residuals=residuals)


@dataclass(frozen=True, eq=False)
class TimeSlice:
    """Tail diagnostics of one state: bound rows, moment, fitted shape."""

    t: float
    rows: tuple
    first_moment: float
    fitted_class: str

    @property
    def all_satisfied(self) -> bool:
        return all(r.satisfied for r in self.rows)

    @property
    def failing_m(self):
        return tuple(r.M for r in self.rows if not r.satisfied)


@dataclass(frozen=True, eq=False)
class DecayReport:
    slices: tuple
    verdict: str

    @property
    def t0_slice(self) -> TimeSlice:
        return self.slices[0]

    @property
    def t1_slice(self) -> TimeSlice:
        return self.slices[1]


def _has_consecutive(ms) -> bool:
    s = sorted(ms)
    return any(b - a == 1 for a, b in zip(s, s[1:]))


def _slice_for(state: LatticeState, bound: DecayBound, Ms) -> TimeSlice:
    rows = tuple(superfast_check(state, bound, Ms))
    try:
        fitted = classify_decay(state).fitted_class
    except InsufficientTailError:
        fitted = "none"
    return TimeSlice(t=state.t, rows=rows, first_moment=first_moment(state),
                     fitted_class=fitted)


def theorem_witness(scenario: TheoremScenario,
                    config: FlowConfig | None = None) -> DecayReport:
    """Run the two-time witness and return both slices plus a verdict.

    The comparison range is [2, M_max] with M_max from the noise-floor
    criterion, clipped to the window radius.  Admissible verdicts:

      (i)   trivial: superfast at both times, state is constant
      (ii)  dichotomy exhibited: superfast at t0, not superfast at t1
      (iii) hypothesis not met at t0

    A nonconstant state reported superfast at both times would
    contradict the uniqueness theorem, so that outcome raises
    NumericalContradictionError rather than returning.
    """
    bound = scenario.bound
    m_hi = min(max_meaningful_m(bound),
               max(abs(scenario.initial.n_min), abs(scenario.initial.n_max)))
    if m_hi < 3:
        raise ValueError("window radius %d leaves no usable M range" % m_hi)
    Ms = range(2, m_hi + 1)

    traj = integrate(scenario.initial, scenario.coeffs, scenario.t1, config)
    s0, s1 = scenario.initial, traj.final
    slice0 = _slice_for(s0, bound, Ms)
    slice1 = _slice_for(s1, bound, Ms)

    constant = float(np.max(deviation(s0))) <= NOISE_FLOOR
    if not slice0.all_satisfied:
        verdict = ("(iii) hypothesis not met at t0: bound fails at M in %s"
                   % (list(slice0.failing_m),))
    elif slice1.all_satisfied:
        if constant:
            verdict = "(i) trivial: superfast at both times, state is constant"
        else:
            raise NumericalContradictionError(
                "nonconstant data measured superfast at both t0 and t1; "
                "forbidden by the uniqueness theorem, so either the flow or "
                "the tail measurement is inconsistent"
            )
    else:
        fm = list(slice1.failing_m)
        tag = "" if _has_consecutive(fm) else " (marginal: isolated failures)"
        verdict = ("(ii) dichotomy exhibited: superfast at t0, not superfast "
                   "at t1, bound fails at M in %s%s" % (fm, tag))
    return DecayReport(slices=(slice0, slice1), verdict=verdict)
