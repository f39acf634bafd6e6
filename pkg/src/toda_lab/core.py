"""Finite-window lattice states over constant backgrounds.

A state stores samples of the Jacobi coefficients (a, b) on a window
[n_min, n_min + L) and extends them by the constant background values
(a0, b0) everywhere else.  Every operation treats a state as a function
on the whole integer line; the window is just the part worth storing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError

__all__ = [
    "LatticeState",
    "KvMState",
    "access",
    "sample_at",
    "kvm_sample_at",
    "normalize",
    "reflect",
    "pad",
    "trim",
    "constant_like",
    "deviation",
    "effective_support",
    "tail_margin",
    "states_close",
    "kvm_states_close",
    "state_to_dict",
    "state_from_dict",
    "kvm_to_dict",
    "kvm_from_dict",
    "load_state",
    "save_state",
]


def _readonly(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LatticeState:
    """Samples of (a, b) on a finite window, constant outside.

    a(n) must be positive everywhere: the Jacobi operator needs a^2 != 0
    and the hierarchy flows preserve positivity, so a sign loss always
    means something upstream went numerically wrong.
    """

    n_min: int
    a: np.ndarray
    b: np.ndarray
    a0: float
    b0: float
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", _readonly(self.a))
        object.__setattr__(self, "b", _readonly(self.b))
        object.__setattr__(self, "n_min", int(self.n_min))
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "b0", float(self.b0))
        object.__setattr__(self, "t", float(self.t))
        if self.a.ndim != 1 or self.b.ndim != 1:
            raise InvalidStateError("a and b must be one dimensional")
        if len(self.a) != len(self.b) or len(self.a) == 0:
            raise InvalidStateError(
                "a and b need equal length >= 1, got %d and %d"
                % (len(self.a), len(self.b))
            )
        if not self.a0 > 0:
            raise InvalidStateError("background a0 must be positive")
        if not np.all(self.a > 0):
            raise InvalidStateError("a(n) must stay positive on the window")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise InvalidStateError("coefficients must be finite")

    def __len__(self) -> int:
        return len(self.a)

    @property
    def n_max(self) -> int:
        """Largest window index (inclusive)."""
        return self.n_min + len(self.a) - 1

    def sites(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_min + len(self.a))


@dataclass(frozen=True, eq=False)
class KvMState:
    """A positive sequence rho on a finite window, rho0 outside."""

    n_min: int
    rho: np.ndarray
    rho0: float
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rho", _readonly(self.rho))
        object.__setattr__(self, "n_min", int(self.n_min))
        object.__setattr__(self, "rho0", float(self.rho0))
        object.__setattr__(self, "t", float(self.t))
        if self.rho.ndim != 1 or len(self.rho) == 0:
            raise InvalidStateError("rho must be a nonempty 1-d sequence")
        if not self.rho0 > 0:
            raise InvalidStateError("background rho0 must be positive")
        if not np.all(self.rho > 0):
            raise InvalidStateError("rho(n) must stay positive on the window")
        if not np.all(np.isfinite(self.rho)):
            raise InvalidStateError("rho must be finite")

    def __len__(self) -> int:
        return len(self.rho)

    @property
    def n_max(self) -> int:
        return self.n_min + len(self.rho) - 1

    def sites(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_min + len(self.rho))


def _sample(values: np.ndarray, n_min: int, background: float, n) -> np.ndarray:
    n = np.asarray(n, dtype=int)
    i = n - n_min
    inside = (i >= 0) & (i < len(values))
    out = np.full(n.shape, float(background))
    out[inside] = values[i[inside]]
    return out


def access(state: LatticeState, n: int) -> tuple[float, float]:
    """Return (a(n), b(n)); background values outside the window."""
    i = n - state.n_min
    if 0 <= i < len(state.a):
        return float(state.a[i]), float(state.b[i])
    return state.a0, state.b0


def sample_at(state: LatticeState, n) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized access over an array of integer sites."""
    return (
        _sample(state.a, state.n_min, state.a0, n),
        _sample(state.b, state.n_min, state.b0, n),
    )


def kvm_sample_at(state: KvMState, n) -> np.ndarray:
    return _sample(state.rho, state.n_min, state.rho0, n)


def normalize(state: LatticeState) -> LatticeState:
    """Map the background to (1/2, 0) by a -> a/(2 a0), b -> (b - b0)/(2 a0).

    Idempotent to the bit: once the background is (1/2, 0) the transform
    divides by 1 and subtracts 0.
    """
    if not state.a0 > 0:
        raise InvalidStateError("cannot normalize with a0 <= 0")
    scale = 2.0 * state.a0
    return LatticeState(
        n_min=state.n_min,
        a=state.a / scale,
        b=(state.b - state.b0) / scale,
        a0=0.5,
        b0=0.0,
        t=state.t,
    )


def reflect(state: LatticeState) -> LatticeState:
    """Mirror the lattice: a~(n) = a(-n-1), b~(n) = b(-n), t -> -t.

    The reflected window is one site longer; the a and b samples sit on
    staggered mirrors, so a common window must cover both images.  As a
    function on the integers the operation is an involution.
    """
    n_lo = -state.n_max - 1
    n = np.arange(n_lo, -state.n_min + 1)
    a_ref, _ = sample_at(state, -n - 1)
    _, b_ref = sample_at(state, -n)
    return LatticeState(
        n_min=n_lo, a=a_ref, b=b_ref, a0=state.a0, b0=state.b0, t=-state.t
    )


def pad(state: LatticeState, left: int, right: int) -> LatticeState:
    """Grow the window by background sites without changing the function."""
    if left < 0 or right < 0:
        raise ValueError("pad amounts must be nonnegative")
    a = np.concatenate([np.full(left, state.a0), state.a, np.full(right, state.a0)])
    b = np.concatenate([np.full(left, state.b0), state.b, np.full(right, state.b0)])
    return LatticeState(state.n_min - left, a, b, state.a0, state.b0, state.t)


def trim(state: LatticeState, atol: float = 0.0) -> LatticeState:
    """Drop edge sites that match the background within atol (keep >= 1 site)."""
    dev = deviation(state)
    keep = np.nonzero(dev > atol)[0]
    if len(keep) == 0:
        return LatticeState(
            state.n_min, [state.a0], [state.b0], state.a0, state.b0, state.t
        )
    lo, hi = int(keep[0]), int(keep[-1]) + 1
    return LatticeState(
        state.n_min + lo, state.a[lo:hi], state.b[lo:hi],
        state.a0, state.b0, state.t,
    )


def constant_like(state: LatticeState) -> LatticeState:
    """Background-only state on the same window (used for relative traces)."""
    n = len(state.a)
    return LatticeState(
        state.n_min, np.full(n, state.a0), np.full(n, state.b0),
        state.a0, state.b0, state.t,
    )


def deviation(state: LatticeState) -> np.ndarray:
    """|a - a0| + |b - b0| over the window."""
    return np.abs(state.a - state.a0) + np.abs(state.b - state.b0)


def effective_support(state: LatticeState, threshold: float = 0.0):
    """Inclusive site range (n_first, n_last) where deviation exceeds threshold.

    Returns None for a state that is background everywhere at this threshold.
    """
    idx = np.nonzero(deviation(state) > threshold)[0]
    if len(idx) == 0:
        return None
    return state.n_min + int(idx[0]), state.n_min + int(idx[-1])


def tail_margin(state: LatticeState, threshold: float) -> int:
    """Distance from the outermost deviating site to the nearer window edge.

    A state with no deviation above threshold reports the full window
    length, which any sane guard band accepts.
    """
    support = effective_support(state, threshold)
    if support is None:
        return len(state.a)
    lo, hi = support
    return min(lo - state.n_min, state.n_max - hi)


def states_close(s1: LatticeState, s2: LatticeState, atol: float = 1e-12) -> bool:
    """Compare two states as functions on the integer line."""
    if abs(s1.t - s2.t) > atol:
        return False
    if abs(s1.a0 - s2.a0) > atol or abs(s1.b0 - s2.b0) > atol:
        return False
    lo = min(s1.n_min, s2.n_min)
    hi = max(s1.n_max, s2.n_max)
    n = np.arange(lo, hi + 1)
    a1, b1 = sample_at(s1, n)
    a2, b2 = sample_at(s2, n)
    return bool(
        np.max(np.abs(a1 - a2)) <= atol and np.max(np.abs(b1 - b2)) <= atol
    )


def kvm_states_close(s1: KvMState, s2: KvMState, atol: float = 1e-12) -> bool:
    if abs(s1.t - s2.t) > atol or abs(s1.rho0 - s2.rho0) > atol:
        return False
    n = np.arange(min(s1.n_min, s2.n_min), max(s1.n_max, s2.n_max) + 1)
    return bool(np.max(np.abs(kvm_sample_at(s1, n) - kvm_sample_at(s2, n))) <= atol)


# ---------------------------------------------------------------------------
# JSON interchange


def state_to_dict(state: LatticeState) -> dict:
    return {
        "n_min": int(state.n_min),
        "a": [float(x) for x in state.a],
        "b": [float(x) for x in state.b],
        "a0": float(state.a0),
        "b0": float(state.b0),
        "t": float(state.t),
    }


def state_from_dict(d: dict) -> LatticeState:
    return LatticeState(
        n_min=int(d["n_min"]),
        a=d["a"],
        b=d["b"],
        a0=float(d["a0"]),
        b0=float(d["b0"]),
        t=float(d.get("t", 0.0)),
    )


def kvm_to_dict(state: KvMState) -> dict:
    return {
        "n_min": int(state.n_min),
        "rho": [float(x) for x in state.rho],
        "rho0": float(state.rho0),
        "t": float(state.t),
    }


def kvm_from_dict(d: dict) -> KvMState:
    return KvMState(
        n_min=int(d["n_min"]),
        rho=d["rho"],
        rho0=float(d["rho0"]),
        t=float(d.get("t", 0.0)),
    )


def save_state(state: LatticeState, path) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(state), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_state(path) -> LatticeState:
    with open(path) as fh:
        return state_from_dict(json.load(fh))
