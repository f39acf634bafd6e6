"""Jacobi operator spectra and forward scattering on the unit circle.

Everything here assumes the normalized background (a0 = 1/2, b0 = 0), so
the essential spectrum is [-1, 1] and plane waves are k^n with
lambda = (k + 1/k)/2.  Reflection data is computed by propagating free
waves across the compactly supported perturbation with the three-term
recurrence and matching incoming and outgoing exponentials in the exact
background region; the transmission coefficient comes along for free and
feeds the unitarity test |R|^2 + |T|^2 = 1.

Sign conventions: R_plus is the reflection measured at +infinity (the
solution that is a pure transmitted wave T k^{-n} deep on the left reads
k^{-n} + R_plus k^{n} deep on the right), and gamma_plus normalizes the
Jost solution decaying like k^n at +infinity.  With these choices the
flow evolves R_plus by exp(+alpha_r t) and gamma_plus by
exp(+alpha_r(k_l) t), which is checked end to end by the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .core import LatticeState, effective_support, normalize, sample_at
from .errors import (
    BandEdgeError,
    InvalidStateError,
    LocalizationError,
    UnnormalizedBackgroundError,
)
from .hierarchy import apply_jacobi, dense_jacobi

__all__ = [
    "JacobiOperator",
    "BoundStateData",
    "ScatteringData",
    "build_jacobi",
    "lambda_of_k",
    "k_of_lambda",
    "bound_states",
    "norming_constants",
    "jost_and_reflection",
    "reflection_grid",
    "default_k_grid",
    "scatter_unit_circle",
    "sd_to_dict",
    "sd_from_dict",
]

# Arcs of the unit circle within this angle of k = +-1 are excluded from
# default grids; the transfer matrix is defective at the band edges.
BAND_EDGE_ANGLE = 1e-3

SPECTRAL_MARGIN = 1e-8


def lambda_of_k(k):
    """Spectral parameter lambda = (k + 1/k)/2."""
    return 0.5 * (k + 1.0 / k)


def k_of_lambda(lam):
    """Inverse map into the unit disc: k = lambda - sign(lambda) sqrt(lambda^2 - 1)."""
    lam = np.asarray(lam, dtype=float)
    k = lam - np.sign(lam) * np.sqrt(lam * lam - 1.0)
    return k if k.shape else float(k)


@dataclass(frozen=True)
class JacobiOperator:
    """View of H = a S+ + a- S- + b for a normalized state."""

    state: LatticeState

    def tridiagonal(self, n_lo: int, n_hi: int):
        """(diagonal, off-diagonal) of the truncation to sites [n_lo, n_hi)."""
        n = np.arange(n_lo, n_hi)
        a, b = sample_at(self.state, n)
        return b, a[:-1]

    def dense(self, n_lo: int, n_hi: int) -> np.ndarray:
        return dense_jacobi(self.state, n_lo, n_hi)

    def apply(self, v: np.ndarray, n_lo: int) -> np.ndarray:
        """Apply H to a vector supported inside [n_lo, n_lo + len(v))."""
        n = np.arange(n_lo, n_lo + len(v))
        a, b = sample_at(self.state, n)
        return apply_jacobi(a, b, v)


def build_jacobi(state: LatticeState) -> JacobiOperator:
    if state.a0 != 0.5 or state.b0 != 0.0:
        raise UnnormalizedBackgroundError(
            "background is (%g, %g); normalize() the state to (1/2, 0) first"
            % (state.a0, state.b0)
        )
    return JacobiOperator(state)


def _truncation_range(state: LatticeState, truncation: int):
    """Site range for dense work: covers the window plus >= 50 sites margin."""
    half = max(int(truncation) // 2, 50)
    center = (state.n_min + state.n_max) // 2
    lo = min(center - half, state.n_min - 50)
    hi = max(center + half + 1, state.n_max + 51)
    return lo, hi


def bound_states(H: JacobiOperator, truncation: int = 401):
    """Eigenvalues outside [-1, 1], as (k_l, lambda_l) pairs sorted by lambda.

    Dense symmetric tridiagonal eigensolve on the truncation; truncation
    error for genuine bound states is exponentially small, and anything
    within SPECTRAL_MARGIN of the band is discarded as continuum residue.
    """
    lo, hi = _truncation_range(H.state, truncation)
    d, e = H.tridiagonal(lo, hi)
    lam = eigh_tridiagonal(d, e, eigvals_only=True)
    outside = np.sort(lam[np.abs(lam) > 1.0 + SPECTRAL_MARGIN])
    return [(float(k_of_lambda(x)), float(x)) for x in outside]


def norming_constants(H: JacobiOperator, bound, truncation: int = 401):
    """Norming constants (gamma_plus, gamma_minus) for each bound state.

    The truncated eigenvector v sampled at a background site n* equals
    s k^{n*} for the Jost normalization factor s, and gamma_plus = s^2
    because 1/gamma = sum |f|^2 = |1/s|^2 for the unit vector v.  The
    matching site sits a few sites outside the perturbation, far from the
    truncation edge, so both the missing-tail error and the reflected
    k^{-n} contamination from the hard cut are exponentially negligible.
    """
    if not bound:
        return []
    lo, hi = _truncation_range(H.state, truncation)
    d, e = H.tridiagonal(lo, hi)
    lam, vecs = eigh_tridiagonal(d, e)
    support = effective_support(H.state, 1e-13)
    if support is None:
        center = (H.state.n_min + H.state.n_max) // 2
        support = (center, center)
    n_left = support[0] - 10
    n_right = support[1] + 10
    if n_left - lo < 10 or hi - 1 - n_right < 10:
        raise LocalizationError(
            "truncation [%d, %d) leaves no background margin around the "
            "perturbation support [%d, %d]" % (lo, hi, support[0], support[1])
        )
    out = []
    for k, target in bound:
        i = int(np.argmin(np.abs(lam - target)))
        v = vecs[:, i]
        edge_mass = float(np.sum(v[:10] ** 2) + np.sum(v[-10:] ** 2))
        if edge_mass > 1e-10:
            raise LocalizationError(
                "eigenvector for lambda=%.6g carries %.2e mass at the "
                "truncation edge; enlarge the truncation" % (target, edge_mass)
            )
        s_plus = float(v[n_right - lo]) / k ** n_right
        s_minus = float(v[n_left - lo]) * k ** n_left
        out.append((s_plus ** 2, s_minus ** 2))
    return out


def _check_unit_circle(ks):
    ks = np.asarray(ks, dtype=complex)
    if np.any(np.abs(np.abs(ks) - 1.0) > 1e-8):
        raise ValueError("scattering points must lie on the unit circle")
    if np.any(np.minimum(np.abs(ks - 1.0), np.abs(ks + 1.0)) < 1e-9):
        raise BandEdgeError("k = +-1 is a band edge; the transfer matrix is defective")
    return ks


def _sweeps(state: LatticeState, ks: np.ndarray):
    """Both transfer-matrix sweeps, vectorized over the k grid.

    Returns (R_right, T_right, R_left, T_left) where "right" labels the
    reflection measured at +infinity (forward sweep seeded with k^{-n}
    on the left) and "left" the one measured at -infinity.
    """
    lam = lambda_of_k(ks)
    lo = state.n_min - 3
    hi = state.n_max + 3
    sites = np.arange(lo, hi + 1)
    a, b = sample_at(state, sites)

    # forward sweep: f ~ k^{-n} exactly on the left
    f_prev = ks ** float(-lo)
    f_cur = ks ** float(-(lo + 1))
    for i in range(1, len(sites) - 1):
        f_next = ((lam - b[i]) * f_cur - a[i - 1] * f_prev) / a[i]
        f_prev, f_cur = f_cur, f_next
    # f_prev = f(hi-1), f_cur = f(hi); match f = C k^{-n} + D k^{n} at n0 = hi-1
    det = ks - 1.0 / ks
    n0 = hi - 1
    c_fwd = (f_prev * ks ** float(n0 + 1) - f_cur * ks ** float(n0)) / det
    d_fwd = (f_cur * ks ** float(-n0) - f_prev * ks ** float(-n0 - 1)) / det
    r_right = d_fwd / c_fwd
    t_right = 1.0 / c_fwd

    # backward sweep: g ~ k^{+n} exactly on the right
    g_next = ks ** float(hi)
    g_cur = ks ** float(hi - 1)
    for i in range(len(sites) - 2, 0, -1):
        g_prev = ((lam - b[i]) * g_cur - a[i] * g_next) / a[i - 1]
        g_next, g_cur = g_cur, g_prev
    # g_cur = g(lo), g_next = g(lo+1); match g = C k^{n} + D k^{-n} at n0 = lo
    c_bwd = (g_cur * ks ** float(-lo - 1) - g_next * ks ** float(-lo)) / (1.0 / ks - ks)
    d_bwd = (g_next * ks ** float(lo) - g_cur * ks ** float(lo + 1)) / (1.0 / ks - ks)
    r_left = d_bwd / c_bwd
    t_left = 1.0 / c_bwd

    return r_right, t_right, r_left, t_left


def reflection_grid(H: JacobiOperator, ks):
    """(R_plus, R_minus, T) on an array of unit-circle points."""
    ks = _check_unit_circle(ks)
    r_right, t_right, r_left, _ = _sweeps(H.state, ks)
    return r_right, r_left, t_right


def jost_and_reflection(H: JacobiOperator, k: complex, side: str) -> complex:
    """Reflection coefficient at one unit-circle point.

    side="right" gives the reflection measured at +infinity (R_plus),
    side="left" the one measured at -infinity (R_minus).
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    ks = _check_unit_circle(np.array([k], dtype=complex))
    r_right, _, r_left, _ = _sweeps(H.state, ks)
    return complex(r_right[0] if side == "right" else r_left[0])


def transmission(H: JacobiOperator, k: complex) -> complex:
    """Transmission coefficient from the forward sweep."""
    ks = _check_unit_circle(np.array([k], dtype=complex))
    _, t_right, _, _ = _sweeps(H.state, ks)
    return complex(t_right[0])


@dataclass(frozen=True)
class BoundStateData:
    k: float
    lam: float
    gamma_plus: float
    gamma_minus: float

    def __post_init__(self):
        if not (0.0 < abs(self.k) < 1.0):
            raise InvalidStateError("bound state needs 0 < |k| < 1")
        if abs(self.lam - lambda_of_k(self.k)) > 1e-9:
            raise InvalidStateError(
                "lambda=%.12g inconsistent with k=%.12g" % (self.lam, self.k)
            )
        if not (self.gamma_plus > 0 and self.gamma_minus > 0):
            raise InvalidStateError("norming constants must be positive")


@dataclass(frozen=True, eq=False)
class ScatteringData:
    """Reflection samples on the unit circle plus the discrete data."""

    k_grid: np.ndarray
    R_plus: np.ndarray
    R_minus: np.ndarray
    bound_states: tuple
    t: float = 0.0

    def __post_init__(self):
        k = np.array(self.k_grid, dtype=complex)
        rp = np.array(self.R_plus, dtype=complex)
        rm = np.array(self.R_minus, dtype=complex)
        for arr in (k, rp, rm):
            arr.setflags(write=False)
        object.__setattr__(self, "k_grid", k)
        object.__setattr__(self, "R_plus", rp)
        object.__setattr__(self, "R_minus", rm)
        object.__setattr__(self, "t", float(self.t))
        if not (len(k) == len(rp) == len(rm)):
            raise InvalidStateError("k grid and reflection arrays disagree in length")
        bs = tuple(sorted(self.bound_states, key=lambda s: s.lam))
        object.__setattr__(self, "bound_states", bs)

    def __len__(self) -> int:
        return len(self.k_grid)


def default_k_grid(grid: int = 256, edge_angle: float = BAND_EDGE_ANGLE) -> np.ndarray:
    """Equispaced points on the upper unit semicircle, edge zones excluded."""
    theta = np.linspace(edge_angle, np.pi - edge_angle, int(grid))
    return np.exp(1j * theta)


def scatter_unit_circle(state: LatticeState, grid: int = 256,
                        truncation: int = 401,
                        threads: int = 1) -> ScatteringData:
    """Full forward-scattering map of a state (normalized internally).

    threads > 1 splits the k grid into contiguous chunks computed
    concurrently; results are reassembled by index, so the output is
    bit-identical to the sequential run.
    """
    s = normalize(state)
    H = build_jacobi(s)
    ks = default_k_grid(grid)
    threads = max(1, int(threads))
    if threads > 1 and len(ks) >= 2 * threads:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(np.arange(len(ks)), threads)
        r_plus = np.empty(len(ks), dtype=complex)
        r_minus = np.empty(len(ks), dtype=complex)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [(idx, pool.submit(reflection_grid, H, ks[idx]))
                    for idx in chunks]
            for idx, fut in futs:
                rp, rm, _ = fut.result()
                r_plus[idx] = rp
                r_minus[idx] = rm
    else:
        r_plus, r_minus, _ = reflection_grid(H, ks)
    pairs = bound_states(H, truncation)
    gammas = norming_constants(H, pairs, truncation)
    bs = tuple(
        BoundStateData(k=k, lam=lam, gamma_plus=gp, gamma_minus=gm)
        for (k, lam), (gp, gm) in zip(pairs, gammas)
    )
    return ScatteringData(k_grid=ks, R_plus=r_plus, R_minus=r_minus,
                          bound_states=bs, t=s.t)


def sd_to_dict(sd: ScatteringData) -> dict:
    def c2pair(z):
        return [float(z.real), float(z.imag)]

    return {
        "t": float(sd.t),
        "k_grid": [c2pair(z) for z in sd.k_grid],
        "R_plus": [c2pair(z) for z in sd.R_plus],
        "R_minus": [c2pair(z) for z in sd.R_minus],
        "bound_states": [
            {
                "k": float(b.k),
                "lambda": float(b.lam),
                "gamma_plus": float(b.gamma_plus),
                "gamma_minus": float(b.gamma_minus),
            }
            for b in sd.bound_states
        ],
    }


def sd_from_dict(d: dict) -> ScatteringData:
    def pairs2c(rows):
        arr = np.asarray(rows, dtype=float)
        if arr.size == 0:
            return np.zeros(0, dtype=complex)
        return arr[:, 0] + 1j * arr[:, 1]

    bs = tuple(
        BoundStateData(
            k=float(row["k"]),
            lam=float(row["lambda"]),
            gamma_plus=float(row["gamma_plus"]),
            gamma_minus=float(row["gamma_minus"]),
        )
        for row in d.get("bound_states", [])
    )
    return ScatteringData(
        k_grid=pairs2c(d["k_grid"]),
        R_plus=pairs2c(d["R_plus"]),
        R_minus=pairs2c(d["R_minus"]),
        bound_states=bs,
        t=float(d.get("t", 0.0)),
    )
