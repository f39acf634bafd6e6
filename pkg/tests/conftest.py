"""Shared state builders for the test suite.

Everything here is deterministic: builders take explicit seeds so the
same profile shows up in every run.
"""

import numpy as np
import pytest

from toda_lab import LatticeState, KvMState


def gaussian_state(radius=16, amp_a=0.05, amp_b=0.03, width=1.0,
                   center=0.0, t=0.0):
    """Smooth compact bump on the normalized background (1/2, 0)."""
    n = np.arange(-radius, radius + 1)
    prof = np.exp(-(((n - center) / width) ** 2))
    return LatticeState(-radius, 0.5 + amp_a * prof, amp_b * prof,
                        0.5, 0.0, t)


def seeded_gaussian(seed, radius=32, r_amp=(0.01, 0.1)):
    """One member of the seeded witness family (random amp, width, sign)."""
    rng = np.random.default_rng(seed)
    amp_a = rng.uniform(*r_amp) * rng.choice([-1.0, 1.0])
    amp_b = rng.uniform(*r_amp) * rng.choice([-1.0, 1.0])
    width = rng.uniform(0.8, 1.2)
    return gaussian_state(radius=radius, amp_a=amp_a, amp_b=amp_b,
                          width=width)


def well_state(radius=25, depth=0.75):
    """Single-site diagonal well b(0) = depth on the free background.

    For depth 3/4 the discrete spectrum is known in closed form:
    lambda = 5/4, k = 1/2, gamma_plus = gamma_minus = 3/5.
    """
    b = np.zeros(2 * radius + 1)
    b[radius] = depth
    return LatticeState(-radius, np.full(2 * radius + 1, 0.5), b, 0.5, 0.0)


def free_state(radius=8, a0=0.5, b0=0.0):
    n = 2 * radius + 1
    return LatticeState(-radius, np.full(n, a0), np.full(n, b0), a0, b0)


def profile_state(dev, radius, kind="a"):
    """State whose a (or b) deviation equals the given profile |dev(n)|."""
    n = np.arange(-radius, radius + 1)
    d = np.asarray(dev(np.abs(n)), dtype=float)
    if kind == "a":
        return LatticeState(-radius, 0.5 + d, np.zeros(len(n)), 0.5, 0.0)
    return LatticeState(-radius, np.full(len(n), 0.5), d, 0.5, 0.0)


def random_state(seed, length=64, amp=0.1, n_min=None):
    """Unstructured bounded perturbation filling the whole window."""
    rng = np.random.default_rng(seed)
    if n_min is None:
        n_min = -(length // 2)
    a = 0.5 + amp * rng.uniform(-1, 1, length)
    b = amp * rng.uniform(-1, 1, length)
    return LatticeState(n_min, a, b, 0.5, 0.0)


def kvm_gaussian(radius=16, amp=0.05, width=1.2, rho0=0.5):
    n = np.arange(-radius, radius + 1)
    rho = rho0 + amp * np.exp(-((n / width) ** 2))
    return KvMState(-radius, rho, rho0)


@pytest.fixture
def gaussian():
    return gaussian_state()


@pytest.fixture
def well():
    return well_state()
