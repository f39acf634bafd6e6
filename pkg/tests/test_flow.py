"""Flow integration: fixed points, conservation, reversibility, guards."""

import numpy as np
import pytest

from conftest import free_state, gaussian_state, kvm_gaussian
from toda_lab import (
    FlowConfig,
    HierarchyCoeffs,
    KvMState,
    LatticeState,
    integrate,
    integrate_kvm,
    kvm_embed,
    pad,
)
from toda_lab.errors import GuardBandError


@pytest.mark.parametrize("r", [0, 1, 2])
def test_constant_state_is_a_fixed_point(r):
    state = free_state(radius=10)
    traj = integrate(state, HierarchyCoeffs.homogeneous(r), 0.5)
    final = traj.states[-1]
    assert final.t == pytest.approx(0.5, abs=1e-12)
    assert np.array_equal(final.a, state.a)
    assert np.array_equal(final.b, state.b)


def test_trajectory_bookkeeping(gaussian):
    state = pad(gaussian, 10, 10)
    traj = integrate(state, HierarchyCoeffs.homogeneous(0), 0.4)
    assert traj.states[0] is state
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(0.4)
    for t, s in zip(traj.times, traj.states):
        assert s.t == t
    assert traj.conservation.shape == (len(traj.times), 7)
    cols = traj.CONSERVATION_COLUMNS
    assert cols[0] == "t" and "min_a" in cols and "tail_margin" in cols


def test_traces_are_conserved(gaussian):
    state = pad(gaussian, 12, 12)
    traj = integrate(state, HierarchyCoeffs.homogeneous(0), 0.8)
    traces = traj.conservation[:, 1:5]
    drift = np.max(np.abs(traces - traces[0]), axis=0)
    assert np.all(drift < 1e-8)


def test_min_a_stays_positive(gaussian):
    state = pad(gaussian, 10, 10)
    traj = integrate(state, HierarchyCoeffs.homogeneous(1), 0.5)
    assert np.all(traj.conservation[:, 5] > 0.0)


def test_time_reversal_roundtrip(gaussian):
    state = pad(gaussian, 14, 14)
    coeffs = HierarchyCoeffs.homogeneous(0)
    forward = integrate(state, coeffs, 0.6)
    back = integrate(forward.states[-1], coeffs, 0.0)
    final = back.states[-1]
    assert np.max(np.abs(final.a - state.a)) < 1e-9
    assert np.max(np.abs(final.b - state.b)) < 1e-9


def test_zero_duration_returns_single_snapshot(gaussian):
    state = pad(gaussian, 8, 8)
    traj = integrate(state, HierarchyCoeffs.homogeneous(0), 0.0)
    assert len(traj.states) == 1
    assert traj.states[0] is state


def test_guard_band_rejects_edge_perturbations():
    # the bump touches the window edge, so the background extension is wrong
    n = np.arange(-4, 5)
    state = LatticeState(-4, 0.5 + 0.1 * np.exp(-((n / 4.0) ** 2)),
                         np.zeros(9), 0.5, 0.0)
    with pytest.raises(GuardBandError):
        integrate(state, HierarchyCoeffs.homogeneous(0), 0.1)


def test_config_rejects_small_guard_band(gaussian):
    state = pad(gaussian, 10, 10)
    cfg = FlowConfig(guard_band=2)
    with pytest.raises(ValueError):
        integrate(state, HierarchyCoeffs.homogeneous(2), 0.1, cfg)


def test_higher_flow_moves_the_profile(gaussian):
    state = pad(gaussian, 16, 16)
    traj = integrate(state, HierarchyCoeffs.homogeneous(1), 0.5)
    final = traj.states[-1]
    assert np.max(np.abs(final.a - state.a)) > 1e-4


def test_kvm_constant_fixed_point():
    rho = KvMState(-8, np.full(17, 0.45), 0.45)
    traj = integrate_kvm(rho, 0.5)
    assert np.array_equal(traj.states[-1].rho, rho.rho)


def test_kvm_guard_band():
    n = np.arange(-4, 5)
    rho = KvMState(-4, 0.5 + 0.1 * np.exp(-((n / 4.0) ** 2)), 0.5)
    with pytest.raises(GuardBandError):
        integrate_kvm(rho, 0.1)


def test_kvm_matches_the_embedded_odd_flow():
    rho0 = kvm_gaussian(radius=20, amp=0.05)
    t_final = 0.4
    traj_k = integrate_kvm(rho0, t_final)
    emb = kvm_embed(rho0)
    traj_t = integrate(emb, HierarchyCoeffs.homogeneous(1), t_final)
    final_rho = traj_k.states[-1].rho
    final_a = traj_t.states[-1].a
    assert np.max(np.abs(final_rho - final_a)) < 1e-7
    # the diagonal stays exactly zero along the reduced flow
    assert np.max(np.abs(traj_t.states[-1].b)) < 1e-10
