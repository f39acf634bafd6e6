"""Pure soliton synthesis and its spectral round trip."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import free_state
from toda_lab import (
    SolitonSpec,
    bound_states,
    build_jacobi,
    build_soliton,
    deviation,
    norming_constants,
    scatter_unit_circle,
    tail_rate,
)
from toda_lab.errors import (
    InsufficientTailError,
    InvalidStateError,
    LogScaleRequiredError,
    WindowTooSmallError,
)
from toda_lab.soliton import soliton_positions


def test_spec_validation():
    with pytest.raises(InvalidStateError):
        SolitonSpec(((1.2, 1.0),))
    with pytest.raises(InvalidStateError):
        SolitonSpec(((0.5, -1.0),))
    with pytest.raises(InvalidStateError):
        SolitonSpec(((0.5, 1.0), (0.5, 2.0)))
    spec = SolitonSpec(((0.5, 1.0), (-0.3, 2.0)), t=1.5)
    assert spec.t == 1.5


def test_positions_formula():
    spec = SolitonSpec(((0.3, 1.0), (0.5, 64.0)))
    pos = soliton_positions(spec)
    assert pos[0] == pytest.approx(0.0, abs=1e-12)
    # gamma = |k|^(-2m) centers the soliton at site m
    assert pos[1] == pytest.approx(3.0, abs=1e-10)


def one_soliton(k, gamma, radius=35):
    return build_soliton(SolitonSpec(((k, gamma),)), (-radius, radius))


@pytest.mark.parametrize("k,gamma", [(0.6, 2.0), (-0.55, 0.7), (0.3, 1.0)])
def test_one_soliton_round_trip(k, gamma):
    state = one_soliton(k, gamma)
    H = build_jacobi(state)
    bound = bound_states(H, truncation=801)
    assert len(bound) == 1
    k_meas, lam_meas = bound[0]
    assert k_meas == pytest.approx(k, abs=1e-10)
    (gp, gm), = norming_constants(H, bound, truncation=801)
    assert gp == pytest.approx(gamma, rel=1e-7)
    # one-soliton constraint: the product is fixed by the eigenvalue alone
    assert gp * gm == pytest.approx((k - 1.0 / k) ** 2, rel=1e-7)


@pytest.mark.parametrize("k,gamma", [(0.6, 2.0), (0.3, 1.0)])
def test_one_soliton_is_reflectionless(k, gamma):
    state = one_soliton(k, gamma)
    sd = scatter_unit_circle(state, grid=64, truncation=801)
    assert np.max(np.abs(sd.R_plus)) < 1e-8
    assert np.max(np.abs(sd.R_minus)) < 1e-8


def test_two_soliton_round_trip():
    spec = SolitonSpec(((0.6, 1.3), (0.3, 0.7)))
    state = build_soliton(spec, (-35, 35))
    H = build_jacobi(state)
    bound = bound_states(H, truncation=801)
    ks = sorted(k for k, _ in bound)
    assert ks == pytest.approx([0.3, 0.6], abs=1e-8)
    gammas = {round(k, 6): gp for (k, _), (gp, _)
              in zip(bound, norming_constants(H, bound, truncation=801))}
    assert gammas[0.6] == pytest.approx(1.3, rel=1e-6)
    assert gammas[0.3] == pytest.approx(0.7, rel=1e-6)
    sd = scatter_unit_circle(state, grid=48, truncation=801)
    assert np.max(np.abs(sd.R_plus)) < 1e-8


def test_three_soliton_round_trip():
    spec = SolitonSpec(((0.7, 2.0), (-0.5, 0.5), (0.25, 1.0)))
    state = build_soliton(spec, (-48, 48))
    H = build_jacobi(state)
    bound = bound_states(H, truncation=901)
    assert len(bound) == 3
    requested = dict(spec.bound_states)
    pairs = norming_constants(H, bound, truncation=901)
    for (k_meas, _), (gp, _) in zip(bound, pairs):
        k_req = min(requested, key=lambda k: abs(k - k_meas))
        assert k_meas == pytest.approx(k_req, abs=1e-8)
        assert gp == pytest.approx(requested[k_req], rel=1e-5)


def test_off_center_soliton_peaks_at_requested_site():
    m = 6
    gamma = 0.5 ** (-2 * m)
    state = one_soliton(0.5, gamma)
    peak = state.n_min + int(np.argmax(deviation(state)))
    assert abs(peak - m) <= 1


def test_tail_rates_match_log_k():
    state = one_soliton(0.5, 1.0)
    rates = tail_rate(state)
    assert rates.left == pytest.approx(np.log(0.5), rel=0.01)
    assert rates.right == pytest.approx(np.log(0.5), rel=0.01)


def test_tail_rate_two_soliton_sees_the_slowest_mode():
    state = build_soliton(SolitonSpec(((0.6, 1.0), (0.3, 1.0))), (-35, 35))
    rates = tail_rate(state)
    assert rates.left == pytest.approx(np.log(0.6), rel=0.01)
    assert rates.right == pytest.approx(np.log(0.6), rel=0.01)


def test_tail_rate_needs_a_tail():
    with pytest.raises(InsufficientTailError):
        tail_rate(free_state(radius=20))


def test_window_too_small_is_rejected():
    with pytest.raises(WindowTooSmallError):
        build_soliton(SolitonSpec(((0.9, 1.0),)), (-10, 10))


def test_extreme_k_needs_log_scale():
    with pytest.raises(LogScaleRequiredError):
        build_soliton(SolitonSpec(((0.02, 1.0),)), (-80, 80))


def test_time_stamp_propagates():
    state = build_soliton(SolitonSpec(((0.5, 1.0),), t=1.5), (-30, 30))
    assert state.t == 1.5


@given(k=st.sampled_from([0.25, 0.4, 0.55, -0.35, -0.6]),
       gamma=st.floats(0.4, 2.5))
@settings(max_examples=10, deadline=None)
def test_random_one_soliton_synthesis(k, gamma):
    state = one_soliton(k, gamma)
    H = build_jacobi(state)
    bound = bound_states(H, truncation=801)
    assert len(bound) == 1
    (gp, _), = norming_constants(H, bound, truncation=801)
    assert gp == pytest.approx(gamma, rel=1e-5)
    rates = tail_rate(state)
    assert rates.right == pytest.approx(np.log(abs(k)), rel=0.05)
