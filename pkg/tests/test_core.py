"""Window bookkeeping: construction, access, transforms, serialization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import free_state, gaussian_state
from toda_lab import (
    KvMState,
    LatticeState,
    access,
    constant_like,
    deviation,
    effective_support,
    load_state,
    normalize,
    pad,
    reflect,
    sample_at,
    save_state,
    states_close,
    tail_margin,
    trim,
)
from toda_lab.core import (
    kvm_from_dict,
    kvm_to_dict,
    state_from_dict,
    state_to_dict,
)
from toda_lab.errors import InvalidStateError


def test_construction_rejects_bad_data():
    with pytest.raises(InvalidStateError):
        LatticeState(0, [0.5, -0.1], [0.0, 0.0], 0.5, 0.0)
    with pytest.raises(InvalidStateError):
        LatticeState(0, [0.5, 0.5], [0.0], 0.5, 0.0)
    with pytest.raises(InvalidStateError):
        LatticeState(0, [], [], 0.5, 0.0)
    with pytest.raises(InvalidStateError):
        LatticeState(0, [0.5, np.nan], [0.0, 0.0], 0.5, 0.0)
    with pytest.raises(InvalidStateError):
        LatticeState(0, [0.5], [0.0], -0.5, 0.0)


def test_arrays_are_readonly(gaussian):
    with pytest.raises(ValueError):
        gaussian.a[0] = 2.0


def test_access_returns_background_outside_window():
    s = LatticeState(3, [0.7, 0.8], [0.1, -0.2], 0.5, 0.0)
    assert access(s, 3) == (0.7, 0.1)
    assert access(s, 4) == (0.8, -0.2)
    for n in (-10, 2, 5, 100):
        assert access(s, n) == (0.5, 0.0)


def test_sample_at_matches_scalar_access(gaussian):
    ns = np.arange(-30, 31)
    a, b = sample_at(gaussian, ns)
    for i, n in enumerate(ns):
        assert (a[i], b[i]) == access(gaussian, int(n))


def test_normalize_formula_and_idempotence():
    s = LatticeState(-2, [1.0, 1.5, 0.8, 1.2, 1.0], [2.0, 2.5, 1.0, 2.0, 2.0],
                     1.0, 2.0, t=0.3)
    ns = normalize(s)
    assert ns.a0 == 0.5 and ns.b0 == 0.0 and ns.t == 0.3
    assert np.array_equal(ns.a, s.a / 2.0)
    assert np.array_equal(ns.b, (s.b - 2.0) / 2.0)
    again = normalize(ns)
    assert np.array_equal(again.a, ns.a)
    assert np.array_equal(again.b, ns.b)


def test_reflect_formula_and_involution():
    s = LatticeState(-1, [0.6, 0.7, 0.55], [0.1, -0.3, 0.2], 0.5, 0.0, t=0.4)
    rs = reflect(s)
    assert rs.t == -0.4
    ns = np.arange(-6, 7)
    a_r, b_r = sample_at(rs, ns)
    a_o, _ = sample_at(s, -ns - 1)
    _, b_o = sample_at(s, -ns)
    assert np.array_equal(a_r, a_o)
    assert np.array_equal(b_r, b_o)
    back = reflect(rs)
    assert back.t == s.t
    a_bk, b_bk = sample_at(back, ns)
    a_or, b_or = sample_at(s, ns)
    assert np.array_equal(a_bk, a_or)
    assert np.array_equal(b_bk, b_or)


def test_pad_extends_with_background(gaussian):
    p = pad(gaussian, 4, 7)
    assert p.n_min == gaussian.n_min - 4
    assert p.n_max == gaussian.n_max + 7
    ns = np.arange(p.n_min, p.n_max + 1)
    ap, bp = sample_at(p, ns)
    ao, bo = sample_at(gaussian, ns)
    assert np.array_equal(ap, ao)
    assert np.array_equal(bp, bo)
    with pytest.raises(ValueError):
        pad(gaussian, -1, 0)


def test_trim_drops_background_edges():
    a = np.array([0.5, 0.5, 0.9, 0.5, 0.7, 0.5])
    b = np.zeros(6)
    s = LatticeState(-3, a, b, 0.5, 0.0)
    tstate = trim(s)
    assert (tstate.n_min, tstate.n_max) == (-1, 1)
    assert np.array_equal(tstate.a, a[2:5])


def test_trim_constant_keeps_one_site():
    s = free_state(radius=5)
    tstate = trim(s)
    assert len(tstate) == 1
    assert tstate.a[0] == 0.5 and tstate.b[0] == 0.0


def test_deviation_support_and_margin():
    a = np.array([0.5, 0.5, 0.9, 0.5, 0.5, 0.5, 0.5])
    b = np.array([0.0, 0.0, 0.0, 0.0, 0.2, 0.0, 0.0])
    s = LatticeState(-3, a, b, 0.5, 0.0)
    dev = deviation(s)
    assert dev.tolist() == [0.0, 0.0, pytest.approx(0.4), 0.0,
                            pytest.approx(0.2), 0.0, 0.0]
    assert effective_support(s) == (-1, 1)
    # support sits at sites -1 and 1 in a window reaching to +-3
    assert tail_margin(s, 1e-12) == 2


def test_constant_like_matches_background(gaussian):
    c = constant_like(gaussian)
    assert np.all(c.a == 0.5) and np.all(c.b == 0.0)
    assert c.n_min == gaussian.n_min and len(c) == len(gaussian)


def test_states_close_ignores_window_placement(gaussian):
    other = pad(gaussian, 11, 3)
    assert states_close(gaussian, other, atol=0.0)
    shifted = LatticeState(gaussian.n_min + 1, gaussian.a, gaussian.b,
                           0.5, 0.0, gaussian.t)
    assert not states_close(gaussian, shifted, atol=1e-6)
    late = LatticeState(gaussian.n_min, gaussian.a, gaussian.b, 0.5, 0.0,
                        t=1.0)
    assert not states_close(gaussian, late)


def test_dict_roundtrip_is_exact(gaussian):
    d = state_to_dict(gaussian)
    back = state_from_dict(d)
    assert back.n_min == gaussian.n_min and back.t == gaussian.t
    assert np.array_equal(back.a, gaussian.a)
    assert np.array_equal(back.b, gaussian.b)


def test_file_roundtrip(tmp_path, gaussian):
    path = tmp_path / "state.json"
    save_state(gaussian, path)
    back = load_state(path)
    assert states_close(back, gaussian, atol=0.0)
    assert np.array_equal(back.a, gaussian.a)


def test_kvm_validation_and_roundtrip():
    with pytest.raises(InvalidStateError):
        KvMState(0, [0.4, 0.0], 0.4)
    s = KvMState(-1, [0.4, 0.5, 0.45], 0.4, t=0.2)
    back = kvm_from_dict(kvm_to_dict(s))
    assert back.n_min == -1 and back.rho0 == 0.4 and back.t == 0.2
    assert np.array_equal(back.rho, s.rho)


window_profiles = arrays(
    dtype=float,
    shape=st.integers(min_value=1, max_value=24),
    elements=st.floats(min_value=-0.2, max_value=0.2),
)


@given(prof=window_profiles, n_min=st.integers(-30, 30),
       left=st.integers(0, 9), right=st.integers(0, 9))
@settings(max_examples=40, deadline=None)
def test_pad_trim_preserve_the_sequence(prof, n_min, left, right):
    s = LatticeState(n_min, 0.5 + prof, np.zeros(len(prof)), 0.5, 0.0)
    out = trim(pad(s, left, right))
    ns = np.arange(n_min - 12, n_min + len(prof) + 12)
    a1, b1 = sample_at(s, ns)
    a2, b2 = sample_at(out, ns)
    assert np.array_equal(a1, a2)
    assert np.array_equal(b1, b2)


@given(prof=window_profiles, n_min=st.integers(-30, 30))
@settings(max_examples=40, deadline=None)
def test_reflect_twice_is_identity_on_samples(prof, n_min):
    s = LatticeState(n_min, 0.5 + prof, np.zeros(len(prof)), 0.5, 0.0)
    back = reflect(reflect(s))
    ns = np.arange(n_min - 5, n_min + len(prof) + 5)
    assert np.array_equal(sample_at(s, ns)[0], sample_at(back, ns)[0])
