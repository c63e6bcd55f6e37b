"""Tests for the Beta-evidence trust update."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misinfo_dtd import trust
from misinfo_dtd.theory import recovery_closed_form


def test_initial_state_sits_at_accurate_attractor():
    st0 = trust.initial_state(np.array([0.16, 0.10]), forget=0.95)
    # alpha0 = w_s / (1 - forget): 0.16/0.05 = 3.2, 0.10/0.05 = 2.0
    assert np.allclose(st0.alpha, [3.2, 2.0])
    assert np.all(st0.beta == trust.BETA_SEED)
    t = st0.trust()
    assert np.all(t > 0.999)
    assert np.all(t < 1.0)


def test_update_arithmetic_by_hand():
    state = trust.TrustState(alpha=np.array([2.0]), beta=np.array([0.5]))
    # failure: alpha' = 0.9*2 = 1.8, beta' = 0.9*0.5 + 0.5 = 0.95
    nxt = trust.update_evidence(state, xi=0.0, forget=0.9, w_s=0.1, w_f=0.5)
    assert np.allclose(nxt.alpha, 1.8)
    assert np.allclose(nxt.beta, 0.95)
    assert np.allclose(nxt.trust(), 1.8 / 2.75)
    # success: alpha' = 1.8 + 0.1 = 1.9, beta' = 0.9*0.5 = 0.45
    nxt = trust.update_evidence(state, xi=1.0, forget=0.9, w_s=0.1, w_f=0.5)
    assert np.allclose(nxt.alpha, 1.9)
    assert np.allclose(nxt.beta, 0.45)
    assert np.allclose(nxt.trust(), 1.9 / 2.35)


def test_guidance_error_is_flow_weighted_mean_gap():
    flows = np.array([[2.0, 1.0]])
    guide = np.array([10.0, 40.0])
    exp = np.array([20.0, 30.0])
    # (2*10 + 1*10) / 3 = 10
    e = trust.guidance_error(flows, guide, exp, np.array([3.0]))
    assert np.allclose(e, [10.0])


def test_guidance_error_rejects_zero_demand():
    with pytest.raises(ValueError):
        trust.guidance_error(np.ones((1, 2)), np.ones(2), np.ones(2), np.array([0.0]))


def test_classify_tolerance_boundary_counts_as_accurate():
    assert trust.classify(360.0, 360.0) == 1.0
    assert trust.classify(360.0000001, 360.0) == 0.0
    assert trust.classify(0.0, 360.0) == 1.0


def test_failure_streak_drives_trust_to_zero():
    state = trust.initial_state(np.array([0.16]), forget=0.95)
    for _ in range(400):
        state = trust.update_evidence(state, 0.0, 0.95, 0.16, 0.8)
    # attractor under pure failure: alpha -> 0, beta -> w_f/(1-forget)
    assert state.trust()[0] < 1e-6
    assert np.allclose(state.beta, 0.8 / 0.05, rtol=1e-6)


def test_success_streak_rebuilds_trust_to_one():
    state = trust.TrustState(alpha=np.array([0.01]), beta=np.array([5.0]))
    for _ in range(600):
        state = trust.update_evidence(state, 1.0, 0.95, 0.16, 0.8)
    assert state.trust()[0] > 1.0 - 1e-6


def test_erosion_is_faster_than_recovery():
    """One failure from the attractor loses more trust than one success
    (applied at the resulting state) regains; w_f > w_s breaks symmetry."""
    state = trust.initial_state(np.array([0.16]), forget=0.95)
    t0 = state.trust()[0]
    down = trust.update_evidence(state, 0.0, 0.95, 0.16, 0.8)
    up = trust.update_evidence(down, 1.0, 0.95, 0.16, 0.8)
    assert (t0 - down.trust()[0]) > (up.trust()[0] - down.trust()[0])


def test_success_streak_matches_closed_form():
    state = trust.TrustState(alpha=np.array([0.4]), beta=np.array([2.5]))
    for n in range(1, 60):
        state = trust.update_evidence(state, 1.0, 0.95, 0.16, 0.8)
        a, b, t = recovery_closed_form(0.4, 2.5, 0.16, 0.95, n)
        assert state.alpha[0] == pytest.approx(a, rel=1e-12)
        assert state.beta[0] == pytest.approx(b, rel=1e-12)
        assert state.trust()[0] == pytest.approx(t, rel=1e-12)


def test_reliance_scales_cap_by_trust():
    lam = trust.reliance(np.array([0.5, 1.0]), np.array([0.9, 0.3]))
    assert np.allclose(lam, [0.45, 0.3])


@st.composite
def evidence_states(draw):
    alpha = draw(st.floats(1e-6, 50.0, allow_nan=False))
    beta = draw(st.floats(1e-6, 50.0, allow_nan=False))
    return trust.TrustState(alpha=np.array([alpha]), beta=np.array([beta]))


@given(state=evidence_states(),
       xi=st.sampled_from([0.0, 1.0]),
       forget=st.floats(0.5, 0.999),
       w_s=st.floats(0.01, 1.0),
       ratio=st.floats(1.0, 10.0))
@settings(max_examples=200, deadline=None)
def test_trust_stays_in_unit_interval(state, xi, forget, w_s, ratio):
    nxt = trust.update_evidence(state, xi, forget, w_s, w_s * ratio)
    assert 0.0 <= nxt.trust()[0] <= 1.0
    assert nxt.alpha[0] >= 0.0 and nxt.beta[0] >= 0.0


@given(state=evidence_states(), forget=st.floats(0.5, 0.999),
       w_s=st.floats(0.01, 1.0), ratio=st.floats(1.0, 10.0))
@settings(max_examples=200, deadline=None)
def test_failure_strictly_lowers_trust(state, forget, w_s, ratio):
    nxt = trust.update_evidence(state, 0.0, forget, w_s, w_s * ratio)
    assert nxt.trust()[0] < state.trust()[0]


@given(state=evidence_states(), forget=st.floats(0.5, 0.999),
       w_s=st.floats(0.01, 1.0), ratio=st.floats(1.0, 10.0))
@settings(max_examples=200, deadline=None)
def test_success_strictly_raises_trust(state, forget, w_s, ratio):
    nxt = trust.update_evidence(state, 1.0, forget, w_s, w_s * ratio)
    assert nxt.trust()[0] > state.trust()[0]
