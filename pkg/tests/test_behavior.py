"""Tests for perceived-cost learning and bounded-rational logit choice."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misinfo_dtd import behavior
from misinfo_dtd.behavior import ClassProfile


STARTS = np.array([0])  # single OD, all paths contiguous


def test_update_perceived_by_hand():
    # inner blend: 0.75*600 + 0.25*700 = 625; then 0.5*500 + 0.5*625 = 562.5
    out = behavior.update_perceived(np.array([500.0]), np.array([600.0]),
                                    np.array([700.0]), 0.25, memory=0.5)
    assert np.allclose(out, [562.5])


def test_update_perceived_zero_reliance_ignores_guidance():
    prev = np.array([100.0, 200.0])
    c = np.array([150.0, 150.0])
    bogus = np.array([0.0, 1e9])
    out = behavior.update_perceived(prev, c, bogus, 0.0, memory=0.7)
    assert np.allclose(out, 0.7 * prev + 0.3 * c)


def test_update_perceived_batched_matches_per_class():
    rng = np.random.default_rng(7)
    prev = rng.uniform(100, 200, size=(3, 4))
    c = rng.uniform(100, 200, size=4)
    guide = c * 0.9
    lam = np.array([0.2, 0.5, 0.9])
    batched = behavior.update_perceived(prev, c, guide, lam, memory=0.7)
    for k in range(3):
        single = behavior.update_perceived(prev[k], c, guide, lam[k], memory=0.7)
        assert np.array_equal(batched[k], single)


def test_admissible_band_is_inclusive():
    perceived = np.array([100.0, 150.0, 151.0])
    mask = behavior.admissible_mask(perceived, 50.0, STARTS)
    assert mask.tolist() == [True, True, False]


def test_admissible_always_contains_best_path():
    perceived = np.array([100.0, 150.0])
    mask = behavior.admissible_mask(perceived, 0.0, STARTS)
    assert mask.tolist() == [True, False]


def test_admissible_band_respects_od_segments():
    perceived = np.array([100.0, 120.0, 10.0, 200.0])
    starts = np.array([0, 2])
    mask = behavior.admissible_mask(perceived, 30.0, starts)
    # second OD's best (10) must not shadow the first OD's paths
    assert mask.tolist() == [True, True, True, False]


def test_mnl_probabilities_by_hand():
    perceived = np.array([1000.0, 1100.0])
    mask = np.array([True, True])
    p = behavior.mnl_probabilities(perceived, mask, 0.008, STARTS)
    # weights 1 and exp(-0.8); p1 = 1/(1+exp(-0.8))
    w = np.exp(-0.8)
    assert np.allclose(p, [1.0 / (1.0 + w), w / (1.0 + w)])
    assert p[0] == pytest.approx(0.6900, abs=5e-4)


def test_mnl_masked_path_gets_zero_probability():
    perceived = np.array([1000.0, 1100.0])
    mask = behavior.admissible_mask(perceived, 50.0, STARTS)
    p = behavior.mnl_probabilities(perceived, mask, 0.008, STARTS)
    assert p.tolist() == [1.0, 0.0]


def test_mnl_theta_zero_is_uniform_over_admissible():
    perceived = np.array([100.0, 140.0, 900.0])
    mask = behavior.admissible_mask(perceived, 50.0, STARTS)
    p = behavior.mnl_probabilities(perceived, mask, 0.0, STARTS)
    assert np.allclose(p, [0.5, 0.5, 0.0])


def test_mnl_shift_invariance_is_exact_for_exact_shifts():
    """Adding a float-exact constant to every cost of an OD leaves the
    probabilities bit-identical, because the per-OD min is subtracted
    before exponentiation."""
    perceived = np.array([128.0, 160.0, 192.0])
    mask = np.ones(3, dtype=bool)
    base = behavior.mnl_probabilities(perceived, mask, 0.01, STARTS)
    shifted = behavior.mnl_probabilities(perceived + 512.0, mask, 0.01, STARTS)
    assert np.array_equal(base, shifted)


def test_mnl_survives_extreme_costs():
    perceived = np.array([1e6, 2e6])
    mask = np.ones(2, dtype=bool)
    p = behavior.mnl_probabilities(perceived, mask, 1.0, STARTS)
    assert np.all(np.isfinite(p))
    assert p.sum() == pytest.approx(1.0)


def test_next_day_flows_splits_demand_by_share_and_probability():
    prob = np.array([[0.25, 0.75], [0.5, 0.5]])
    flows = behavior.next_day_flows(prob, np.array([10.0]),
                                    np.array([0.4, 0.6]), STARTS)
    assert np.allclose(flows, [[1.0, 3.0], [3.0, 3.0]])


def test_class_profile_validation():
    good = ClassProfile("cav", 0.1, 0.0, 0.004, 0.9, 0.80, 0.16, 360.0)
    good.validate()
    bad = ClassProfile("x", 0.1, 0.0, 0.004, 0.9, 0.10, 0.16, 360.0)
    with pytest.raises(ValueError):
        bad.validate()  # w_f < w_s
    with pytest.raises(ValueError):
        ClassProfile("x", 1.2, 0.0, 0.004, 0.9, 0.8, 0.16, 360.0).validate()
    with pytest.raises(ValueError):
        ClassProfile("x", 0.1, 0.0, 0.004, 0.9, 0.8, 0.16, 0.0).validate()


@st.composite
def segmented_costs(draw):
    n_od = draw(st.integers(1, 4))
    counts = [draw(st.integers(1, 5)) for _ in range(n_od)]
    starts = np.cumsum([0] + counts[:-1])
    costs = np.array([draw(st.floats(10.0, 1e4)) for _ in range(sum(counts))])
    return starts, costs


@given(data=segmented_costs(), delta=st.floats(0.0, 500.0),
       theta=st.floats(0.0, 0.05))
@settings(max_examples=150, deadline=None)
def test_probabilities_sum_to_one_per_od(data, delta, theta):
    starts, costs = data
    mask = behavior.admissible_mask(costs, delta, starts)
    p = behavior.mnl_probabilities(costs, mask, theta, starts)
    sums = np.add.reduceat(p, starts)
    assert np.allclose(sums, 1.0, atol=1e-12)
    assert np.all(p >= 0.0)
    assert np.all(p[~mask] == 0.0)


@given(data=segmented_costs(), delta1=st.floats(0.0, 200.0),
       widen=st.floats(0.0, 300.0))
@settings(max_examples=150, deadline=None)
def test_wider_band_never_shrinks_admissible_set(data, delta1, widen):
    starts, costs = data
    narrow = behavior.admissible_mask(costs, delta1, starts)
    wide = behavior.admissible_mask(costs, delta1 + widen, starts)
    assert np.all(wide[narrow])


@given(data=segmented_costs(),
       shares=st.lists(st.floats(0.05, 1.0), min_size=2, max_size=3),
       demand=st.floats(0.1, 1e4))
@settings(max_examples=150, deadline=None)
def test_flow_assignment_conserves_demand(data, shares, demand):
    starts, costs = data
    shares = np.asarray(shares) / np.sum(shares)
    k = len(shares)
    mask = behavior.admissible_mask(np.tile(costs, (k, 1)),
                                    np.full(k, 30.0), starts)
    prob = behavior.mnl_probabilities(np.tile(costs, (k, 1)), mask,
                                      np.full(k, 0.01), starts)
    q = np.full(len(starts), demand)
    flows = behavior.next_day_flows(prob, q, shares, starts)
    per_od_class = np.add.reduceat(flows, starts, axis=1)
    expected = shares[:, None] * q[None, :]
    assert np.allclose(per_od_class, expected, rtol=1e-12, atol=1e-12)
