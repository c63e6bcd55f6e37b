"""Tests for the within-day loading engines.

The kinematic-wave cases lean on textbook queueing identities: a uniform
release at twice capacity builds a triangular queue whose mean delay is
half the departure window, links in series add their free-flow times
when uncongested, and cumulative curves must conserve vehicles.
"""
import numpy as np
import pytest

from misinfo_dtd import loading
from misinfo_dtd.loading import LoadingProfile, compute_costs, load_newell
from misinfo_dtd.netio import Link, NetworkModel, two_link


def _mklink(lid, u, v, fft=60.0, cap=0.5):
    # length = 15 m/s * fft keeps min(fft, length/wave) = fft for dt checks
    return Link(id=lid, from_node=u, to_node=v, length=15.0 * fft,
                free_flow_time=fft, capacity=cap)


def single_link(fft=60.0, cap=0.5):
    net = NetworkModel(nodes=[1, 2], links=[_mklink(1, 1, 2, fft, cap)],
                       od_pairs=[(1, 2, 1.0)])
    from misinfo_dtd.netio import Path
    net.paths = [[Path(links=(1,), free_flow_time=fft)]]
    net.validate()
    return net


def chain(ffts, caps):
    from misinfo_dtd.netio import Path
    links = [_mklink(i + 1, i + 1, i + 2, fft, cap)
             for i, (fft, cap) in enumerate(zip(ffts, caps))]
    net = NetworkModel(nodes=list(range(1, len(links) + 2)), links=links,
                       od_pairs=[(1, len(links) + 1, 1.0)])
    net.paths = [[Path(links=tuple(a.id for a in links),
                       free_flow_time=sum(ffts))]]
    net.validate()
    return net


def profile(**kw):
    base = dict(engine="newell", time_step=5.0, departure_window=200.0,
                horizon=20_000.0)
    base.update(kw)
    return LoadingProfile(**base)


# ---------------------------------------------------------------------------
# affine + static engines
# ---------------------------------------------------------------------------

def test_affine_costs_exact():
    net = two_link()
    prof = LoadingProfile(engine="affine", affine_c0=1200.0, affine_b=600.0)
    costs = compute_costs(net, np.array([0.25, 0.75]), prof)
    assert costs.tolist() == [1200.0 + 150.0, 1200.0 + 450.0]


def test_static_volume_at_window_capacity_gives_bpr_factor():
    net = single_link(fft=60.0, cap=0.5)
    prof = LoadingProfile(engine="static", departure_window=200.0)
    # volume = cap * window => ratio 1 => fft * 1.15
    costs = compute_costs(net, np.array([100.0]), prof)
    assert costs[0] == pytest.approx(69.0)
    free = compute_costs(net, np.array([0.0]), prof)
    assert free[0] == pytest.approx(60.0)


def test_static_serial_path_sums_link_times():
    net = chain([60.0, 40.0], [0.5, 0.5])
    prof = LoadingProfile(engine="static", departure_window=200.0)
    costs = compute_costs(net, np.array([0.0]), prof)
    assert costs[0] == pytest.approx(100.0)


def test_tstt_accepts_flat_and_per_class_flows():
    costs = np.array([10.0, 20.0])
    assert loading.tstt(np.array([1.0, 2.0]), costs) == pytest.approx(50.0)
    per_class = np.array([[0.5, 1.0], [0.5, 1.0]])
    assert loading.tstt(per_class, costs) == pytest.approx(50.0)


# ---------------------------------------------------------------------------
# profile validation / dispatch guards
# ---------------------------------------------------------------------------

def test_profile_rejects_unknown_engine():
    with pytest.raises(ValueError, match="unknown engine"):
        LoadingProfile(engine="teleport").validate()


def test_profile_rejects_horizon_shorter_than_window():
    with pytest.raises(ValueError, match="horizon"):
        LoadingProfile(departure_window=3600.0, horizon=100.0).validate()


def test_profile_auto_horizon_is_four_windows():
    prof = LoadingProfile(departure_window=500.0, horizon=None)
    assert prof.effective_horizon() == pytest.approx(2000.0)


def test_profile_rejects_coarse_grid_for_newell():
    net = single_link(fft=60.0)
    with pytest.raises(ValueError, match="time_step"):
        LoadingProfile(engine="newell", time_step=61.0).validate(net)
    # exactly at the limit is fine
    LoadingProfile(engine="newell", time_step=60.0).validate(net)


def test_compute_costs_rejects_bad_flows():
    net = two_link()
    prof = LoadingProfile(engine="affine")
    with pytest.raises(ValueError):
        compute_costs(net, np.array([[1.0, 2.0]]), prof)
    with pytest.raises(ValueError):
        compute_costs(net, np.array([-1.0, 2.0]), prof)


# ---------------------------------------------------------------------------
# kinematic-wave engine
# ---------------------------------------------------------------------------

def test_newell_zero_demand_returns_free_flow():
    net = single_link(fft=60.0)
    costs = compute_costs(net, np.array([0.0]), profile())
    assert costs[0] == pytest.approx(60.0)


def test_newell_uncongested_cost_is_free_flow():
    net = single_link(fft=60.0, cap=0.5)
    # 20 vehicles over 200 s: rate 0.1 << capacity 0.5
    costs = compute_costs(net, np.array([20.0]), profile())
    assert costs[0] == pytest.approx(60.0, abs=2 * 5.0)
    assert costs[0] >= 60.0 - 1e-9


def test_newell_bottleneck_mean_delay_is_half_window():
    """Release at twice capacity for a window W: the queueing triangle
    gives mean delay W/2 on top of free-flow time."""
    window = 400.0
    net = single_link(fft=60.0, cap=0.5)
    demand = 2.0 * 0.5 * window  # rate = 2 x capacity
    costs = compute_costs(net, np.array([demand]),
                          profile(departure_window=window))
    assert costs[0] == pytest.approx(60.0 + window / 2.0, abs=2 * 5.0)


def test_newell_bottleneck_delay_scales_with_overload():
    """Rate r = k*Q over window W drains in kW; mean delay (k-1)W/2."""
    window = 300.0
    net = single_link(fft=60.0, cap=0.5)
    for k in (1.5, 3.0):
        demand = k * 0.5 * window
        costs = compute_costs(net, np.array([demand]),
                              profile(departure_window=window))
        assert costs[0] == pytest.approx(60.0 + (k - 1.0) * window / 2.0,
                                         abs=2 * 5.0)


def test_newell_serial_free_flow_times_add():
    net = chain([60.0, 45.0, 30.0], [0.5, 0.5, 0.5])
    costs = compute_costs(net, np.array([10.0]), profile())
    assert costs[0] == pytest.approx(135.0, abs=2 * 5.0)


def test_newell_serial_bottleneck_sets_queue():
    """A slow second link backs the queue up; delay matches the narrowest
    capacity, not the first link's."""
    window = 300.0
    net = chain([60.0, 60.0], [1.0, 0.25])
    demand = 0.5 * window  # rate 0.5 = 2 x the 0.25 bottleneck
    costs = compute_costs(net, np.array([demand]),
                          profile(departure_window=window))
    assert costs[0] == pytest.approx(120.0 + window / 2.0, abs=3 * 5.0)


def test_newell_congestion_is_monotone_in_demand():
    window = 200.0
    net = single_link(fft=60.0, cap=0.5)
    prev = 0.0
    for demand in (10.0, 100.0, 200.0, 400.0):
        cost = compute_costs(net, np.array([demand]),
                             profile(departure_window=window))[0]
        assert cost >= prev - 1e-9
        prev = cost


def test_newell_raises_when_horizon_too_short():
    net = single_link(fft=60.0, cap=0.5)
    with pytest.raises(RuntimeError, match="failed to drain"):
        compute_costs(net, np.array([400.0]),
                      profile(departure_window=200.0, horizon=250.0))


def test_newell_matches_static_when_uncongested():
    net = chain([60.0, 40.0], [0.5, 0.5])
    flows = np.array([8.0])
    dynamic = compute_costs(net, flows, profile())
    static = compute_costs(net, flows,
                           LoadingProfile(engine="static", departure_window=200.0))
    assert dynamic[0] == pytest.approx(static[0], rel=0.05)


def test_newell_merge_shares_bottleneck():
    """Two approaches feeding one bottleneck both see delay, and the
    combined throughput is capped by the shared link."""
    from misinfo_dtd.netio import Path
    links = [_mklink(1, 1, 3, 60.0, 1.0), _mklink(2, 2, 3, 60.0, 1.0),
             _mklink(3, 3, 4, 60.0, 0.25)]
    net = NetworkModel(nodes=[1, 2, 3, 4], links=links,
                       od_pairs=[(1, 4, 1.0), (2, 4, 1.0)])
    net.paths = [[Path(links=(1, 3), free_flow_time=120.0)],
                 [Path(links=(2, 3), free_flow_time=120.0)]]
    net.validate()
    window = 200.0
    flows = np.array([0.25 * window, 0.25 * window])  # joint rate 2x cap
    diag = {}
    costs = load_newell(net, flows, profile(departure_window=window), diag)
    # symmetric approaches, symmetric delays
    assert costs[0] == pytest.approx(costs[1], rel=1e-6)
    assert costs[0] == pytest.approx(120.0 + window / 2.0, abs=3 * 5.0)
    # bottleneck discharge never beats capacity per step
    arr, dep = diag["link_curves"][3]
    steps = np.diff(dep)
    assert np.all(steps <= 0.25 * diag["time_step"] + 1e-9)


def test_newell_spillback_delays_sibling_route():
    """Hold-back diverge: when one branch jams, the shared upstream link
    holds back vehicles bound for the free branch too."""
    from misinfo_dtd.netio import Path
    links = [_mklink(1, 1, 2, 60.0, 1.0),
             _mklink(2, 2, 3, 20.0, 0.1),   # jammed branch, tiny storage
             _mklink(3, 2, 4, 60.0, 1.0)]   # free branch
    net = NetworkModel(nodes=[1, 2, 3, 4], links=links,
                       od_pairs=[(1, 3, 1.0), (1, 4, 1.0)])
    net.paths = [[Path(links=(1, 2), free_flow_time=80.0)],
                 [Path(links=(1, 3), free_flow_time=120.0)]]
    net.validate()
    window = 200.0
    jam = np.array([0.2 * window, 0.2 * window])  # branch 2 at 2x its cap
    alone = np.array([0.0, 0.2 * window])
    both = compute_costs(net, jam, profile(departure_window=window))
    solo = compute_costs(net, alone, profile(departure_window=window))
    assert both[1] > solo[1] + 10.0  # free-branch traffic caught in spillback


# ---------------------------------------------------------------------------
# conservation / FIFO on randomized instances
# ---------------------------------------------------------------------------

def _random_instance(rng):
    """Small random parallel/serial/merge/diverge net with random flows."""
    from misinfo_dtd.netio import Path
    kind = rng.integers(0, 4)
    window = 200.0
    if kind == 0:  # parallel chains
        n_routes = int(rng.integers(1, 4))
        links, paths, od_pairs = [], [], []
        node = 2
        for _ in range(n_routes):
            n_links = int(rng.integers(1, 4))
            seq = []
            at = 1
            for j in range(n_links):
                nxt = node if j < n_links - 1 else 1_000  # shared sink id
                fft = float(rng.uniform(20.0, 80.0))
                cap = float(rng.uniform(0.1, 1.0))
                links.append(_mklink(len(links) + 1, at, nxt, fft, cap))
                seq.append(links[-1].id)
                at = nxt
                node += 1
            paths.append([Path(links=tuple(seq),
                               free_flow_time=sum(links[l - 1].free_flow_time
                                                  for l in seq))])
            od_pairs.append((1, 1_000, 1.0))
        nodes = sorted({a.from_node for a in links} | {a.to_node for a in links})
        net = NetworkModel(nodes=nodes, links=links, od_pairs=od_pairs, paths=paths)
    elif kind == 1:  # two-link parallel benchmark shape
        net = two_link(capacity=float(rng.uniform(0.2, 1.0)))
        net = NetworkModel(nodes=net.nodes, links=net.links,
                           od_pairs=net.od_pairs, paths=net.paths)
    elif kind == 2:  # merge
        caps = [float(rng.uniform(0.3, 1.0)) for _ in range(2)]
        bott = float(rng.uniform(0.1, 0.6))
        links = [_mklink(1, 1, 3, 40.0, caps[0]), _mklink(2, 2, 3, 40.0, caps[1]),
                 _mklink(3, 3, 4, 40.0, bott)]
        net = NetworkModel(nodes=[1, 2, 3, 4], links=links,
                           od_pairs=[(1, 4, 1.0), (2, 4, 1.0)],
                           paths=[[Path(links=(1, 3), free_flow_time=80.0)],
                                  [Path(links=(2, 3), free_flow_time=80.0)]])
    else:  # diverge
        caps = [float(rng.uniform(0.1, 0.8)) for _ in range(2)]
        links = [_mklink(1, 1, 2, 40.0, 1.0),
                 _mklink(2, 2, 3, 40.0, caps[0]), _mklink(3, 2, 4, 40.0, caps[1])]
        net = NetworkModel(nodes=[1, 2, 3, 4], links=links,
                           od_pairs=[(1, 3, 1.0), (1, 4, 1.0)],
                           paths=[[Path(links=(1, 2), free_flow_time=80.0)],
                                  [Path(links=(1, 3), free_flow_time=80.0)]])
    net.validate()
    n_paths = len(net.flat_paths())
    cap_scale = min(a.capacity for a in net.links) * window
    flows = rng.uniform(0.0, 1.5 * cap_scale, size=n_paths)
    flows[rng.random(n_paths) < 0.2] = 0.0  # exercise zero-flow paths
    prof = profile(time_step=5.0, departure_window=window, horizon=100_000.0)
    return net, flows, prof


def assert_conserves_and_fifo(net, flows, prof):
    diag = {}
    costs = load_newell(net, flows, prof, diag)
    total = flows.sum()
    scale = max(total, 1.0)
    # every scheduled vehicle got released and reached its destination
    assert np.allclose(diag["released"], flows, atol=1e-6 * scale)
    for r, curve in diag["exit_curves"].items():
        assert curve[-1] == pytest.approx(flows[r], abs=1e-6 * scale)
        assert np.all(np.diff(curve) >= -1e-12)  # FIFO exit curve
    # links drain and never emit more than arrived
    for lid, (arr, dep) in diag["link_curves"].items():
        arr, dep = np.asarray(arr), np.asarray(dep)
        assert np.all(np.diff(arr) >= -1e-12)
        assert np.all(np.diff(dep) >= -1e-12)
        assert np.all(dep <= arr + 1e-9 * scale)
        assert dep[-1] == pytest.approx(arr[-1], abs=1e-6 * scale)
    # exits stay on the paths that were actually loaded
    for r, f in enumerate(flows):
        if f > 0:
            assert costs[r] >= net.flat_paths()[r].free_flow_time - 1e-6


def test_newell_conserves_vehicles_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(25):
        net, flows, prof = _random_instance(rng)
        assert_conserves_and_fifo(net, flows, prof)


def test_newell_refining_grid_changes_costs_little():
    window = 300.0
    net = single_link(fft=60.0, cap=0.5)
    demand = np.array([1.6 * 0.5 * window])
    coarse = compute_costs(net, demand, profile(departure_window=window,
                                                time_step=10.0))
    fine = compute_costs(net, demand, profile(departure_window=window,
                                              time_step=2.5))
    assert coarse[0] == pytest.approx(fine[0], rel=0.05)
