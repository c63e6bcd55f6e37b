"""Within-day traffic loading: turns daily path flows into path travel costs.

Three engines share one call signature:

* ``newell``  - kinematic-wave propagation on cumulative curves (the
  link-transmission scheme), FIFO links, demand-proportional merges and
  a hold-back diverge, per-path costs from scheduled-departure vs.
  network-exit cumulative curves. Captures queuing and spillback.
* ``static``  - volume-delay per link (BPR-style polynomial), costs are
  sums of link times along each path. No interactions in time.
* ``affine``  - c_r = c0 + b * f_r on each path independently; the
  two-route benchmark the closed-form calculators assume.

Daily demand is released uniformly over ``departure_window`` seconds.
All engines report seconds per traveler on each path.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .netio import NetworkModel

ENGINES = ("newell", "static", "affine")


@dataclass(frozen=True)
class LoadingProfile:
    engine: str = "newell"
    time_step: float = 5.0            # s, cumulative-curve grid
    departure_window: float = 3600.0  # s, uniform release period
    horizon: float | None = None      # s, drain deadline; None -> 4 x window
    departure_shape: str = "uniform"
    affine_c0: float = 1200.0         # s, affine engine intercept
    affine_b: float = 600.0           # s per vehicle, affine engine slope

    def effective_horizon(self) -> float:
        return 4.0 * self.departure_window if self.horizon is None else self.horizon

    def validate(self, net: NetworkModel | None = None) -> None:
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}; expected one of {ENGINES}")
        if self.departure_shape != "uniform":
            raise ValueError("only the uniform departure profile is supported")
        if self.time_step <= 0:
            raise ValueError("time_step must be positive")
        if self.departure_window <= 0:
            raise ValueError("departure window must be positive")
        if self.effective_horizon() < self.departure_window:
            raise ValueError("horizon shorter than the departure window")
        if self.affine_c0 <= 0 or self.affine_b < 0:
            raise ValueError("affine engine needs c0 > 0 and b >= 0")
        if net is not None and self.engine == "newell":
            for a in net.links:
                wave_time = a.length / a.backward_wave_speed
                limit = min(a.free_flow_time, wave_time)
                if self.time_step > limit * (1.0 + 1e-12):
                    raise ValueError(
                        f"time_step={self.time_step} exceeds link {a.id} limit "
                        f"{limit:.6g}s (need <= min(free-flow time, length/wave))")


def compute_costs(net: NetworkModel, path_flows: np.ndarray,
                  profile: LoadingProfile) -> np.ndarray:
    """Per-path travel costs (s) for total daily path flows (vehicles)."""
    path_flows = np.asarray(path_flows, dtype=float)
    if path_flows.ndim != 1 or path_flows.shape[0] != len(net.flat_paths()):
        raise ValueError("path_flows must be 1-D over the flattened path set")
    if np.any(path_flows < 0):
        raise ValueError("negative path flow")
    if profile.engine == "affine":
        return load_affine(path_flows, profile.affine_c0, profile.affine_b)
    if profile.engine == "static":
        return load_static(net, path_flows, profile)
    return load_newell(net, path_flows, profile)


def tstt(path_flows: np.ndarray, costs: np.ndarray) -> float:
    """Total system travel time: flows dotted with costs (veh * s).

    Accepts per-class (K, P) or aggregate (P,) flows.
    """
    return float(np.sum(np.asarray(path_flows) * np.asarray(costs)))


def load_affine(path_flows: np.ndarray, c0: float, b: float) -> np.ndarray:
    return c0 + b * path_flows


def load_static(net: NetworkModel, path_flows: np.ndarray,
                profile: LoadingProfile) -> np.ndarray:
    """Polynomial volume-delay: t_a = fft * (1 + 0.15 (v_a / (Q_a W))^4)."""
    paths = net.flat_paths()
    volume = {a.id: 0.0 for a in net.links}
    for r, p in enumerate(paths):
        for lid in p.links:
            volume[lid] += path_flows[r]
    window = profile.departure_window
    link_time = {}
    for a in net.links:
        ratio = volume[a.id] / (a.capacity * window)
        link_time[a.id] = a.free_flow_time * (1.0 + 0.15 * ratio ** 4)
    return np.asarray([sum(link_time[lid] for lid in p.links) for p in paths])


# ---------------------------------------------------------------------------
# Newell / link-transmission engine
# ---------------------------------------------------------------------------

def _interp_grid(curve: list, tau: float, dt: float) -> float:
    """Linear interpolation of a grid-sampled cumulative curve at time tau."""
    if tau <= 0.0:
        return curve[0]
    pos = tau / dt
    i = int(pos)
    if i >= len(curve) - 1:
        return curve[-1]
    frac = pos - i
    return curve[i] + frac * (curve[i + 1] - curve[i])


def _invert(totals: list, component: list, value: float) -> float:
    """Component count among the first ``value`` vehicles of a FIFO stream.

    ``totals`` is the cumulative total-entry curve, ``component`` the
    matching cumulative entries of one path; both share breakpoints.
    """
    j = bisect_left(totals, value)
    if j <= 0:
        return component[0]
    if j >= len(totals):
        return component[-1]
    span = totals[j] - totals[j - 1]
    if span <= 0.0:
        return component[j]
    frac = (value - totals[j - 1]) / span
    return component[j - 1] + frac * (component[j] - component[j - 1])


class _LinkState:
    """Cumulative curves for one link plus per-path entry composition."""

    __slots__ = ("link", "arr", "dep", "comp", "routes")

    def __init__(self, link, routes):
        self.link = link
        self.routes = routes              # [(flat path idx, next link id | None)]
        self.arr = [0.0]
        self.dep = [0.0]
        self.comp = {r: [0.0] for r, _ in routes}


_DRAIN_TOL = 1e-9


def load_newell(net: NetworkModel, path_flows: np.ndarray,
                profile: LoadingProfile, diagnostics: dict | None = None) -> np.ndarray:
    """Propagate the day's departures through the network, return path costs.

    Vehicles for path r are scheduled uniformly over the departure
    window and queue at their origin until the first link can receive
    them. Each step computes link sending/receiving from time-shifted
    cumulative curves, resolves nodes in a single pass (receiving is
    split over competing approaches in proportion to demand; a blocked
    branch holds back a link's whole outflow), and advances the curves.
    The cost of a path is the area between its scheduled-departure curve
    and its network-exit curve divided by its flow, so source queuing
    counts toward cost. Runs until the network drains.

    Pass a dict as ``diagnostics`` to get the raw cumulative curves back
    (per-link arrival/departure, per-path exit) for conservation checks.
    """
    profile.validate(net)
    paths = net.flat_paths()
    n_paths = len(paths)
    flows = np.asarray(path_flows, dtype=float)
    dt = profile.time_step
    window = profile.departure_window

    # static routing tables -------------------------------------------------
    through = {a.id: [] for a in net.links}
    for r, p in enumerate(paths):
        if flows[r] <= 0.0:
            continue
        for j, lid in enumerate(p.links):
            nxt = p.links[j + 1] if j + 1 < len(p.links) else None
            through[lid].append((r, nxt))
    states = {a.id: _LinkState(a, through[a.id])
              for a in net.links if through[a.id]}

    sources = {}          # first link id -> [flat path idx]
    for r, p in enumerate(paths):
        if flows[r] > 0.0:
            sources.setdefault(p.links[0], []).append(r)
    released = np.zeros(n_paths)
    exits = {r: [0.0] for r in range(n_paths) if flows[r] > 0.0}

    total_demand = float(flows.sum())
    if total_demand <= 0.0:
        if diagnostics is not None:
            diagnostics["link_curves"] = {}
            diagnostics["exit_curves"] = {}
            diagnostics["released"] = released
            diagnostics["time_step"] = dt
        return np.asarray([p.free_flow_time for p in paths])

    horizon = profile.effective_horizon()
    n_steps = int(np.ceil(horizon / dt))

    arrived = 0.0
    for step in range(n_steps):
        t1 = (step + 1) * dt

        # link sending + head-of-queue composition
        send = {}
        head = {}
        for lid, st in states.items():
            a = st.link
            lag_arr = _interp_grid(st.arr, t1 - a.free_flow_time, dt)
            s = min(lag_arr - st.dep[-1], a.capacity * dt)
            if s <= _DRAIN_TOL * dt:
                continue
            lo = st.dep[-1]
            counts = {}
            for r, nxt in st.routes:
                c = (_invert(st.arr, st.comp[r], lo + s)
                     - _invert(st.arr, st.comp[r], lo))
                counts[r] = max(c, 0.0)
            send[lid] = s
            head[lid] = counts

        # source backlogs (vehicles scheduled by end of step, not yet released)
        src_demand = {}
        for lid, rs in sources.items():
            sched_frac = min(t1 / window, 1.0)
            pend = {r: flows[r] * sched_frac - released[r] for r in rs}
            tot = sum(pend.values())
            if tot > _DRAIN_TOL:
                src_demand[lid] = pend

        # receiving and merge factors per link
        factor = {}
        inflow_demand = {lid: sum(src_demand.get(lid, {}).values()) for lid in states}
        for lid in send:
            for r, nxt in states[lid].routes:
                if nxt is not None and r in head[lid]:
                    inflow_demand[nxt] = inflow_demand.get(nxt, 0.0) + head[lid][r]
        for lid, st in states.items():
            dem = inflow_demand.get(lid, 0.0)
            if dem <= _DRAIN_TOL:
                factor[lid] = 1.0
                continue
            a = st.link
            lag_dep = _interp_grid(st.dep, t1 - a.length / a.backward_wave_speed, dt)
            recv = min(a.capacity * dt, lag_dep + a.jam_storage - st.arr[-1])
            recv = max(recv, 0.0)
            factor[lid] = 1.0 if dem <= recv else recv / dem

        # move head vehicles (hold-back diverge: one factor per sending link)
        inflow = {lid: 0.0 for lid in states}
        comp_in = {lid: {} for lid in states}
        exit_in = {r: 0.0 for r in exits}
        for lid, counts in head.items():
            st = states[lid]
            branch_factors = [factor[nxt] for r, nxt in st.routes
                              if nxt is not None and counts.get(r, 0.0) > 0.0]
            psi = min(branch_factors) if branch_factors else 1.0
            moved_total = 0.0
            for r, nxt in st.routes:
                c = counts.get(r, 0.0)
                if c <= 0.0:
                    continue
                moved = psi * c
                moved_total += moved
                if nxt is None:
                    exit_in[r] += moved
                else:
                    inflow[nxt] += moved
                    comp_in[nxt][r] = comp_in[nxt].get(r, 0.0) + moved
            st.dep.append(st.dep[-1] + moved_total)
        for lid in states:
            if lid not in head:
                states[lid].dep.append(states[lid].dep[-1])

        # release from sources (per-path share of the first link's factor)
        for lid, pend in src_demand.items():
            f = factor[lid]
            for r, backlog in pend.items():
                if backlog <= 0.0:
                    continue
                moved = f * backlog
                released[r] += moved
                inflow[lid] += moved
                comp_in[lid][r] = comp_in[lid].get(r, 0.0) + moved

        # advance arrival curves and per-path exit curves
        for lid, st in states.items():
            st.arr.append(st.arr[-1] + inflow[lid])
            for r, _ in st.routes:
                st.comp[r].append(st.comp[r][-1] + comp_in[lid].get(r, 0.0))
        for r in exits:
            exits[r].append(exits[r][-1] + exit_in[r])
            arrived += exit_in[r]

        if step * dt >= window and total_demand - arrived <= _DRAIN_TOL * max(total_demand, 1.0):
            break
    else:
        raise RuntimeError(
            f"network failed to drain within the {horizon:.0f}s horizon; "
            "increase LoadingProfile.horizon (vehicles still queued)")

    # costs: area between scheduled-departure and exit cumulative curves
    costs = np.empty(n_paths)
    for r, p in enumerate(paths):
        if flows[r] <= 0.0:
            costs[r] = p.free_flow_time
            continue
        curve = exits[r]
        gap_prev = 0.0
        area = 0.0
        for i in range(1, len(curve)):
            sched = flows[r] * min(i * dt / window, 1.0)
            gap = sched - curve[i]
            area += 0.5 * (gap_prev + gap) * dt
            gap_prev = gap
        costs[r] = area / flows[r]

    if diagnostics is not None:
        diagnostics["link_curves"] = {lid: (list(st.arr), list(st.dep))
                                      for lid, st in states.items()}
        diagnostics["exit_curves"] = {r: list(c) for r, c in exits.items()}
        diagnostics["released"] = released.copy()
        diagnostics["time_step"] = dt
    return costs
