"""Day-to-day scenario loop.

Each simulated day executes, in this order: load the current flows to
get experienced costs, form the (possibly manipulated) guidance signal,
score guidance accuracy and update per-class trust evidence, refresh
reliance, blend perceived costs, and finally compute the next day's
flows by bounded-rational logit choice. Trust is updated from the same
day's error *before* the perceived-cost blend, so the reliance weight
applied to today's signal already reflects today's evidence.

There is no sampling anywhere; a config determines its RunLog exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import behavior, loading, trust
from .attack import AttackSpec, guidance_signal, path_flags
from .behavior import ClassProfile
from .loading import LoadingProfile
from .metrics import rolling_mean
from .netio import NetworkModel

TRUST_MODES = ("dynamic", "fixed")


@dataclass
class ScenarioConfig:
    net: NetworkModel
    classes: list
    attack: AttackSpec
    loading: LoadingProfile = field(default_factory=LoadingProfile)
    memory: float = 0.7          # day-to-day carryover of perceived costs
    forget: float = 0.95         # evidence forgetting factor
    horizon_days: int = 200
    trust_mode: str = "dynamic"
    smoothing_window: int = 6
    seed: int = 0                # only random target selection consumes this

    def validate(self) -> None:
        if not 0.0 < self.memory < 1.0:
            raise ValueError("memory factor must lie in (0,1)")
        if not 0.0 < self.forget < 1.0:
            raise ValueError("forgetting factor must lie in (0,1)")
        if self.horizon_days < 1:
            raise ValueError("horizon_days must be positive")
        if self.horizon_days < self.attack.day_end:
            raise ValueError("horizon_days must cover the attack window")
        if self.trust_mode not in TRUST_MODES:
            raise ValueError(f"trust_mode must be one of {TRUST_MODES}")
        if self.smoothing_window < 1:
            raise ValueError("smoothing_window must be at least 1")
        if not self.classes:
            raise ValueError("at least one traveler class is required")
        names = [p.name for p in self.classes]
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")
        total_share = sum(p.share for p in self.classes)
        if abs(total_share - 1.0) > 1e-9:
            raise ValueError(f"class shares sum to {total_share}, expected 1")
        for p in self.classes:
            p.validate()
        self.net.validate()
        if not self.net.paths:
            raise ValueError("network has no enumerated paths")
        if self.net.od_demands().sum() <= 0.0:
            raise ValueError("total demand must be positive")
        self.loading.validate(self.net)


@dataclass
class DayState:
    """Everything carried from one day to the next."""

    day: int
    flows: np.ndarray       # (classes, paths) vehicles
    perceived: np.ndarray   # (classes, paths) seconds
    evidence: list          # TrustState per class


@dataclass
class RunLog:
    """Per-day observables; the substrate for every metric."""

    class_names: list
    day: np.ndarray
    tstt: np.ndarray
    tstt_smoothed: np.ndarray
    trust: np.ndarray       # (days, classes)
    error: np.ndarray
    xi: np.ndarray
    reliance: np.ndarray
    strength: np.ndarray    # (days,)
    snapshots: dict = field(default_factory=dict)   # day -> (K, P) flows

    def header(self) -> list:
        cols = ["day", "tstt", "tstt_smoothed"]
        for name in self.class_names:
            cols += [f"T_{name}", f"e_{name}", f"xi_{name}", f"lambda_{name}"]
        cols.append("S")
        return cols

    def to_csv(self, path) -> None:
        lines = [",".join(self.header())]
        for i in range(len(self.day)):
            row = [str(int(self.day[i])), repr(float(self.tstt[i])),
                   repr(float(self.tstt_smoothed[i]))]
            for k in range(len(self.class_names)):
                row += [repr(float(self.trust[i, k])),
                        repr(float(self.error[i, k])),
                        repr(float(self.xi[i, k])),
                        repr(float(self.reliance[i, k]))]
            row.append(repr(float(self.strength[i])))
            lines.append(",".join(row))
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "RunLog":
        with open(path) as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
        if not lines:
            raise ValueError(f"{path}: empty file")
        header = lines[0].split(",")
        for col in ("day", "tstt", "tstt_smoothed", "S"):
            if col not in header:
                raise ValueError(f"{path}: missing column {col!r}")
        names = [c[2:] for c in header if c.startswith("T_")]
        idx = {c: j for j, c in enumerate(header)}
        rows = [ln.split(",") for ln in lines[1:]]
        day = np.asarray([int(r[idx["day"]]) for r in rows])

        def col(name):
            return np.asarray([float(r[idx[name]]) for r in rows])

        def per_class(prefix):
            return np.column_stack([col(f"{prefix}_{n}") for n in names]) \
                if names else np.zeros((len(rows), 0))

        return cls(class_names=names, day=day, tstt=col("tstt"),
                   tstt_smoothed=col("tstt_smoothed"), trust=per_class("T"),
                   error=per_class("e"), xi=per_class("xi"),
                   reliance=per_class("lambda"), strength=col("S"))


def initial_state(cfg: ScenarioConfig) -> DayState:
    """Free-flow perceived costs; day-1 flows are the logit response to them."""
    net = cfg.net
    fft = np.asarray([p.free_flow_time for p in net.flat_paths()])
    starts = net.od_starts()
    shares = np.asarray([p.share for p in cfg.classes])
    probs = np.empty((len(cfg.classes), fft.size))
    for k, prof in enumerate(cfg.classes):
        mask = behavior.admissible_mask(fft, prof.delta, starts)
        probs[k] = behavior.mnl_probabilities(fft, mask, prof.theta, starts)
    flows = behavior.next_day_flows(probs, net.od_demands(), shares, starts)
    perceived = np.tile(fft, (len(cfg.classes), 1))
    evidence = [trust.initial_state(p.w_s, cfg.forget) for p in cfg.classes]
    return DayState(day=1, flows=flows, perceived=perceived, evidence=evidence)


def _check_feasibility(flows, shares, demands, starts) -> None:
    sums = np.add.reduceat(flows, starts, axis=1)
    expected = shares[:, None] * demands[None, :]
    scale = np.maximum(np.abs(expected), 1.0)
    if np.any(np.abs(sums - expected) > 1e-9 * scale):
        worst = float(np.max(np.abs(sums - expected) / scale))
        raise RuntimeError(f"per-class OD flow conservation violated ({worst:.3e})")


def step(state: DayState, cfg: ScenarioConfig):
    """Advance one day; returns the next state and this day's log row."""
    net = cfg.net
    starts = net.od_starts()
    demands = net.od_demands()
    shares = np.asarray([p.share for p in cfg.classes])
    total_demand = float(demands.sum())

    total_flows = state.flows.sum(axis=0)
    costs = loading.compute_costs(net, total_flows, cfg.loading)
    flags = path_flags(net, cfg.attack.targets)
    signal = guidance_signal(costs, cfg.attack, flags, state.day)

    n_classes = len(cfg.classes)
    t_arr = np.empty(n_classes)
    e_arr = np.empty(n_classes)
    xi_arr = np.empty(n_classes)
    lam_arr = np.empty(n_classes)
    evidence = []
    perceived = np.empty_like(state.perceived)
    prob = np.empty_like(state.perceived)
    for k, prof in enumerate(cfg.classes):
        q_k = prof.share * total_demand
        if q_k > 0.0:
            e_k = trust.guidance_error(state.flows[k], signal, costs, q_k)
        else:
            # empty class: nobody travels, so no disconfirming evidence
            e_k = 0.0
        xi_k = float(trust.classify(e_k, prof.epsilon))
        if cfg.trust_mode == "dynamic":
            ev = trust.update_evidence(state.evidence[k], xi_k, cfg.forget,
                                       prof.w_s, prof.w_f)
        else:
            ev = state.evidence[k]
        t_k = ev.trust()
        lam_k = trust.reliance(t_k, prof.lambda_bar)
        perceived[k] = behavior.update_perceived(
            state.perceived[k], costs, signal, lam_k, cfg.memory)
        mask = behavior.admissible_mask(perceived[k], prof.delta, starts)
        prob[k] = behavior.mnl_probabilities(perceived[k], mask, prof.theta, starts)
        evidence.append(ev)
        t_arr[k], e_arr[k], xi_arr[k], lam_arr[k] = t_k, e_k, xi_k, lam_k

    next_flows = behavior.next_day_flows(prob, demands, shares, starts)
    _check_feasibility(next_flows, shares, demands, starts)

    gamma_today = cfg.attack.gamma if cfg.attack.active(state.day) else 0.0
    lambda_bars = np.asarray([p.lambda_bar for p in cfg.classes])
    strength = float(np.sum(shares * lambda_bars * t_arr) * gamma_today)

    row = {
        "day": state.day,
        "tstt": loading.tstt(state.flows, costs),
        "trust": t_arr, "error": e_arr, "xi": xi_arr, "reliance": lam_arr,
        "strength": strength,
    }
    next_state = DayState(day=state.day + 1, flows=next_flows,
                          perceived=perceived, evidence=evidence)
    return next_state, row


def run(cfg: ScenarioConfig, snapshot_days=()) -> RunLog:
    cfg.validate()
    state = initial_state(cfg)
    n_days = cfg.horizon_days
    n_classes = len(cfg.classes)
    tstt = np.empty(n_days)
    t_log = np.empty((n_days, n_classes))
    e_log = np.empty((n_days, n_classes))
    xi_log = np.empty((n_days, n_classes))
    lam_log = np.empty((n_days, n_classes))
    s_log = np.empty(n_days)
    snapshots = {}
    snapshot_days = set(int(d) for d in snapshot_days)
    for i in range(n_days):
        if state.day in snapshot_days:
            snapshots[state.day] = state.flows.copy()
        state, row = step(state, cfg)
        tstt[i] = row["tstt"]
        t_log[i] = row["trust"]
        e_log[i] = row["error"]
        xi_log[i] = row["xi"]
        lam_log[i] = row["reliance"]
        s_log[i] = row["strength"]
    return RunLog(
        class_names=[p.name for p in cfg.classes],
        day=np.arange(1, n_days + 1),
        tstt=tstt,
        tstt_smoothed=rolling_mean(tstt, cfg.smoothing_window),
        trust=t_log, error=e_log, xi=xi_log, reliance=lam_log,
        strength=s_log, snapshots=snapshots,
    )


def stationarity_residual(state: DayState, cfg: ScenarioConfig) -> float:
    """Distance of a state from the coupled fixed point.

    Applies one route-choice step under the stationary cost map
    z_r = c_r + lambda_bar_k T_k (I_r - c_r) and compares the resulting
    flows with the current ones (sup norm, relative); per class, also
    measures how far T_k sits from the nearest stationary trust value
    implied by the accuracy selector (1 when e_k < eps, 0 when e_k > eps,
    anything at the boundary).
    """
    net = cfg.net
    starts = net.od_starts()
    demands = net.od_demands()
    shares = np.asarray([p.share for p in cfg.classes])
    total_demand = float(demands.sum())

    total_flows = state.flows.sum(axis=0)
    costs = loading.compute_costs(net, total_flows, cfg.loading)
    flags = path_flags(net, cfg.attack.targets)
    signal = guidance_signal(costs, cfg.attack, flags, state.day)
    distortion = signal - costs

    prob = np.empty_like(state.flows)
    trust_resid = 0.0
    for k, prof in enumerate(cfg.classes):
        t_k = state.evidence[k].trust()
        z = costs + prof.lambda_bar * t_k * distortion
        mask = behavior.admissible_mask(z, prof.delta, starts)
        prob[k] = behavior.mnl_probabilities(z, mask, prof.theta, starts)
        e_k = trust.guidance_error(state.flows[k], signal, costs,
                                   prof.share * total_demand)
        if e_k < prof.epsilon:
            resid_k = abs(t_k - 1.0)
        elif e_k > prof.epsilon:
            resid_k = abs(t_k)
        else:
            resid_k = 0.0
        trust_resid = max(trust_resid, resid_k)

    next_flows = behavior.next_day_flows(prob, demands, shares, starts)
    denom = np.max(np.abs(state.flows))
    if denom <= 0.0:
        return trust_resid
    flow_resid = float(np.max(np.abs(next_flows - state.flows)) / denom)
    return max(flow_resid, trust_resid)
