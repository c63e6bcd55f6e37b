"""Network representation, TNTP ingestion, path sets, and target selection.

Link free-flow parameters come from the input files; the triangular
fundamental-diagram shape is synthesized deterministically: free-flow
speed v_f = length / fft, jam density k_j = 4 * capacity / v_f, which
puts the backward wave speed at v_f / 3. Nothing downstream depends on
the length unit because jam storage reduces to 4 * capacity * fft.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

import numpy as np


class ParseError(ValueError):
    """Raised for malformed network/trips files; message carries the line number."""


@dataclass(frozen=True)
class Link:
    id: int
    from_node: int
    to_node: int
    length: float           # m
    free_flow_time: float   # s
    capacity: float         # veh/s

    @property
    def free_flow_speed(self) -> float:
        return self.length / self.free_flow_time

    @property
    def jam_density(self) -> float:
        # triangular FD closure: 4x the critical density
        return 4.0 * self.capacity / self.free_flow_speed

    @property
    def backward_wave_speed(self) -> float:
        crit = self.capacity / self.free_flow_speed
        return self.capacity / (self.jam_density - crit)

    @property
    def jam_storage(self) -> float:
        """Max vehicles the link can hold (k_j * length)."""
        return self.jam_density * self.length

    def validate(self) -> None:
        if self.free_flow_time <= 0:
            raise ValueError(f"link {self.id}: free-flow time must be positive")
        if self.capacity <= 0:
            raise ValueError(f"link {self.id}: capacity must be positive")
        if self.length <= 0:
            raise ValueError(f"link {self.id}: length must be positive")
        if self.jam_density <= self.capacity / self.free_flow_speed:
            raise ValueError(f"link {self.id}: jam density below critical density")
        if self.backward_wave_speed <= 0:
            raise ValueError(f"link {self.id}: backward wave speed must be positive")


@dataclass(frozen=True)
class Path:
    """A route as an ordered link-id sequence with its free-flow time."""

    links: tuple
    free_flow_time: float


@dataclass
class NetworkModel:
    nodes: list
    links: list
    od_pairs: list                       # (origin, destination, demand)
    paths: list = field(default_factory=list)   # per OD pair, ordered list of Path

    def __post_init__(self):
        self.link_by_id = {a.id: a for a in self.links}

    def validate(self) -> None:
        node_set = set(self.nodes)
        for a in self.links:
            a.validate()
            if a.from_node not in node_set or a.to_node not in node_set:
                raise ValueError(f"link {a.id} references unknown node")
        for o, d, q in self.od_pairs:
            if q < 0:
                raise ValueError(f"OD pair ({o}, {d}): negative demand")
            if o not in node_set or d not in node_set:
                raise ValueError(f"OD pair ({o}, {d}) references unknown node")
        if self.paths:
            if len(self.paths) != len(self.od_pairs):
                raise ValueError("paths not aligned with OD pairs")
            for (o, d, _), od_paths in zip(self.od_pairs, self.paths):
                if not od_paths:
                    raise ValueError(f"OD pair ({o}, {d}) has no path")
                for p in od_paths:
                    self._check_path(p, o, d)

    def _check_path(self, p: Path, origin, destination) -> None:
        at = origin
        for lid in p.links:
            link = self.link_by_id.get(lid)
            if link is None:
                raise ValueError(f"path references unknown link {lid}")
            if link.from_node != at:
                raise ValueError(f"path {p.links} breaks at link {lid}")
            at = link.to_node
        if at != destination:
            raise ValueError(f"path {p.links} ends at {at}, not {destination}")

    # flattened-path views used by the simulator --------------------------

    def flat_paths(self) -> list:
        return [p for od_paths in self.paths for p in od_paths]

    def od_starts(self) -> np.ndarray:
        counts = [len(od_paths) for od_paths in self.paths]
        return np.cumsum([0] + counts[:-1]).astype(int)

    def od_demands(self) -> np.ndarray:
        return np.asarray([q for _, _, q in self.od_pairs], dtype=float)


@dataclass(frozen=True)
class TargetSet:
    """Links chosen for manipulation plus how they were chosen."""

    method: str
    n_att: int
    link_ids: tuple
    seed: int | None = None

    def __post_init__(self):
        if len(self.link_ids) != self.n_att:
            raise ValueError("target set size disagrees with n_att")


# ---------------------------------------------------------------------------
# TNTP ingestion
# ---------------------------------------------------------------------------

def _metadata_and_body(text: str):
    """Split TNTP metadata tags from data lines, keeping line numbers."""
    meta = {}
    body = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("~")[0].strip()
        if not line:
            continue
        if line.startswith("<"):
            close = line.find(">")
            if close < 0:
                raise ParseError(f"line {lineno}: malformed metadata tag {line!r}")
            key = line[1:close].strip().upper()
            value = line[close + 1:].strip()
            meta[key] = value
            continue
        body.append((lineno, line))
    return meta, body


def load_network(net_file: str, trips_file: str, *, capacity_unit: str = "veh/h",
                 time_unit: str = "s", length_unit: str = "m") -> NetworkModel:
    """Read TNTP network and trips tables into a NetworkModel (no paths yet).

    Capacities are stored in veh/s and times in seconds; the common TNTP
    convention of hourly capacities is converted with ``capacity_unit``.
    """
    cap_scale = {"veh/h": 1.0 / 3600.0, "veh/s": 1.0, "veh/min": 1.0 / 60.0}
    time_scale = {"s": 1.0, "min": 60.0, "h": 3600.0}
    len_scale = {"m": 1.0, "km": 1000.0, "mi": 1609.344}
    if capacity_unit not in cap_scale:
        raise ValueError(f"unknown capacity unit {capacity_unit!r}")
    if time_unit not in time_scale:
        raise ValueError(f"unknown time unit {time_unit!r}")
    if length_unit not in len_scale:
        raise ValueError(f"unknown length unit {length_unit!r}")

    with open(net_file) as fh:
        meta, body = _metadata_and_body(fh.read())

    declared_nodes = _meta_int(meta, "NUMBER OF NODES")
    links = []
    for lineno, line in body:
        fields = line.rstrip(";").split()
        if len(fields) < 5:
            raise ParseError(f"line {lineno}: link row needs at least 5 columns")
        try:
            init, term = int(float(fields[0])), int(float(fields[1]))
            cap, length, fft = (float(fields[2]), float(fields[3]), float(fields[4]))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: non-numeric link field ({exc})") from None
        if cap < 0:
            raise ParseError(f"line {lineno}: negative capacity")
        if declared_nodes is not None and (init > declared_nodes or term > declared_nodes):
            raise ParseError(f"line {lineno}: node reference beyond declared node count")
        links.append(Link(
            id=len(links) + 1,
            from_node=init,
            to_node=term,
            length=length * len_scale[length_unit],
            free_flow_time=fft * time_scale[time_unit],
            capacity=cap * cap_scale[capacity_unit],
        ))

    nodes = sorted({a.from_node for a in links} | {a.to_node for a in links})
    if declared_nodes is not None:
        nodes = sorted(set(nodes) | set(range(1, declared_nodes + 1)))

    od_pairs = _load_trips(trips_file, set(nodes))
    net = NetworkModel(nodes=nodes, links=links, od_pairs=od_pairs)
    net.validate()
    return net


def _meta_int(meta: dict, key: str):
    if key not in meta:
        return None
    try:
        return int(meta[key])
    except ValueError:
        raise ParseError(f"metadata <{key}> is not an integer: {meta[key]!r}") from None


def _load_trips(trips_file: str, node_set: set) -> list:
    with open(trips_file) as fh:
        _, body = _metadata_and_body(fh.read())
    od = {}
    origin = None
    for lineno, line in body:
        if line.lower().startswith("origin"):
            try:
                origin = int(float(line.split()[1]))
            except (IndexError, ValueError):
                raise ParseError(f"line {lineno}: malformed Origin header") from None
            if origin not in node_set:
                raise ParseError(f"line {lineno}: origin {origin} is not a network node")
            continue
        if origin is None:
            raise ParseError(f"line {lineno}: trip entry before any Origin header")
        for chunk in line.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            if ":" not in chunk:
                raise ParseError(f"line {lineno}: expected 'dest : flow' entries")
            dest_s, flow_s = chunk.split(":", 1)
            try:
                dest, flow = int(float(dest_s)), float(flow_s)
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric trip entry {chunk!r}") from None
            if dest not in node_set:
                raise ParseError(f"line {lineno}: destination {dest} is not a network node")
            if flow < 0:
                raise ParseError(f"line {lineno}: negative demand")
            if flow > 0 and dest != origin:
                od[(origin, dest)] = od.get((origin, dest), 0.0) + flow
    return [(o, d, q) for (o, d), q in sorted(od.items())]


# ---------------------------------------------------------------------------
# Path enumeration
# ---------------------------------------------------------------------------

def _adjacency(net: NetworkModel, reverse: bool = False) -> dict:
    adj = {n: [] for n in net.nodes}
    for a in net.links:
        if reverse:
            adj[a.to_node].append(a)
        else:
            adj[a.from_node].append(a)
    for n in adj:
        adj[n].sort(key=lambda a: a.id)
    return adj


def _dijkstra_to(net: NetworkModel, dest) -> dict:
    """Free-flow shortest time from every node to ``dest``."""
    radj = _adjacency(net, reverse=True)
    dist = {dest: 0.0}
    heap = [(0.0, dest)]
    while heap:
        d, n = heapq.heappop(heap)
        if d > dist.get(n, np.inf):
            continue
        for a in radj[n]:
            nd = d + a.free_flow_time
            if nd < dist.get(a.from_node, np.inf):
                dist[a.from_node] = nd
                heapq.heappush(heap, (nd, a.from_node))
    return dist


def enumerate_paths(net: NetworkModel, k: int, detour_cap: float,
                    max_candidates: int = 50_000) -> NetworkModel:
    """Attach up to k loop-free shortest free-flow paths per OD pair.

    Candidates within detour_cap x the shortest time are collected by a
    cost-pruned depth-first walk over links (parallel links are distinct
    routes), then sorted by (cost, link-id sequence) and cut to k. The
    walk visits links in ascending id order, so output is deterministic.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if detour_cap < 1.0:
        raise ValueError("detour_cap below 1 would drop the shortest path")
    adj = _adjacency(net)
    missing = []
    all_paths = []
    for o, d, _ in net.od_pairs:
        dist = _dijkstra_to(net, d)
        if o not in dist:
            missing.append((o, d))
            continue
        bound = detour_cap * dist[o] * (1.0 + 1e-12) if dist[o] > 0 else 0.0
        found = []

        def walk(node, cost, seq, visited):
            if len(found) >= max_candidates:
                return
            if node == d:
                found.append((cost, tuple(seq)))
                return
            for a in adj[node]:
                if a.to_node in visited:
                    continue
                nc = cost + a.free_flow_time
                lower = dist.get(a.to_node)
                if lower is None or nc + lower > bound:
                    continue
                seq.append(a.id)
                visited.add(a.to_node)
                walk(a.to_node, nc, seq, visited)
                visited.remove(a.to_node)
                seq.pop()

        walk(o, 0.0, [], {o})
        found.sort(key=lambda item: (item[0], item[1]))
        all_paths.append([Path(links=seq, free_flow_time=c) for c, seq in found[:k]])
    if missing:
        raise ValueError(f"no path for OD pairs: {missing}")
    out = NetworkModel(nodes=net.nodes, links=net.links,
                       od_pairs=net.od_pairs, paths=all_paths)
    out.validate()
    return out


def save_paths(net: NetworkModel, file) -> None:
    records = [{"od": [o, d], "links": list(p.links)}
               for (o, d, _), od_paths in zip(net.od_pairs, net.paths)
               for p in od_paths]
    with open(file, "w") as fh:
        json.dump(records, fh, indent=1)


def load_paths(net: NetworkModel, file) -> NetworkModel:
    with open(file) as fh:
        records = json.load(fh)
    per_od = {(o, d): [] for o, d, _ in net.od_pairs}
    for rec in records:
        key = tuple(rec["od"])
        if key not in per_od:
            raise ValueError(f"path file references unknown OD pair {key}")
        links = tuple(rec["links"])
        fft = sum(net.link_by_id[lid].free_flow_time for lid in links)
        per_od[key].append(Path(links=links, free_flow_time=fft))
    paths = [per_od[(o, d)] for o, d, _ in net.od_pairs]
    out = NetworkModel(nodes=net.nodes, links=net.links,
                       od_pairs=net.od_pairs, paths=paths)
    out.validate()
    return out


# ---------------------------------------------------------------------------
# Target selection
# ---------------------------------------------------------------------------

def edge_betweenness(net: NetworkModel) -> dict:
    """Unweighted directed edge betweenness over all node pairs.

    Breadth-first variant of Brandes' accumulation; shortest-path counts
    split evenly over equal-cost predecessor links, so parallel links
    share their corridor's score.
    """
    adj = _adjacency(net)
    score = {a.id: 0.0 for a in net.links}
    for s in net.nodes:
        dist = {s: 0}
        sigma = {s: 1.0}
        preds = {}            # node -> list of (pred node, link id)
        order = [s]
        queue = [s]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            for a in adj[v]:
                w = a.to_node
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                    order.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] = sigma.get(w, 0.0) + sigma[v]
                    preds.setdefault(w, []).append((v, a.id))
        delta = {v: 0.0 for v in order}
        for w in reversed(order):
            if w == s:
                continue
            coeff = (1.0 + delta[w]) / sigma[w]
            for v, lid in preds.get(w, []):
                c = sigma[v] * coeff
                score[lid] += c
                delta[v] += c
    return score


def path_demand_scores(net: NetworkModel) -> dict:
    """Demand-aware link scores: total OD demand of enumerated paths using the link."""
    if not net.paths:
        raise ValueError("path-betweenness targeting needs enumerated paths")
    score = {a.id: 0.0 for a in net.links}
    for (_, _, q), od_paths in zip(net.od_pairs, net.paths):
        for p in od_paths:
            for lid in p.links:
                score[lid] += q
    return score


TARGET_METHODS = ("topological-betweenness", "path-betweenness", "random")


def select_targets(net: NetworkModel, method: str, n_att: int,
                   seed: int | None = None) -> TargetSet:
    """Pick the n_att attack links; ties always break toward lower link id."""
    if n_att > len(net.links):
        raise ValueError(f"n_att {n_att} exceeds link count {len(net.links)}")
    if method == "topological-betweenness":
        score = edge_betweenness(net)
    elif method == "path-betweenness":
        score = path_demand_scores(net)
    elif method == "random":
        if seed is None:
            raise ValueError("random targeting needs a seed")
        rng = np.random.default_rng(seed)
        ids = sorted(a.id for a in net.links)
        chosen = rng.choice(len(ids), size=n_att, replace=False)
        picked = tuple(sorted(ids[i] for i in chosen))
        return TargetSet(method=method, n_att=n_att, link_ids=picked, seed=seed)
    else:
        raise ValueError(f"unknown targeting method {method!r}; "
                         f"expected one of {TARGET_METHODS}")
    ranked = sorted(score.items(), key=lambda kv: (-kv[1], kv[0]))
    picked = tuple(sorted(lid for lid, _ in ranked[:n_att]))
    return TargetSet(method=method, n_att=n_att, link_ids=picked)


# ---------------------------------------------------------------------------
# Built-in desk-scale networks
# ---------------------------------------------------------------------------

def two_link(c0: float = 1200.0, b: float = 600.0, demand: float = 1.0,
             capacity: float = 0.5) -> NetworkModel:
    """One OD pair served by two parallel links with equal free-flow time c0.

    The companion affine cost map c_r = c0 + b * f_r makes this the
    standard benchmark for the threshold and compliance calculators.
    """
    speed = 15.0  # m/s, only sets the physical length
    links = [
        Link(id=1, from_node=1, to_node=2, length=speed * c0,
             free_flow_time=c0, capacity=capacity),
        Link(id=2, from_node=1, to_node=2, length=speed * c0,
             free_flow_time=c0, capacity=capacity),
    ]
    net = NetworkModel(
        nodes=[1, 2], links=links, od_pairs=[(1, 2, demand)],
        paths=[[Path(links=(1,), free_flow_time=c0),
                Path(links=(2,), free_flow_time=c0)]],
    )
    net.validate()
    return net


def grid(n: int = 4, m: int = 4, demand: float = 1800.0, length: float = 1000.0,
         free_flow_time: float = 60.0, capacity: float = 0.5) -> NetworkModel:
    """n x m lattice with bidirectional links and the two southbound
    diagonal OD pairs (top-left -> bottom-right, top-right -> bottom-left).

    Restricting demand to southbound diagonals keeps every used link on
    east/south/west headings, so spillback chains always terminate at an
    origin source and the kinematic-wave loader cannot interlock even
    when heavily oversaturated.
    """
    if n < 2 or m < 2:
        raise ValueError("grid needs at least 2 x 2 nodes")

    def node(i, j):
        return i * m + j + 1

    links = []

    def add(u, v):
        links.append(Link(id=len(links) + 1, from_node=u, to_node=v,
                          length=length, free_flow_time=free_flow_time,
                          capacity=capacity))

    for i in range(n):
        for j in range(m):
            if j + 1 < m:
                add(node(i, j), node(i, j + 1))
                add(node(i, j + 1), node(i, j))
            if i + 1 < n:
                add(node(i, j), node(i + 1, j))
                add(node(i + 1, j), node(i, j))
    corners = [(node(0, 0), node(n - 1, m - 1)),
               (node(0, m - 1), node(n - 1, 0))]
    net = NetworkModel(nodes=list(range(1, n * m + 1)), links=links,
                       od_pairs=[(o, d, demand) for o, d in corners])
    net.validate()
    return net
