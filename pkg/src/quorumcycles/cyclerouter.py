"""Cycle routing: one closed walk per quorum.

``find_cycle`` is a three-phase heuristic:

1. from a start node in the required set, pick the best shortest path to
   another required node (highest share of required nodes, then most
   degree-2 required nodes, then shortest, then lexicographic);
2. close it with a shortest return path that reuses none of its edges;
3. while required nodes are missing, replace the cycle edge whose removal
   admits the cheapest edge-disjoint detour through a missing node.

Every start node is tried and the shortest resulting walk is kept. Walks
never reuse an edge but may revisit nodes.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

from .netgraph import Edge, Network, bfs_distances, is_connected, norm_edge
from .quorum import QuorumSet


class RoutingError(RuntimeError):
    pass


class NoCycleError(RoutingError):
    """The required nodes cannot share a closed walk."""

    def __init__(self, message: str, bridge: Edge | None = None):
        super().__init__(message)
        self.bridge = bridge


class InsertionError(RoutingError):
    def __init__(self, message: str, node: int):
        super().__init__(message)
        self.node = node


@dataclass(frozen=True)
class Cycle:
    walk: tuple[int, ...]
    quorum_id: int = 0

    def __len__(self) -> int:
        return len(self.walk)

    @property
    def length(self) -> int:
        return len(self.walk)

    def edge_at(self, i: int) -> Edge:
        w = self.walk
        return norm_edge(w[i], w[(i + 1) % len(w)])

    def edges(self) -> list[Edge]:
        return [self.edge_at(i) for i in range(len(self.walk))]

    def occurrences(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for v in self.walk:
            counts[v] = counts.get(v, 0) + 1
        return counts


def cycle_problems(net: Network, walk: Iterable[int], required: Iterable[int] = ()) -> list[str]:
    """Independent validity check: walks the closed edge list directly."""
    walk = list(walk)
    problems = []
    if len(walk) < 3:
        problems.append(f"walk of length {len(walk)} cannot be a cycle without reusing an edge")
    seen: set[Edge] = set()
    for i, a in enumerate(walk):
        b = walk[(i + 1) % len(walk)]
        if not net.has_edge(a, b):
            problems.append(f"{a}-{b} is not a network edge")
        e = norm_edge(a, b)
        if e in seen:
            problems.append(f"edge {a}-{b} traversed twice")
        seen.add(e)
    absent = sorted(set(required) - set(walk))
    if absent:
        problems.append(f"required nodes {absent} not on the walk")
    return problems


@dataclass
class RoutingSolution:
    network: Network
    quorum_set: QuorumSet
    cycles: list[Cycle] = field(default_factory=list)

    @property
    def total_links(self) -> int:
        return sum(c.length for c in self.cycles)

    @property
    def average(self) -> float:
        return self.total_links / len(self.cycles) if self.cycles else 0.0

    def problems(self) -> list[str]:
        out = []
        if len(self.cycles) != len(self.quorum_set.quorums):
            out.append(f"{len(self.cycles)} cycles for {len(self.quorum_set.quorums)} quorums")
        for c, q in zip(self.cycles, self.quorum_set.quorums):
            out += [f"cycle {c.quorum_id}: {p}" for p in cycle_problems(self.network, c.walk, q)]
        return out

    def to_dict(self) -> dict:
        return {
            "network": self.network.name,
            "n": self.network.n,
            "base": list(self.quorum_set.base),
            "cycles": [
                {"quorum_id": c.quorum_id, "quorum": list(q), "walk": list(c.walk), "length": c.length}
                for c, q in zip(self.cycles, self.quorum_set.quorums)
            ],
            "total_links": self.total_links,
            "average": round(self.average, 2),
        }

    @classmethod
    def from_dict(cls, data: dict, net: Network) -> "RoutingSolution":
        from .quorum import expand

        if data["n"] != net.n:
            raise RoutingError(f"solution is for n={data['n']}, network has n={net.n}")
        qs = expand(net.n, data["base"])
        cycles = [Cycle(tuple(rec["walk"]), rec["quorum_id"]) for rec in data["cycles"]]
        sol = cls(net, qs, cycles)
        bad = sol.problems()
        if bad:
            raise RoutingError("solution does not match network: " + "; ".join(bad[:5]))
        return sol


# --- search primitives ----------------------------------------------------

def _best_shortest_paths(
    net: Network, source: int, banned: set[Edge], required: frozenset[int], deg2: frozenset[int]
) -> dict[int, tuple[int, int, tuple[int, ...]]]:
    """Among shortest paths from ``source``, keep per target the one with the
    most required nodes, then most degree-2 required nodes, then smallest
    node sequence. Returns ``target -> (req_count, deg2_count, path)``."""
    best = {source: (int(source in required), int(source in deg2), (source,))}
    frontier = [source]
    adj = net.adj
    while frontier:
        layer: dict[int, tuple[int, int, tuple[int, ...]]] = {}
        for u in frontier:
            rc, dc, path = best[u]
            for w in adj[u]:
                if w in best or (banned and norm_edge(u, w) in banned):
                    continue
                cand = (rc + (w in required), dc + (w in deg2), path + (w,))
                cur = layer.get(w)
                if cur is None or (-cand[0], -cand[1], cand[2]) < (-cur[0], -cur[1], cur[2]):
                    layer[w] = cand
        best.update(layer)
        frontier = sorted(layer)
    return best


def _shortest_path(net: Network, s: int, t: int, banned: set[Edge]) -> tuple[int, ...] | None:
    prev = {s: s}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        if u == t:
            break
        for w in net.adj[u]:
            if w not in prev and norm_edge(u, w) not in banned:
                prev[w] = u
                queue.append(w)
    if t not in prev:
        return None
    path = [t]
    while path[-1] != s:
        path.append(prev[path[-1]])
    return tuple(reversed(path))


def _two_edge_disjoint_paths(
    adj: dict[int, list[int]], x: int, u: int, w: int
) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """Minimum total-length pair of edge-disjoint paths x->u and x->w over
    the adjacency ``adj``.

    Successive shortest paths: a BFS finds the first path to whichever of
    ``u``/``w`` is nearer, then a label-correcting search over the residual
    graph (reverse arcs of the first path cost -1) finds the augmenting path
    to the other one, possibly rerouting part of the first.
    """
    # first augmentation: plain BFS to the nearer endpoint
    prev = {x: x}
    queue = deque([x])
    first = None
    while queue:
        a = queue.popleft()
        if a == u or a == w:
            first = a
            break
        for b in adj[a]:
            if b not in prev:
                prev[b] = a
                queue.append(b)
    if first is None:
        return None
    used: set[tuple[int, int]] = set()
    b = first
    while b != x:
        used.add((prev[b], b))
        b = prev[b]
    target = w if first == u else u

    # second augmentation over the residual graph
    dist = {x: 0}
    prev = {}
    queue = deque([x])
    in_queue = {x}
    while queue:
        a = queue.popleft()
        in_queue.discard(a)
        da = dist[a]
        for b in adj[a]:
            if (a, b) in used:
                continue
            nd = da - 1 if (b, a) in used else da + 1
            if nd < dist.get(b, 1 << 30):
                dist[b] = nd
                prev[b] = a
                if b not in in_queue:
                    queue.append(b)
                    in_queue.add(b)
    if target not in dist:
        return None
    b = target
    while b != x:
        a = prev[b]
        if (b, a) in used:
            used.discard((b, a))
        else:
            used.add((a, b))
        b = a

    out: dict[int, list[int]] = {}
    for a, b in sorted(used, reverse=True):
        out.setdefault(a, []).append(b)
    ends = {u: True, w: True}
    paths: dict[int, tuple[int, ...]] = {}
    for _ in range(2):
        path = [x]
        v = x
        while not ends.get(v, False) or v == x:
            v = out[v].pop()
            path.append(v)
        ends[v] = False
        paths[v] = tuple(path)
    return paths[u], paths[w]


def _splice_candidate(free_adj: dict[int, list[int]], walk: list[int], i: int, x: int):
    u, w = walk[i], walk[(i + 1) % len(walk)]
    # the replaced link becomes usable again for this splice only
    adj = dict(free_adj)
    adj[u] = free_adj[u] + [w]
    adj[w] = free_adj[w] + [u]
    found = _two_edge_disjoint_paths(adj, x, u, w)
    if found is None:
        return None
    to_u, to_w = found
    cost = len(to_u) - 1 + len(to_w) - 1 - 1
    return cost, to_u, to_w


def _insert_missing(net: Network, walk: list[int], required: frozenset[int]) -> list[int]:
    while True:
        missing = sorted(required - set(walk))
        if not missing:
            return walk
        cycle_edges = {norm_edge(walk[i], walk[(i + 1) % len(walk)]) for i in range(len(walk))}
        # Lower bound on each splice from hop counts off the cycle; the removed
        # link itself can shorten either leg by at most one hop.
        bounds = []
        for x in missing:
            dx = bfs_distances(net, x, cycle_edges)
            for i in range(len(walk)):
                du, dw = dx.get(walk[i]), dx.get(walk[(i + 1) % len(walk)])
                if du is None and dw is None:
                    continue
                du = du if du is not None else dw + 1
                dw = dw if dw is not None else du + 1
                bounds.append((min(du, dw + 1) + min(dw, du + 1) - 1, x, i))
        bounds.sort()
        free_adj = {v: [t for t in net.adj[v] if norm_edge(v, t) not in cycle_edges] for v in net.nodes}
        best = None
        for lower, x, i in bounds:
            if best is not None and (lower, x, i) >= best[:3]:
                break
            cand = _splice_candidate(free_adj, walk, i, x)
            if cand is not None and (best is None or (cand[0], x, i) < best[:3]):
                best = (cand[0], x, i, cand[1], cand[2])
        if best is None:
            x = missing[0]
            raise InsertionError(
                f"node {x} cannot be spliced into the cycle without reusing a link"
                f" (degree {net.degree(x)}; degree-2 nodes force both their links)",
                x,
            )
        _, _, i, to_u, to_w = best
        # to_u runs x..u, to_w runs x..w; new segment is u..x..w
        segment = list(reversed(to_u))[1:] + list(to_w[1:-1])
        walk = walk[: i + 1] + segment + walk[i + 1:]


def _cycle_from_start(
    net: Network, start: int, required: frozenset[int], deg2: frozenset[int], memo: dict | None = None
) -> list[int]:
    labels = _best_shortest_paths(net, start, set(), required, deg2)
    candidates = []
    for t in required:
        if t == start or t not in labels:
            continue
        rc, dc, path = labels[t]
        candidates.append((-rc / len(path), -dc, len(path), path))
    candidates.sort()
    best: list[int] | None = None
    last_error: RoutingError | None = None
    for *_, path in candidates:
        p1_edges = {norm_edge(path[i], path[i + 1]) for i in range(len(path) - 1)}
        back = _best_shortest_paths(net, path[-1], p1_edges, required, deg2).get(start)
        if back is None:
            continue
        walk = list(path) + list(back[2][1:-1])
        # different starts often close the same initial cycle
        key = tuple(walk)
        if memo is not None and key in memo:
            walk = memo[key]
        else:
            try:
                walk = _insert_missing(net, walk, required)
            except InsertionError as exc:
                walk = exc
            if memo is not None:
                memo[key] = walk
        if isinstance(walk, InsertionError):
            last_error = walk
            continue
        if best is None or len(walk) < len(best):
            best = walk
    if best is not None:
        return best
    if last_error is not None:
        raise last_error
    raise NoCycleError(f"no closed walk from node {start} through the required set")


def _shortest_cycle_through(net: Network, x: int) -> list[int]:
    best = None
    for w in net.adj[x]:
        path = _shortest_path(net, w, x, {norm_edge(x, w)})
        if path is not None and (best is None or len(path) < len(best)):
            best = [x] + list(path[:-1])
    if best is None:
        raise NoCycleError(f"node {x} lies on no cycle")
    return best


def _separating_bridge(net: Network, required: frozenset[int]) -> Edge | None:
    for e in net.bridge_list:
        reach = bfs_distances(net, min(required), {e})
        if any(r not in reach for r in required):
            return e
    return None


def find_cycle(net: Network, required: Iterable[int], quorum_id: int = 0) -> Cycle:
    req = frozenset(required)
    if not req:
        raise ValueError("required set is empty")
    outside = sorted(v for v in req if not 1 <= v <= net.n)
    if outside:
        raise ValueError(f"required nodes {outside} not in network")
    reach = bfs_distances(net, min(req))
    if any(v not in reach for v in req):
        raise NoCycleError("required nodes lie in different components")
    for v in sorted(req):
        if net.degree(v) < 2:
            raise NoCycleError(f"node {v} has degree {net.degree(v)} and cannot lie on a cycle")
    if len(req) == 1:
        return Cycle(tuple(_shortest_cycle_through(net, next(iter(req)))), quorum_id)
    bridge = _separating_bridge(net, req)
    if bridge is not None:
        raise NoCycleError(f"bridge {bridge[0]}-{bridge[1]} separates required nodes", bridge)

    deg2 = frozenset(v for v in req if net.degree(v) == 2)
    best: list[int] | None = None
    error: RoutingError | None = None
    memo: dict = {}
    for s in sorted(req):
        try:
            walk = _cycle_from_start(net, s, req, deg2, memo)
        except RoutingError as exc:
            error = exc
            continue
        if best is None or len(walk) < len(best):
            best = walk
    if best is None:
        assert error is not None
        raise error
    return Cycle(tuple(best), quorum_id)


def _route_one(args) -> Cycle | RoutingError:
    net, q, i = args
    try:
        return find_cycle(net, q, quorum_id=i)
    except RoutingError as exc:
        return RoutingError(f"quorum {i} {list(q)}: {exc}")


def route_all(net: Network, qs: QuorumSet, workers: int = 1) -> RoutingSolution:
    """One cycle per quorum. Each cycle depends only on the network and its
    quorum, so ``workers > 1`` fans the quorums out to processes without
    changing the result."""
    if net.n != qs.n:
        raise RoutingError(f"network has {net.n} nodes, quorum set covers {qs.n}")
    if not is_connected(net):
        raise RoutingError("network is not connected")
    jobs = [(net, q, i) for i, q in enumerate(qs.quorums, 1)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_route_one, jobs))
    else:
        results = [_route_one(j) for j in jobs]
    for r in results:
        if isinstance(r, RoutingError):
            raise r
    return RoutingSolution(net, qs, results)


# --- resources ------------------------------------------------------------

TRAILS_PER_CYCLE = {"paired": 2, "quad": 4}


def resource_counts(sol: RoutingSolution, config: str = "paired") -> dict[int, int]:
    """Transmitter/receiver pairs per node: one pair per occurrence in a
    cycle, per bidirectional trail pair."""
    factor = TRAILS_PER_CYCLE[config] // 2
    counts = {v: 0 for v in sol.network.nodes}
    for c in sol.cycles:
        for v in c.walk:
            counts[v] += factor
    return counts


def full_mesh_transceivers(n: int) -> int:
    return n - 1


# --- missing-pair repair --------------------------------------------------

REPAIR_ROUND_CAP = 10


@dataclass
class RepairResult:
    solution: RoutingSolution
    before_total: int
    after_total: int
    edge_count: int
    rounds: int
    unrepairable: list[tuple[int, int, Edge]] = field(default_factory=list)

    @property
    def before_mean(self) -> float:
        return self.before_total / self.edge_count if self.edge_count else 0.0

    @property
    def after_mean(self) -> float:
        return self.after_total / self.edge_count if self.edge_count else 0.0


def reroute_around(net: Network, cycle: Cycle, failed: Edge) -> Cycle | None:
    """Drop ``failed`` from the cycle and reconnect its endpoints by a shortest
    path that avoids it and every remaining cycle edge. Position 0 (the hub)
    is preserved."""
    walk = list(cycle.walk)
    edges = cycle.edges()
    if failed not in edges:
        return cycle
    k = edges.index(failed)
    a, b = walk[k], walk[(k + 1) % len(walk)]
    banned = set(edges)
    path = _shortest_path(net, a, b, banned)
    if path is None:
        return None
    return Cycle(tuple(walk[: k + 1] + list(path[1:-1]) + walk[k + 1:]), cycle.quorum_id)


def responsible_cycle(sol: RoutingSolution, s: int, d: int, failed: Edge) -> int | None:
    """Lowest-index cycle holding both endpoints whose walk uses the failed edge."""
    for idx, c in enumerate(sol.cycles):
        nodes = set(c.walk)
        if s in nodes and d in nodes and failed in c.edges():
            return idx
    return None


def repair_missing_pairs(net: Network, sol: RoutingSolution, report, round_cap: int = REPAIR_ROUND_CAP) -> RepairResult:
    """Reroute responsible cycles around the edges behind missing pairs,
    re-simulating after each pass. A pass that raises the total missing count
    is rolled back and ends the repair."""
    from .faultsim import simulate

    config, hub_offset = report.config, report.hub_offset
    before = report.total_missing
    current, current_total = sol, before
    unrepairable: dict[tuple[int, int, Edge], None] = {}
    rounds = 0
    tuples = report.missing_tuples()
    while tuples and rounds < round_cap:
        rounds += 1
        cycles = list(current.cycles)
        changed = False
        for s, d, e in tuples:
            idx = responsible_cycle(RoutingSolution(net, current.quorum_set, cycles), s, d, e)
            if idx is None:
                continue
            fixed = reroute_around(net, cycles[idx], e)
            if fixed is None:
                unrepairable[(s, d, e)] = None
                continue
            cycles[idx] = fixed
            changed = True
        if not changed:
            break
        candidate = RoutingSolution(net, current.quorum_set, cycles)
        rep = simulate(net, candidate, config, hub_offset)
        if rep.total_missing > current_total:
            break
        current, current_total = candidate, rep.total_missing
        tuples = rep.missing_tuples()
    still = set(tuples)
    stuck = [t for t in unrepairable if t in still]
    return RepairResult(current, before, current_total, len(net.edges), rounds, stuck)
