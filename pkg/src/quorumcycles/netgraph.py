"""Network graph model, file I/O, reference topologies, Waxman generation
and node renumbering.

Node ids are 1-based throughout. A :class:`Network` is immutable; derived
structures (adjacency, hop distances) are computed lazily and cached.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

Edge = tuple[int, int]

REFERENCE_NETWORKS = ("nsfnet", "arpanet", "american", "chinese")
CONNECT_RETRY_CAP = 1000


class NetworkError(ValueError):
    """Raised for malformed network files and invariant violations."""


def norm_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Network:
    n: int
    edges: frozenset[Edge]
    name: str = ""

    def __post_init__(self):
        if self.n < 0:
            raise NetworkError(f"negative node count {self.n}")
        for u, v in self.edges:
            if u == v:
                raise NetworkError(f"self-loop on node {u}")
            if u > v:
                raise NetworkError(f"edge ({u},{v}) not normalized")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise NetworkError(f"edge ({u},{v}) outside 1..{self.n}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], name: str = "") -> "Network":
        seen: set[Edge] = set()
        for u, v in edges:
            if u == v:
                raise NetworkError(f"self-loop on node {u}")
            e = norm_edge(u, v)
            if e in seen:
                raise NetworkError(f"duplicate edge {e}")
            seen.add(e)
        return cls(n, frozenset(seen), name)

    @property
    def nodes(self) -> range:
        return range(1, self.n + 1)

    @cached_property
    def adj(self) -> dict[int, tuple[int, ...]]:
        nbrs: dict[int, list[int]] = {v: [] for v in self.nodes}
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return {v: tuple(sorted(ns)) for v, ns in nbrs.items()}

    @cached_property
    def sorted_edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edges))

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return norm_edge(u, v) in self.edges

    @cached_property
    def bridge_list(self) -> tuple[Edge, ...]:
        return tuple(bridges(self))

    @cached_property
    def hop_distances(self) -> dict[int, dict[int, int]]:
        """All-pairs hop counts; unreachable pairs are absent."""
        return {s: bfs_distances(self, s) for s in self.nodes}

    def __reduce__(self):
        # cached properties are rebuilt on the other side of a pickle
        return (Network, (self.n, self.edges, self.name))


def bfs_distances(net: Network, source: int, banned: frozenset[Edge] | set[Edge] = frozenset()) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    adj = net.adj
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist and (not banned or norm_edge(u, w) not in banned):
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


# --- file I/O -------------------------------------------------------------

def parse_network(text: str, name: str = "") -> Network:
    rows: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rows.append((lineno, line.split()))
    if not rows:
        raise NetworkError("empty network file")
    lineno, header = rows[0]
    if len(header) != 2:
        raise NetworkError(f"line {lineno}: expected header 'n m', got {' '.join(header)!r}")
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise NetworkError(f"line {lineno}: non-integer header") from None
    if len(rows) - 1 != m:
        raise NetworkError(f"header promises {m} edges, file has {len(rows) - 1}")
    pairs = []
    for lineno, parts in rows[1:]:
        if len(parts) != 2:
            raise NetworkError(f"line {lineno}: expected 'u v'")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise NetworkError(f"line {lineno}: non-integer node id") from None
    return Network.from_edges(n, pairs, name)


def load_network(path: str | Path) -> Network:
    path = Path(path)
    return parse_network(path.read_text(encoding="utf-8"), name=path.stem)


def format_network(net: Network) -> str:
    lines = [f"{net.n} {len(net.edges)}"]
    lines += [f"{u} {v}" for u, v in net.sorted_edges]
    return "\n".join(lines) + "\n"


def save_network(net: Network, path: str | Path) -> None:
    Path(path).write_text(format_network(net), encoding="utf-8")


def reference_network(name: str) -> Network:
    """Load one of the shipped topologies (nsfnet, arpanet, american, chinese, ring5)."""
    try:
        text = resources.files("quorumcycles.data").joinpath(f"{name}.net").read_text(encoding="utf-8")
    except FileNotFoundError:
        raise NetworkError(f"no shipped network named {name!r}") from None
    return parse_network(text, name=name)


def resolve_network(source: str) -> Network:
    """Accept either a file path or the name of a shipped topology."""
    path = Path(source)
    if path.exists():
        return load_network(path)
    return reference_network(source.removesuffix(".net"))


def ring(n: int) -> Network:
    return Network.from_edges(n, [(i, i % n + 1) for i in range(1, n + 1)], name=f"ring{n}")


# --- validation -----------------------------------------------------------

def components(net: Network) -> list[set[int]]:
    seen: set[int] = set()
    out = []
    for s in net.nodes:
        if s not in seen:
            comp = set(bfs_distances(net, s))
            seen |= comp
            out.append(comp)
    return out


def is_connected(net: Network) -> bool:
    return net.n <= 1 or len(bfs_distances(net, 1)) == net.n


def bridges(net: Network) -> list[Edge]:
    """Bridges via iterative DFS low-link."""
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    found: list[Edge] = []
    counter = 0
    for root in net.nodes:
        if root in disc:
            continue
        disc[root] = low[root] = counter
        counter += 1
        stack = [(root, 0, iter(net.adj[root]))]
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if w == parent:
                    continue
                if w in disc:
                    low[v] = min(low[v], disc[w])
                else:
                    disc[w] = low[w] = counter
                    counter += 1
                    stack.append((w, v, iter(net.adj[w])))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    low[p] = min(low[p], low[v])
                    if low[v] > disc[p]:
                        found.append(norm_edge(p, v))
    return sorted(found)


def is_two_edge_connected(net: Network) -> bool:
    return net.n >= 2 and is_connected(net) and not bridges(net)


@dataclass
class Findings:
    connected: bool
    two_edge_connected: bool
    min_degree: int
    mean_degree: float
    degree_two_nodes: int
    bridges: list[Edge] = field(default_factory=list)

    def lines(self) -> list[str]:
        return [
            f"connected: {self.connected}",
            f"2-edge-connected: {self.two_edge_connected}",
            f"min degree: {self.min_degree}",
            f"mean degree: {self.mean_degree:.3f}",
            f"degree-2 nodes: {self.degree_two_nodes}",
            f"bridges: {' '.join(f'{u}-{v}' for u, v in self.bridges) or 'none'}",
        ]


def validate(net: Network) -> Findings:
    degs = [net.degree(v) for v in net.nodes]
    br = bridges(net)
    connected = is_connected(net)
    return Findings(
        connected=connected,
        two_edge_connected=net.n >= 2 and connected and not br,
        min_degree=min(degs, default=0),
        mean_degree=(2 * len(net.edges) / net.n) if net.n else 0.0,
        degree_two_nodes=sum(1 for d in degs if d == 2),
        bridges=br,
    )


def mean_degree(net: Network) -> float:
    return 2 * len(net.edges) / net.n if net.n else 0.0


# --- Waxman generation ----------------------------------------------------

@dataclass(frozen=True)
class WaxmanConfig:
    n: int
    alpha: float
    beta: float
    grid: float = 1.0
    seed: int = 0
    require_connected: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must be in (0, 1]")
        if not self.grid > 0:
            raise ValueError("grid must be > 0")


class GenerationError(RuntimeError):
    pass


def waxman_probability(d, alpha: float, beta: float, max_dist: float):
    return beta * np.exp(-np.asarray(d) / (alpha * max_dist))


def _waxman_draw(cfg: WaxmanConfig, rng: np.random.Generator) -> Network:
    pts = rng.uniform(0.0, cfg.grid, size=(cfg.n, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    prob = waxman_probability(dist, cfg.alpha, cfg.beta, cfg.grid * math.sqrt(2))
    iu, ju = np.triu_indices(cfg.n, 1)
    hit = rng.random(iu.size) < prob[iu, ju]
    return Network.from_edges(cfg.n, zip((iu[hit] + 1).tolist(), (ju[hit] + 1).tolist()))


def waxman_generate(cfg: WaxmanConfig) -> Network:
    """Place nodes uniformly in the grid square, then join each pair with
    probability ``beta * exp(-d / (alpha * L))``, L being the grid diagonal."""
    rng = np.random.default_rng(cfg.seed)
    for _ in range(CONNECT_RETRY_CAP):
        net = _waxman_draw(cfg, rng)
        if not cfg.require_connected or is_connected(net):
            return Network(net.n, net.edges, name=f"waxman-n{cfg.n}-s{cfg.seed}")
    raise GenerationError(
        f"no connected graph after {CONNECT_RETRY_CAP} draws (n={cfg.n}, alpha={cfg.alpha}, beta={cfg.beta})"
    )


DENSITY_PRESETS = ("sparse", "medium", "dense")
LENGTH_ALPHA = {"short": 0.25, "long": 0.4}
_CALIBRATION_DRAWS = 60


def target_mean_degree(n: int, density: str) -> float:
    lg = math.log2(n)
    return {"sparse": 2.0, "medium": (2.0 + lg) / 2.0, "dense": lg}[density]


def _empirical_degree(n: int, alpha: float, beta: float, require_connected: bool) -> float:
    """Mean degree over a fixed calibration batch; the batch seed is constant so
    the calibrated beta is deterministic."""
    total = 0.0
    for i in range(_CALIBRATION_DRAWS):
        cfg = WaxmanConfig(n, alpha, beta, seed=10_000 + i, require_connected=require_connected)
        try:
            total += mean_degree(waxman_generate(cfg))
        except GenerationError:
            # too sparse to connect: push the search toward larger beta
            return -math.inf
    return total / _CALIBRATION_DRAWS


@lru_cache(maxsize=None)
def calibrate_beta(n: int, alpha: float, target: float, require_connected: bool = True) -> float:
    """Binary search on beta so the generated mean degree hits ``target``."""
    lo, hi = 1e-4, 1.0
    if _empirical_degree(n, alpha, hi, require_connected) < target:
        raise GenerationError(f"target mean degree {target:.2f} unreachable with alpha={alpha} for n={n}")
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        deg = _empirical_degree(n, alpha, mid, require_connected)
        if deg < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-4:
            break
    return 0.5 * (lo + hi)


def preset_config(n: int, density: str, length: str, seed: int, require_connected: bool = False) -> WaxmanConfig:
    if density not in DENSITY_PRESETS:
        raise ValueError(f"density must be one of {DENSITY_PRESETS}")
    alpha = LENGTH_ALPHA[length]
    beta = calibrate_beta(n, alpha, target_mean_degree(n, density), require_connected)
    return WaxmanConfig(n, alpha, beta, seed=seed, require_connected=require_connected)


# --- renumbering ----------------------------------------------------------

def identity_permutation(n: int) -> tuple[int, ...]:
    return tuple(range(n + 1))


def random_permutation(n: int, seed: int | None) -> tuple[int, ...]:
    """Return ``perm`` with ``perm[old] = new`` (index 0 unused). ``seed=None``
    is the identity convention."""
    if seed is None:
        return identity_permutation(n)
    order = np.random.default_rng(seed).permutation(n) + 1
    return (0, *order.tolist())


def apply_permutation(net: Network, perm: tuple[int, ...]) -> Network:
    return Network(
        net.n,
        frozenset(norm_edge(perm[u], perm[v]) for u, v in net.edges),
        net.name,
    )


def renumber(net: Network, seed: int | None) -> tuple[Network, tuple[int, ...]]:
    perm = random_permutation(net.n, seed)
    return apply_permutation(net, perm), perm
