"""Light-trails laid over a routed cycle.

A trail starts and ends at its hub; the hub's shutter is off, so a trail is
a line ``t0 .. tm`` with ``t0 == tm == hub`` rather than a loop. Node ``a``
reaches node ``b`` on a trail when ``a`` occurs before ``b`` and no failed
link lies between the two positions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cyclerouter import Cycle
from .netgraph import Edge, norm_edge

CONFIGS = ("paired", "quad")


@dataclass(frozen=True)
class LightTrail:
    order: tuple[int, ...]
    direction: str  # "forward" | "reverse"

    @property
    def hub(self) -> int:
        return self.order[0]

    def edges(self) -> list[Edge]:
        o = self.order
        return [norm_edge(o[k], o[k + 1]) for k in range(len(o) - 1)]

    def segments(self, failed: Edge | None) -> list[tuple[int, ...]]:
        """Maximal runs of the trail not crossing ``failed``."""
        if failed is None:
            return [self.order]
        out = []
        start = 0
        o = self.order
        for k in range(len(o) - 1):
            if norm_edge(o[k], o[k + 1]) == failed:
                out.append(o[start: k + 1])
                start = k + 1
        out.append(o[start:])
        return out


@dataclass(frozen=True)
class TrailSet:
    cycle: Cycle
    config: str
    trails: tuple[LightTrail, ...]
    hubs: tuple[int, ...]


def _pair_at(walk: tuple[int, ...], hub_pos: int) -> tuple[LightTrail, LightTrail]:
    rotated = walk[hub_pos:] + walk[:hub_pos]
    forward = rotated + (rotated[0],)
    return LightTrail(forward, "forward"), LightTrail(tuple(reversed(forward)), "reverse")


def build_paired(cycle: Cycle, hub_pos: int = 0) -> TrailSet:
    if not 0 <= hub_pos < cycle.length:
        raise IndexError(f"hub position {hub_pos} outside walk of length {cycle.length}")
    return TrailSet(cycle, "paired", _pair_at(cycle.walk, hub_pos), (hub_pos,))


def build_quad(cycle: Cycle, hub_pos: int = 0) -> TrailSet:
    """Paired trails at ``hub_pos`` plus a second pair hubbed across the cycle."""
    if not 0 <= hub_pos < cycle.length:
        raise IndexError(f"hub position {hub_pos} outside walk of length {cycle.length}")
    if cycle.length < 3:
        raise ValueError("quad trails need a cycle of length >= 3")
    second = (hub_pos + cycle.length // 2) % cycle.length
    trails = _pair_at(cycle.walk, hub_pos) + _pair_at(cycle.walk, second)
    return TrailSet(cycle, "quad", trails, (hub_pos, second))


def build(cycle: Cycle, config: str, hub_pos: int = 0) -> TrailSet:
    if config == "paired":
        return build_paired(cycle, hub_pos)
    if config == "quad":
        return build_quad(cycle, hub_pos)
    raise ValueError(f"unknown trail configuration {config!r}")


def reachable(ts: TrailSet, failed: Edge | None, u: int, v: int) -> bool:
    if u == v:
        raise ValueError("reachability needs two distinct nodes")
    if failed is not None:
        failed = norm_edge(*failed)
    for trail in ts.trails:
        for seg in trail.segments(failed):
            seen_u = False
            for node in seg:
                if node == u:
                    seen_u = True
                elif node == v and seen_u:
                    return True
    return False


def reachable_pairs(ts: TrailSet, failed: Edge | None) -> set[tuple[int, int]]:
    pairs = set()
    for trail in ts.trails:
        for seg in trail.segments(failed):
            for i, a in enumerate(seg):
                for b in seg[i + 1:]:
                    if a != b:
                        pairs.add((a, b))
    return pairs


def dump(ts: TrailSet) -> list[str]:
    return [f"{t.direction}@{t.hub}: {' '.join(map(str, t.order))}" for t in ts.trails]
