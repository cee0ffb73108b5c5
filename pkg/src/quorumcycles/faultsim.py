"""Single-link fault simulation over a routed solution.

For every network link, the link is failed and each ordered node pair is
checked against every trail of every cycle. A pair is missing when no trail
anywhere still carries it.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import lighttrail
from .cyclerouter import RoutingError, RoutingSolution, route_all
from .netgraph import Edge, Network, apply_permutation, norm_edge, random_permutation
from .quorum import QuorumSet

Pair = tuple[int, int]


@dataclass
class FaultReport:
    per_edge: dict[Edge, list[Pair]]
    total_pairs: int
    config: str
    hub_offset: int = 0
    network: str = ""
    n: int = 0

    def counts(self) -> list[int]:
        return [len(self.per_edge[e]) for e in sorted(self.per_edge)]

    @property
    def total_missing(self) -> int:
        return sum(len(v) for v in self.per_edge.values())

    @property
    def mean_missing(self) -> float:
        return self.total_missing / len(self.per_edge) if self.per_edge else 0.0

    def missing_tuples(self) -> list[tuple[int, int, Edge]]:
        return [(s, d, e) for e in sorted(self.per_edge) for s, d in self.per_edge[e]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["edge_u", "edge_v", "missing_count", "missing_pairs"])
        for (u, v) in sorted(self.per_edge):
            pairs = self.per_edge[(u, v)]
            w.writerow([u, v, len(pairs), ";".join(f"{s}>{d}" for s, d in pairs)])
        return buf.getvalue()


@lru_cache(maxsize=256)
def _triu(m: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(m, 1)


def _mark_segment(mat: np.ndarray, seg: tuple[int, ...]) -> None:
    if len(seg) < 2:
        return
    idx = np.asarray(seg)
    ii, jj = _triu(len(seg))
    mat[idx[ii], idx[jj]] = True


def _trailsets(sol: RoutingSolution, config: str, hub_offset: int) -> list[lighttrail.TrailSet]:
    return [lighttrail.build(c, config, hub_offset % c.length) for c in sol.cycles]


def _cycle_masks(n: int, trailsets) -> list[np.ndarray]:
    out = []
    for ts in trailsets:
        m = np.zeros((n + 1, n + 1), dtype=bool)
        for t in ts.trails:
            _mark_segment(m, t.order)
        out.append(m)
    return out


def _missing_for(n: int, failed: Edge, trailsets, masks, edge_sets) -> list[Pair]:
    reach = np.zeros((n + 1, n + 1), dtype=bool)
    for ts, mask, used in zip(trailsets, masks, edge_sets):
        if failed not in used:
            reach |= mask
            continue
        for t in ts.trails:
            for seg in t.segments(failed):
                _mark_segment(reach, seg)
    np.fill_diagonal(reach, True)
    miss = np.argwhere(~reach[1:, 1:]) + 1
    return [(int(s), int(d)) for s, d in miss]


def simulate(net: Network, sol: RoutingSolution, config: str = "paired", hub_offset: int = 0) -> FaultReport:
    """Fail each network link in turn and list the ordered pairs no trail can
    still carry. Links used by no cycle miss nothing."""
    n = net.n
    trailsets = _trailsets(sol, config, hub_offset)
    masks = _cycle_masks(n, trailsets)
    edge_sets = [set(c.edges()) for c in sol.cycles]
    per_edge = {e: _missing_for(n, e, trailsets, masks, edge_sets) for e in net.sorted_edges}
    return FaultReport(per_edge, n * (n - 1), config, hub_offset, net.name, n)


def simulate_edge(net: Network, sol: RoutingSolution, failed: Edge, config: str = "paired", hub_offset: int = 0) -> list[Pair]:
    failed = norm_edge(*failed)
    if failed not in net.edges:
        raise ValueError(f"{failed[0]}-{failed[1]} is not a link of the network")
    trailsets = _trailsets(sol, config, hub_offset)
    masks = _cycle_masks(net.n, trailsets)
    edge_sets = [set(c.edges()) for c in sol.cycles]
    return _missing_for(net.n, failed, trailsets, masks, edge_sets)


def no_fault_missing(net: Network, sol: RoutingSolution, config: str = "paired") -> list[Pair]:
    """Ordered pairs unreachable with every link intact."""
    n = net.n
    reach = np.zeros((n + 1, n + 1), dtype=bool)
    for m in _cycle_masks(n, _trailsets(sol, config, 0)):
        reach |= m
    np.fill_diagonal(reach, True)
    return [(int(s), int(d)) for s, d in np.argwhere(~reach[1:, 1:]) + 1]


def coverage(report: FaultReport) -> float:
    if not report.per_edge:
        raise ValueError("empty fault report")
    return 100.0 * (1.0 - report.mean_missing / report.total_pairs)


def hub_sweep(net: Network, sol: RoutingSolution, config: str = "paired") -> list[tuple[int, float]]:
    """Mean missing pairs for every common hub offset (offset mod cycle length)."""
    longest = max(c.length for c in sol.cycles)
    return [(k, simulate(net, sol, config, k).mean_missing) for k in range(longest)]


# --- statistics -----------------------------------------------------------

STATS_HEADER = ["network", "nodes", "total_pairs", "high", "mean", "ci95", "low", "coverage_pct"]
BATCH_HEADER = STATS_HEADER + ["samples", "failed_samples"]


@dataclass
class ExperimentStats:
    network: str
    nodes: int
    total_pairs: int
    samples: int
    observations: int
    mean_missing: float
    ci95_halfwidth: float
    high: int
    low: int
    failed: int = 0

    @property
    def coverage_pct(self) -> float:
        return 100.0 * (1.0 - self.mean_missing / self.total_pairs)

    def row(self) -> list[str]:
        return [
            self.network,
            str(self.nodes),
            str(self.total_pairs),
            str(self.high),
            f"{self.mean_missing:.5f}",
            f"{self.ci95_halfwidth:.5f}",
            str(self.low),
            f"{self.coverage_pct:.3f}",
        ]

    def to_dict(self) -> dict:
        return {
            "network": self.network,
            "nodes": self.nodes,
            "total_pairs": self.total_pairs,
            "high": self.high,
            "mean": self.mean_missing,
            "ci95": self.ci95_halfwidth,
            "low": self.low,
            "coverage_pct": self.coverage_pct,
            "samples": self.samples,
            "failed_samples": self.failed,
        }


def stats_from_counts(counts, total_pairs: int, network: str, nodes: int, samples: int, failed: int = 0) -> ExperimentStats:
    """One observation per (sample, failed link); CI by normal approximation."""
    arr = np.asarray(counts, dtype=float)
    if arr.size == 0:
        raise ValueError("no observations")
    sd = arr.std(ddof=1) if arr.size > 1 else 0.0
    return ExperimentStats(
        network=network,
        nodes=nodes,
        total_pairs=total_pairs,
        samples=samples,
        observations=int(arr.size),
        mean_missing=float(arr.mean()),
        ci95_halfwidth=float(1.96 * sd / math.sqrt(arr.size)),
        high=int(arr.max()),
        low=int(arr.min()),
        failed=failed,
    )


def report_stats(report: FaultReport) -> ExperimentStats:
    return stats_from_counts(report.counts(), report.total_pairs, report.network, report.n, 1)


def stats_csv(stats: ExperimentStats, batch: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BATCH_HEADER if batch else STATS_HEADER)
    row = stats.row()
    if batch:
        row += [str(stats.samples), str(stats.failed)]
    w.writerow(row)
    return buf.getvalue()


# --- batch experiments ----------------------------------------------------

def sample_seeds(seed: int, samples: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(samples)]


@dataclass
class SampleResult:
    index: int
    perm_seed: int | None
    total_links: int | None = None
    reports: dict[str, dict[Edge, list[Pair]]] = field(default_factory=dict)
    error: str | None = None


def run_sample(net: Network, qs: QuorumSet, index: int, perm_seed: int | None, configs: tuple[str, ...], hub_offset: int = 0) -> SampleResult:
    perm = random_permutation(net.n, perm_seed)
    relabeled = apply_permutation(net, perm)
    try:
        sol = route_all(relabeled, qs)
    except RoutingError as exc:
        return SampleResult(index, perm_seed, error=str(exc))
    out = SampleResult(index, perm_seed, sol.total_links)
    for cfg in configs:
        out.reports[cfg] = simulate(relabeled, sol, cfg, hub_offset).per_edge
    return out


def _run_sample_args(args):
    return run_sample(*args)


@dataclass
class BatchResult:
    stats: dict[str, ExperimentStats]
    samples: list[SampleResult]

    @property
    def failed(self) -> list[SampleResult]:
        return [s for s in self.samples if s.error is not None]


def run_batch(
    net: Network,
    qs: QuorumSet,
    samples: int,
    seed: int,
    configs: tuple[str, ...] = ("paired",),
    workers: int = 1,
    identity_first: bool = False,
    hub_offset: int = 0,
) -> BatchResult:
    """Route and simulate ``samples`` random relabelings of ``net``. Sample
    ``i`` uses the i-th seed drawn from ``SeedSequence(seed)``; with
    ``identity_first`` sample 0 keeps the original labels."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    seeds: list[int | None] = list(sample_seeds(seed, samples))
    if identity_first:
        seeds[0] = None
    jobs = [(net, qs, i, s, configs, hub_offset) for i, s in enumerate(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_sample_args, jobs, chunksize=max(1, samples // (4 * workers))))
    else:
        results = [_run_sample_args(j) for j in jobs]

    n = net.n
    ok = [r for r in results if r.error is None]
    failed = len(results) - len(ok)
    stats = {}
    for cfg in configs:
        counts = [len(m) for r in ok for _, m in sorted(r.reports[cfg].items())]
        if counts:
            stats[cfg] = stats_from_counts(counts, n * (n - 1), net.name, n, len(ok), failed)
    return BatchResult(stats, results)


def batch_experiment(
    net: Network,
    qs: QuorumSet,
    samples: int,
    seed: int,
    config: str = "paired",
    workers: int = 1,
    identity_first: bool = False,
) -> ExperimentStats:
    res = run_batch(net, qs, samples, seed, (config,), workers, identity_first)
    if config not in res.stats:
        raise RoutingError(f"all {samples} samples failed to route")
    return res.stats[config]
