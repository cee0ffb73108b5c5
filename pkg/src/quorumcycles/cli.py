"""Command-line front end.

Every stochastic subcommand takes an explicit ``--seed``; identical flags give
byte-identical output files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import faultsim, netgraph, quorum
from .cyclerouter import RoutingError, RoutingSolution, repair_missing_pairs, route_all
from .lighttrail import CONFIGS


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _quorum_set(net: netgraph.Network, source: str, budget: int) -> quorum.QuorumSet:
    return quorum.obtain(net.n, source, budget)


def _solution(args, net: netgraph.Network) -> RoutingSolution:
    if getattr(args, "solution", None):
        data = json.loads(Path(args.solution).read_text(encoding="utf-8"))
        return RoutingSolution.from_dict(data, net)
    return route_all(net, _quorum_set(net, args.quorum, args.budget), workers=args.workers)


def _stats_path(out: str | None, suffix: str) -> str | None:
    if not out:
        return None
    p = Path(out)
    return str(p.with_name(p.stem + suffix))


# --- subcommands ----------------------------------------------------------

def cmd_quorum(args) -> int:
    n = args.n
    if args.search:
        try:
            report = quorum.search_optimal(n, budget=args.budget)
        except quorum.SearchExhausted as exc:
            print(f"error: {exc}", file=sys.stderr)
            print(_dumps(exc.report.to_dict()), file=sys.stderr, end="")
            return 1
        qs = quorum.expand(n, report.base)
    else:
        try:
            qs = quorum.load_known(args.table, n)
        except quorum.QuorumError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        report = None
    check = quorum.verify(qs)
    k_lo = quorum.k_lower_bound(n)
    if args.format == "json":
        payload = qs.to_dict() | {"k_lower": k_lo, "verified": check.ok, "violations": check.violations}
        if report is not None:
            payload["search"] = report.to_dict()
        _write(_dumps(payload), args.out)
    else:
        lines = [
            f"n={n} K={qs.k} lower_bound={k_lo}",
            "base: " + " ".join(map(str, qs.base)),
        ]
        lines += [f"{i:>3}: " + " ".join(map(str, q)) for i, q in enumerate(qs.quorums, 1)]
        if report is not None:
            lines.append(f"search nodes: {report.nodes_explored}")
        lines.append("verified: " + ("yes" if check.ok else "NO; " + "; ".join(check.violations)))
        _write("\n".join(lines) + "\n", args.out)
    return 0 if check.ok else 1


def solution_csv(sol: RoutingSolution) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quorum_id", "quorum", "cycle", "size"])
    for c, q in zip(sol.cycles, sol.quorum_set.quorums):
        w.writerow([c.quorum_id, " ".join(map(str, q)), " ".join(map(str, c.walk)), c.length])
    w.writerow(["average", "", "", f"{sol.average:.2f}"])
    w.writerow(["total", "", "", sol.total_links])
    return buf.getvalue()


def cmd_route(args) -> int:
    net = netgraph.resolve_network(args.network)
    try:
        sol = route_all(net, _quorum_set(net, args.quorum, args.budget), workers=args.workers)
    except RoutingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = solution_csv(sol) if args.format == "csv" else _dumps(sol.to_dict())
    _write(text, args.out)
    if args.out:
        print(f"{net.name}: {len(sol.cycles)} cycles, total {sol.total_links}, average {sol.average:.2f}")
    return 0


def cmd_simulate(args) -> int:
    net = netgraph.resolve_network(args.network)
    try:
        sol = _solution(args, net)
    except (RoutingError, quorum.QuorumError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = faultsim.simulate(net, sol, args.config)
    stats = faultsim.report_stats(report)
    sweep = faultsim.hub_sweep(net, sol, args.config) if args.hub == "sweep" else None
    if args.format == "json":
        payload = {"stats": stats.to_dict(), "per_edge": [
            {"edge": list(e), "missing": [list(p) for p in report.per_edge[e]]} for e in sorted(report.per_edge)
        ]}
        if sweep is not None:
            payload["hub_sweep"] = [{"offset": k, "mean": m} for k, m in sweep]
        _write(_dumps(payload), args.out)
    else:
        _write(report.to_csv(), args.out)
        stats_text = faultsim.stats_csv(stats)
        stats_out = args.stats or _stats_path(args.out, ".stats.csv")
        if stats_out:
            Path(stats_out).write_text(stats_text, encoding="utf-8")
        if args.out:
            sys.stdout.write(stats_text)
    if sweep is not None:
        best = min(sweep, key=lambda t: t[1])
        worst = max(sweep, key=lambda t: t[1])
        print(f"hub sweep: best offset {best[0]} mean {best[1]:.5f}; worst offset {worst[0]} mean {worst[1]:.5f}")
    return 0


def cmd_batch(args) -> int:
    net = netgraph.resolve_network(args.network)
    qs = _quorum_set(net, args.quorum, args.budget)
    res = faultsim.run_batch(
        net, qs, args.samples, args.seed, (args.config,), workers=args.workers, identity_first=args.identity_first
    )
    if args.config not in res.stats:
        print(f"error: all {args.samples} samples failed to route", file=sys.stderr)
        return 1
    stats = res.stats[args.config]
    if args.format == "json":
        _write(_dumps(stats.to_dict()), args.out)
    else:
        text = faultsim.stats_csv(stats, batch=True)
        _write(text, args.out)
        if args.out:
            sys.stdout.write(text)
    for s in res.failed:
        print(f"sample {s.index} failed: {s.error}", file=sys.stderr)
    return 0


def cmd_generate(args) -> int:
    try:
        if args.preset:
            cfg = netgraph.preset_config(args.n, args.preset, args.length, args.seed, args.connected)
        else:
            if args.alpha is None or args.beta is None:
                print("error: give --preset or both --alpha and --beta", file=sys.stderr)
                return 2
            cfg = netgraph.WaxmanConfig(args.n, args.alpha, args.beta, args.grid, args.seed, args.connected)
        net = netgraph.waxman_generate(cfg)
    except netgraph.GenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    header = f"# waxman n={cfg.n} alpha={cfg.alpha} beta={cfg.beta:.6f} grid={cfg.grid} seed={cfg.seed}\n"
    _write(header + netgraph.format_network(net), args.out)
    print(f"mean degree: {netgraph.mean_degree(net):.3f}", file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_renumber(args) -> int:
    net = netgraph.resolve_network(args.network)
    qs = _quorum_set(net, args.quorum, args.budget)
    seeds: list[int | None] = list(faultsim.sample_seeds(args.seed, args.count))
    if args.identity_first:
        seeds[0] = None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample", "perm_seed", "total_links"])
    totals = []
    failed = 0
    for i, s in enumerate(seeds):
        relabeled, _ = netgraph.renumber(net, s)
        try:
            total = route_all(relabeled, qs).total_links
        except RoutingError as exc:
            failed += 1
            print(f"numbering {i} failed: {exc}", file=sys.stderr)
            w.writerow([i, "identity" if s is None else s, "failed"])
            continue
        totals.append(total)
        w.writerow([i, "identity" if s is None else s, total])
    _write(buf.getvalue(), args.out)
    original = route_all(net, qs).total_links
    if totals:
        lo, hi = min(totals), max(totals)
        spread = 100.0 * (hi - lo) / lo
        summary = f"min {lo} max {hi} spread {spread:.2f}% original {original} failed {failed}"
    else:
        summary = f"no numbering routed; original {original} failed {failed}"
    print(summary, file=sys.stdout if args.out else sys.stderr)
    return 0


def cmd_repair(args) -> int:
    net = netgraph.resolve_network(args.network)
    try:
        sol = _solution(args, net)
    except (RoutingError, quorum.QuorumError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = faultsim.simulate(net, sol, args.config)
    res = repair_missing_pairs(net, sol, report)
    payload = res.solution.to_dict() | {
        "repair": {
            "before_mean": res.before_mean,
            "after_mean": res.after_mean,
            "rounds": res.rounds,
            "unrepairable": [{"s": s, "d": d, "edge": list(e)} for s, d, e in res.unrepairable],
        }
    }
    _write(_dumps(payload), args.out)
    msg = f"before {res.before_mean:.5f} after {res.after_mean:.5f} rounds {res.rounds} unrepairable {len(res.unrepairable)}"
    print(msg, file=sys.stdout if args.out else sys.stderr)
    return 0


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quorumcycles", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, network=True, seed=False):
        if network:
            sp.add_argument("--network", required=True, help="network file or shipped name (nsfnet, arpanet, ...)")
        if seed:
            sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--workers", type=int, default=1)

    def quorum_source(sp):
        sp.add_argument("--quorum", default="table", help="'table' (shipped), 'search', or a table file")
        sp.add_argument("--budget", type=int, default=quorum.DEFAULT_BUDGET)

    sp = sub.add_parser("quorum", help="build and verify a cyclic quorum set")
    sp.add_argument("--n", type=int, required=True)
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--search", action="store_true", help="exhaustive search")
    mode.add_argument("--lookup", action="store_true", help="read the known table (default)")
    sp.add_argument("--table", help="known-quorum table file (default: shipped table)")
    sp.add_argument("--budget", type=int, default=quorum.DEFAULT_BUDGET)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(func=cmd_quorum)

    sp = sub.add_parser("route", help="route one cycle per quorum")
    common(sp)
    quorum_source(sp)
    sp.set_defaults(func=cmd_route, format="json")

    sp = sub.add_parser("simulate", help="single-link fault simulation")
    common(sp)
    quorum_source(sp)
    sp.add_argument("--solution", help="solution JSON from 'route' (default: route now)")
    sp.add_argument("--config", choices=CONFIGS, default="paired")
    sp.add_argument("--hub", choices=("first", "sweep"), default="first")
    sp.add_argument("--stats", help="stats CSV path (default: <out>.stats.csv)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("batch", help="fault statistics over random relabelings")
    common(sp, seed=True)
    quorum_source(sp)
    sp.add_argument("--samples", type=int, required=True)
    sp.add_argument("--config", choices=CONFIGS, default="paired")
    sp.add_argument("--hub", choices=("first",), default="first")
    sp.add_argument("--identity-first", action="store_true", help="sample 0 keeps the original labels")
    sp.set_defaults(func=cmd_batch)

    sp = sub.add_parser("generate", help="Waxman random network")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--preset", choices=netgraph.DENSITY_PRESETS)
    sp.add_argument("--length", choices=tuple(netgraph.LENGTH_ALPHA), default="long")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--grid", type=float, default=1.0)
    sp.add_argument("--connected", action="store_true", help="redraw until connected")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("renumber", help="total links across random node numberings")
    common(sp, seed=True)
    quorum_source(sp)
    sp.add_argument("--count", "--samples", dest="count", type=int, required=True)
    sp.add_argument("--identity-first", action="store_true")
    sp.set_defaults(func=cmd_renumber)

    sp = sub.add_parser("repair", help="reroute cycles behind missing pairs")
    common(sp)
    quorum_source(sp)
    sp.add_argument("--solution")
    sp.add_argument("--config", choices=CONFIGS, default="paired")
    sp.set_defaults(func=cmd_repair, format="json")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except netgraph.NetworkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
