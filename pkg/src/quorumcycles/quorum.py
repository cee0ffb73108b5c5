"""Cyclic quorum sets: expansion, verification and exhaustive base search.

A base ``B`` (containing 1) over ids ``1..n`` is expanded into ``n`` quorums
by cyclic shift. All shifts pairwise intersect exactly when the differences
``(a - b) mod n`` over ``a, b`` in ``B`` cover every residue, so the search
works on difference coverage rather than on the quorums themselves.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable


class QuorumError(ValueError):
    pass


class SearchExhausted(RuntimeError):
    def __init__(self, message: str, report: "SearchReport"):
        super().__init__(message)
        self.report = report


def shift_id(node: int, shift: int, n: int) -> int:
    return (node - 1 + shift) % n + 1


@dataclass(frozen=True)
class QuorumSet:
    n: int
    base: tuple[int, ...]
    quorums: tuple[tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return len(self.base)

    def containing(self, node: int) -> list[int]:
        """0-based indices of the quorums that hold ``node``."""
        return [i for i, q in enumerate(self.quorums) if node in q]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "base": list(self.base),
            "quorums": [list(q) for q in self.quorums],
        }


def k_lower_bound(n: int) -> int:
    """Smallest K with K(K-1)+1 >= n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = 1
    while k * (k - 1) + 1 < n:
        k += 1
    return k


def expand(n: int, base: Iterable[int]) -> QuorumSet:
    """Quorum i (1-based) is the base shifted by i-1, wrapped into 1..n. The
    order within each quorum follows the base order, so quorum 8 of n=14 is
    ``8 9 10 11 1`` rather than its sorted form."""
    b = tuple(sorted(set(base)))
    if not b:
        raise QuorumError("empty base")
    bad = [a for a in b if not 1 <= a <= n]
    if bad:
        raise QuorumError(f"base elements {bad} outside 1..{n}")
    if 1 not in b:
        raise QuorumError("base must contain node 1")
    quorums = tuple(tuple(shift_id(a, s, n) for a in b) for s in range(n))
    return QuorumSet(n, b, quorums)


@dataclass
class Verification:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def difference_cover(n: int, base: Iterable[int]) -> bool:
    residues = {(a - b) % n for a in base for b in base}
    return len(residues) == n


def verify(qs: QuorumSet, brute_force: bool = False) -> Verification:
    """Check union coverage, pairwise intersection, equal quorum size and
    equal responsibility. Intersection goes through the difference-cover
    criterion unless ``brute_force`` asks for all n^2 quorum pairs."""
    n = qs.n
    problems: list[str] = []

    if len(qs.quorums) != n:
        problems.append(f"expected {n} quorums, found {len(qs.quorums)}")

    union = set().union(*map(set, qs.quorums)) if qs.quorums else set()
    missing = sorted(set(range(1, n + 1)) - union)
    if missing:
        problems.append(f"union misses nodes {missing}")

    sizes = {len(set(q)) for q in qs.quorums}
    if len(sizes) > 1:
        problems.append(f"unequal quorum sizes {sorted(sizes)}")

    if brute_force:
        sets = [set(q) for q in qs.quorums]
        witness = next(
            ((i, j) for i in range(len(sets)) for j in range(i + 1, len(sets)) if not sets[i] & sets[j]),
            None,
        )
    else:
        witness = None
        residues = {(a - b) % n for a in qs.base for b in qs.base}
        if len(residues) != n:
            gap = min(set(range(n)) - residues)
            # shifts 0 and gap are disjoint: no a - b equals gap
            witness = (0, gap)
    if witness is not None:
        i, j = witness
        problems.append(
            f"quorums S{i + 1}={list(qs.quorums[i])} and S{j + 1}={list(qs.quorums[j])} do not intersect"
        )

    counts = {v: 0 for v in range(1, n + 1)}
    for q in qs.quorums:
        for v in set(q):
            counts[v] = counts.get(v, 0) + 1
    if len(set(counts.values())) > 1:
        lo = min(counts, key=counts.get)
        hi = max(counts, key=counts.get)
        problems.append(f"unequal responsibility: node {lo} in {counts[lo]} quorums, node {hi} in {counts[hi]}")

    return Verification(not problems, problems)


@dataclass
class SearchReport:
    n: int
    k_lower: int
    found_k: int | None
    base: tuple[int, ...] | None
    nodes_explored: int
    elapsed: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k_lower": self.k_lower,
            "found_k": self.found_k,
            "base": list(self.base) if self.base else None,
            "nodes_explored": self.nodes_explored,
            "elapsed": round(self.elapsed, 6),
        }


DEFAULT_BUDGET = 10**8


def search_optimal(n: int, k_cap: int | None = None, budget: int = DEFAULT_BUDGET) -> SearchReport:
    """Exhaustive search for the smallest difference-covering base containing 1.

    Bases are tried in lexicographic order at each size starting from the
    lower bound, so the first hit is the lexicographically smallest base of
    minimum size. Works on 0-based residues internally and on unordered
    differences ``min(d, n - d)``, which must cover ``1..n//2``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    k_lo = k_lower_bound(n)
    if k_cap is None:
        k_cap = (n + 2) // 2
    if k_cap < k_lo:
        raise ValueError(f"k_cap={k_cap} below lower bound {k_lo}")

    start = time.perf_counter()
    half = n // 2
    full = ((1 << (half + 1)) - 1) & ~1  # bits 1..half
    # precomputed half-difference masks between residues
    diff_bit = [[1 << min((a - b) % n, (b - a) % n) for b in range(n)] for a in range(n)]
    explored = 0

    def dfs(chosen: list[int], covered: int, k: int) -> list[int] | None:
        nonlocal explored
        explored += 1
        if explored > budget:
            raise _Budget
        m = len(chosen)
        if covered & full == full:
            # pad with the smallest unused residues to reach size k exactly
            pad = [x for x in range(chosen[-1] + 1, n)][: k - m]
            if len(pad) == k - m:
                return chosen + pad
            return None
        r = k - m
        if r == 0:
            return None
        need = half - (covered & full).bit_count()
        # r new elements add at most r*m + r(r-1)/2 unordered differences
        if need > r * m + r * (r - 1) // 2:
            return None
        last = chosen[-1]
        for x in range(last + 1, n - r + 1):
            row = diff_bit[x]
            add = 0
            for c in chosen:
                add |= row[c]
            out = dfs(chosen + [x], covered | add, k)
            if out is not None:
                return out
        return None

    for k in range(k_lo, k_cap + 1):
        try:
            hit = dfs([0], 1, k) if n > 1 else [0]
        except _Budget:
            report = SearchReport(n, k_lo, None, None, explored, time.perf_counter() - start)
            raise SearchExhausted(f"search budget {budget} exhausted at K={k}", report) from None
        if hit is not None:
            base = tuple(x + 1 for x in hit)
            return SearchReport(n, k_lo, k, base, explored, time.perf_counter() - start)
    report = SearchReport(n, k_lo, None, None, explored, time.perf_counter() - start)
    raise SearchExhausted(f"no base up to K={k_cap}", report)


class _Budget(Exception):
    pass


# --- known table ----------------------------------------------------------

def parse_known_table(text: str) -> dict[int, tuple[int, ...]]:
    table: dict[int, tuple[int, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        if not sep:
            raise QuorumError(f"line {lineno}: expected 'n: a1 a2 ...'")
        try:
            table[int(head)] = tuple(int(t) for t in rest.split())
        except ValueError:
            raise QuorumError(f"line {lineno}: non-integer entry") from None
    return table


def default_table_text() -> str:
    return resources.files("quorumcycles.data").joinpath("known_quorums.txt").read_text(encoding="utf-8")


def load_known(path: str | Path | None, n: int) -> QuorumSet:
    """Expand and verify the base listed for ``n``; ``path=None`` uses the
    shipped table."""
    text = default_table_text() if path is None else Path(path).read_text(encoding="utf-8")
    table = parse_known_table(text)
    if n not in table:
        raise QuorumError(f"no base listed for n={n}")
    qs = expand(n, table[n])
    check = verify(qs)
    if not check:
        raise QuorumError(f"table entry for n={n} fails verification: {'; '.join(check.violations)}")
    return qs


def obtain(n: int, source: str = "table", budget: int = DEFAULT_BUDGET) -> QuorumSet:
    """``source`` is ``table`` (shipped table), ``search``, or a table path."""
    if source == "search":
        rep = search_optimal(n, budget=budget)
        return expand(n, rep.base)
    if source == "table":
        return load_known(None, n)
    return load_known(source, n)


def co_occurrence_gaps(qs: QuorumSet) -> list[tuple[int, int]]:
    """Unordered pairs that share no quorum (empty for a verified set)."""
    together = set()
    for q in qs.quorums:
        s = sorted(set(q))
        for i, a in enumerate(s):
            for b in s[i + 1:]:
                together.add((a, b))
    return [(a, b) for a in range(1, qs.n + 1) for b in range(a + 1, qs.n + 1) if (a, b) not in together]
