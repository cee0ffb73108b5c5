import pytest
from hypothesis import given, settings, strategies as st

from quorumcycles import quorum
from quorumcycles.quorum import QuorumError, expand, k_lower_bound, search_optimal, verify

import oracles
from conftest import NSFNET_TABLE

# sizes of optimal cyclic quorums for n = 1..30, computed once by the brute-force
# subset enumeration below and frozen here
FROZEN_K = {
    1: 1, 2: 2, 3: 2, 4: 3, 5: 3, 6: 3, 7: 3, 8: 4, 9: 4, 10: 4,
    11: 4, 12: 4, 13: 4, 14: 5, 15: 5, 16: 5, 17: 5, 18: 5, 19: 5, 20: 6,
    21: 5, 22: 6, 23: 6, 24: 6, 25: 6, 26: 6, 27: 6, 28: 6, 29: 7, 30: 7,
}


def _smallest_k_bruteforce(n):
    """Smallest K such that some K-subset containing 1 has all shifts
    pairwise intersecting, by plain enumeration."""
    from itertools import combinations

    for k in range(1, n + 1):
        for rest in combinations(range(2, n + 1), k - 1):
            if oracles.shifts_intersect_bruteforce(n, (1, *rest)):
                return k, (1, *rest)
    raise AssertionError


@pytest.mark.parametrize("n", range(1, 31))
def test_search_matches_enumeration_oracle(n):
    k, first = _smallest_k_bruteforce(n)
    rep = search_optimal(n)
    assert rep.found_k == k == FROZEN_K[n]
    assert rep.base == first  # both enumerate lexicographically


def test_nsfnet_base_matches_table():
    rep = search_optimal(14)
    assert rep.base == (1, 2, 3, 4, 8)
    qs = expand(14, rep.base)
    assert [q for q, _ in NSFNET_TABLE] == list(qs.quorums)


@pytest.mark.parametrize("n, k", [(1, 1), (2, 2), (3, 2), (4, 3), (7, 3), (8, 4), (13, 4), (14, 5), (21, 5), (22, 6), (31, 6), (32, 7)])
def test_k_lower_bound(n, k):
    assert k_lower_bound(n) == k


def test_k_lower_bound_rejects_zero():
    with pytest.raises(ValueError):
        k_lower_bound(0)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 30).flatmap(lambda n: st.tuples(st.just(n), st.sets(st.integers(2, n), max_size=n - 1))))
def test_difference_cover_equals_bruteforce(arg):
    n, rest = arg
    base = (1, *sorted(rest))
    expect = oracles.shifts_intersect_bruteforce(n, base)
    assert quorum.difference_cover(n, base) == expect
    assert bool(verify(expand(n, base))) == expect
    assert bool(verify(expand(n, base), brute_force=True)) == expect


def test_verify_reports_witness():
    check = verify(expand(7, (1, 2)))
    assert not check
    assert any("do not intersect" in v for v in check.violations)


def test_verify_catches_handmade_breakage():
    qs = expand(7, (1, 2, 4))
    broken = quorum.QuorumSet(7, qs.base, qs.quorums[:-1] + ((1, 2, 3),))
    check = verify(broken, brute_force=True)
    assert not check
    text = " ".join(check.violations)
    assert "responsibility" in text


@pytest.mark.parametrize("base, frag", [((), "empty"), ((2, 3), "node 1"), ((1, 9), "outside")])
def test_expand_rejects(base, frag):
    with pytest.raises(QuorumError, match=frag):
        expand(7, base)


def test_expand_order_follows_base():
    qs = expand(14, (1, 2, 3, 4, 8))
    assert qs.quorums[7] == (8, 9, 10, 11, 1)
    assert qs.containing(1) == [0, 7, 11, 12, 13]


def test_shipped_table_is_complete_and_valid():
    table = quorum.parse_known_table(quorum.default_table_text())
    assert set(range(1, 66)) <= set(table)
    for n, base in table.items():
        qs = expand(n, base)
        assert verify(qs), n
        assert qs.k == k_lower_bound(n) or qs.k >= k_lower_bound(n)
        if n <= 30:
            assert qs.k == FROZEN_K[n]
        assert not quorum.co_occurrence_gaps(qs)


def test_table_file_errors(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("7: 1 2 3\n")
    with pytest.raises(QuorumError, match="fails verification"):
        quorum.load_known(p, 7)
    with pytest.raises(QuorumError, match="no base"):
        quorum.load_known(p, 8)
    p.write_text("7 1 2 4\n")
    with pytest.raises(QuorumError, match="expected"):
        quorum.load_known(p, 7)


def test_obtain_sources(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("# custom\n7: 1 3 4\n")
    assert quorum.obtain(7, str(p)).base == (1, 3, 4)
    assert quorum.obtain(7, "search").base == (1, 2, 4)
    assert quorum.obtain(7, "table").k == 3


def test_budget_exhaustion_reports_progress():
    with pytest.raises(quorum.SearchExhausted) as info:
        search_optimal(40, budget=50)
    rep = info.value.report
    assert rep.found_k is None and rep.nodes_explored > 50


def test_k_cap_below_bound_rejected():
    with pytest.raises(ValueError):
        search_optimal(14, k_cap=3)


def test_shift_id_wraps():
    assert quorum.shift_id(14, 1, 14) == 1
    assert quorum.shift_id(3, 13, 14) == 2
