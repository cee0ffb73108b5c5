import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from quorumcycles import netgraph, quorum  # noqa: E402
from quorumcycles.cyclerouter import route_all  # noqa: E402

FIXTURES = Path(__file__).resolve().parent / "fixtures"

# Published NSFNET quorum cycles, transcribed row by row (quorum, cycle).
NSFNET_TABLE = [
    ((1, 2, 3, 4, 8), (1, 4, 12, 13, 8, 3, 2)),
    ((2, 3, 4, 5, 9), (2, 1, 4, 5, 6, 9, 10, 7, 3)),
    ((3, 4, 5, 6, 10), (3, 7, 10, 9, 6, 14, 4, 5)),
    ((4, 5, 6, 7, 11), (4, 12, 11, 10, 7, 3, 5, 6, 14)),
    ((5, 6, 7, 8, 12), (5, 6, 9, 10, 7, 8, 13, 12, 4)),
    ((6, 7, 8, 9, 13), (6, 9, 10, 13, 8, 7, 3, 5)),
    ((7, 8, 9, 10, 14), (7, 8, 3, 2, 14, 6, 9, 10)),
    ((8, 9, 10, 11, 1), (8, 13, 12, 11, 10, 9, 6, 14, 1, 2, 3)),
    ((9, 10, 11, 12, 2), (9, 6, 14, 2, 1, 4, 12, 11, 10)),
    ((10, 11, 12, 13, 3), (10, 11, 12, 13, 8, 3, 7)),
    ((11, 12, 13, 14, 4), (11, 10, 13, 8, 3, 2, 14, 4, 12)),
    ((12, 13, 14, 1, 5), (12, 13, 8, 3, 5, 4, 14, 1, 4)),
    ((13, 14, 1, 2, 6), (13, 10, 9, 6, 14, 2, 1, 4, 12)),
    ((14, 1, 2, 3, 7), (14, 6, 9, 10, 7, 3, 2, 1)),
]


@pytest.fixture(scope="session")
def nsfnet():
    return netgraph.reference_network("nsfnet")


@pytest.fixture(scope="session")
def nsf_quorums():
    return quorum.load_known(None, 14)


@pytest.fixture(scope="session")
def nsf_solution(nsfnet, nsf_quorums):
    return route_all(nsfnet, nsf_quorums)
