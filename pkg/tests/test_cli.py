import csv
import json
import subprocess
import sys

import pytest

from quorumcycles import netgraph
from quorumcycles.cli import main
from quorumcycles.cyclerouter import RoutingSolution

from conftest import FIXTURES

BARBELL = "6 7\n1 2\n2 3\n1 3\n3 4\n4 5\n5 6\n4 6\n"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def stats_row(path):
    with open(path) as fh:
        return next(csv.DictReader(fh))


# --- quorum --------------------------------------------------------------

def test_quorum_search_14(capsys):
    code, out, _ = run(capsys, "quorum", "--n", "14", "--search")
    assert code == 0
    assert out.startswith("n=14 K=5 lower_bound=5\nbase: 1 2 3 4 8\n")
    assert " 8: 8 9 10 11 1" in out and "verified: yes" in out


@pytest.mark.parametrize("n, k", [(3, 2), (20, 6)])
def test_quorum_search_sizes(capsys, n, k):
    code, out, _ = run(capsys, "quorum", "--n", str(n), "--search", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["k"] == k and data["verified"] and data["search"]["found_k"] == k


def test_quorum_lookup_default(capsys):
    code, out, _ = run(capsys, "quorum", "--n", "7")
    assert code == 0 and "base: 1 2 4" in out


def test_quorum_exhaustion_exit(capsys):
    code, _, err = run(capsys, "quorum", "--n", "40", "--search", "--budget", "10")
    assert code == 1 and "exhausted" in err


def test_quorum_bad_table_exit(capsys, tmp_path):
    t = tmp_path / "bad.txt"
    t.write_text("7: 1 2 3\n")
    code, _, err = run(capsys, "quorum", "--n", "7", "--table", str(t))
    assert code == 1 and "verification" in err


# --- route ---------------------------------------------------------------

def test_route_nsfnet_table_shape(capsys):
    code, out, _ = run(capsys, "route", "--network", "nsfnet", "--format", "csv")
    rows = list(csv.reader(out.splitlines()))
    assert code == 0 and rows[0] == ["quorum_id", "quorum", "cycle", "size"]
    assert rows[8][1] == "8 9 10 11 1"
    assert rows[-1][0] == "total" and int(rows[-1][3]) <= 144
    assert rows[-2][0] == "average" and float(rows[-2][3]) <= 10.3


def test_route_ring5(capsys):
    code, out, _ = run(capsys, "route", "--network", "ring5")
    assert code == 0 and json.loads(out)["total_links"] == 25


def test_route_arpanet_cycles_validate(capsys, tmp_path):
    out = tmp_path / "arpa.json"
    code, _, _ = run(capsys, "route", "--network", "arpanet", "--out", str(out))
    assert code == 0
    sol = RoutingSolution.from_dict(json.loads(out.read_text()), netgraph.reference_network("arpanet"))
    assert len(sol.cycles) == 20 and not sol.problems()


def test_route_failure_names_quorum(capsys, tmp_path):
    p = tmp_path / "barbell.net"
    p.write_text(BARBELL)
    code, _, err = run(capsys, "route", "--network", str(p))
    assert code == 1 and "quorum" in err and "bridge" in err


def test_missing_network_exit(capsys):
    code, _, err = run(capsys, "route", "--network", "no_such_net")
    assert code == 1 and "no shipped network" in err


# --- simulate ------------------------------------------------------------

@pytest.fixture(scope="module")
def nsf_solution_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("sol") / "nsf.json"
    assert main(["route", "--network", "nsfnet", "--out", str(p)]) == 0
    return p


def test_simulate_paired_and_quad(capsys, tmp_path, nsf_solution_file):
    paired, quad = tmp_path / "p.csv", tmp_path / "q.csv"
    for cfg, out in (("paired", paired), ("quad", quad)):
        code, _, _ = run(capsys, "simulate", "--network", "nsfnet", "--solution", str(nsf_solution_file), "--config", cfg, "--out", str(out))
        assert code == 0
    p = stats_row(tmp_path / "p.stats.csv")
    q = stats_row(tmp_path / "q.stats.csv")
    assert float(p["coverage_pct"]) > 99.0
    assert float(q["coverage_pct"]) > float(p["coverage_pct"])
    assert p["total_pairs"] == "182"


@pytest.mark.parametrize("config", ["paired", "quad"])
def test_simulate_ring5_fixture_bytes(capsys, tmp_path, config):
    out = tmp_path / "r.csv"
    code, _, _ = run(capsys, "simulate", "--network", "ring5", "--solution", str(FIXTURES / "ring5_solution.json"), "--config", config, "--out", str(out))
    assert code == 0
    assert out.read_bytes() == (FIXTURES / f"ring5_{config}.csv").read_bytes()


def test_simulate_mismatched_solution(capsys, nsf_solution_file):
    code, _, err = run(capsys, "simulate", "--network", "arpanet", "--solution", str(nsf_solution_file))
    assert code == 1 and "n=14" in err


def test_simulate_hub_sweep(capsys, nsf_solution_file):
    code, out, _ = run(capsys, "simulate", "--network", "nsfnet", "--solution", str(nsf_solution_file), "--hub", "sweep", "--format", "json")
    assert code == 0
    data = json.loads(out.split("hub sweep:")[0])
    assert data["hub_sweep"][0]["mean"] == data["stats"]["mean"]
    assert "best offset" in out


# --- batch ---------------------------------------------------------------

def test_batch_identity_equals_simulate(capsys, tmp_path, nsf_solution_file):
    run(capsys, "simulate", "--network", "nsfnet", "--solution", str(nsf_solution_file), "--out", str(tmp_path / "s.csv"))
    code, _, _ = run(capsys, "batch", "--network", "nsfnet", "--samples", "1", "--seed", "0", "--identity-first", "--out", str(tmp_path / "b.csv"))
    assert code == 0
    s, b = stats_row(tmp_path / "s.stats.csv"), stats_row(tmp_path / "b.csv")
    assert all(s[k] == b[k] for k in s)
    assert b["samples"] == "1" and b["failed_samples"] == "0"


def test_batch_bytes_identical_across_workers(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "batch", "--network", "nsfnet", "--samples", "4", "--seed", "17", "--out", str(a))
    run(capsys, "batch", "--network", "nsfnet", "--samples", "4", "--seed", "17", "--workers", "2", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_batch_all_failed_exit(capsys, tmp_path):
    p = tmp_path / "barbell.net"
    p.write_text(BARBELL)
    code, _, err = run(capsys, "batch", "--network", str(p), "--samples", "2", "--seed", "1")
    assert code == 1 and "failed" in err


@pytest.mark.parametrize("cmd", [["batch", "--network", "nsfnet", "--samples", "2"], ["generate", "--n", "10"], ["renumber", "--network", "nsfnet", "--count", "2"]])
def test_seed_is_mandatory(capsys, cmd):
    with pytest.raises(SystemExit) as info:
        main(cmd)
    assert info.value.code == 2


# --- generate ------------------------------------------------------------

def test_generate_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.net", tmp_path / "b.net"
    for p in (a, b):
        code, out, _ = run(capsys, "generate", "--n", "24", "--alpha", "0.4", "--beta", "0.6", "--seed", "5", "--connected", "--out", str(p))
        assert code == 0 and out.startswith("mean degree: ")
    assert a.read_bytes() == b.read_bytes()
    net = netgraph.load_network(a)
    assert net.n == 24 and netgraph.is_connected(net)
    assert out.strip() == f"mean degree: {netgraph.mean_degree(net):.3f}"


def test_generate_preset(capsys, tmp_path):
    p = tmp_path / "g.net"
    code, _, _ = run(capsys, "generate", "--n", "20", "--preset", "dense", "--seed", "2", "--out", str(p))
    assert code == 0 and netgraph.load_network(p).n == 20


def test_generate_exhaustion_exit(capsys):
    code, _, err = run(capsys, "generate", "--n", "30", "--alpha", "0.01", "--beta", "0.0001", "--seed", "1", "--connected")
    assert code == 1 and "no connected graph" in err


def test_generate_needs_params(capsys):
    code, _, err = run(capsys, "generate", "--n", "10", "--seed", "1")
    assert code == 2 and "--preset" in err


# --- renumber ------------------------------------------------------------

def test_renumber_identity_spread_zero(capsys, tmp_path):
    out = tmp_path / "r.csv"
    code, summary, _ = run(capsys, "renumber", "--network", "nsfnet", "--count", "1", "--seed", "3", "--identity-first", "--out", str(out))
    assert code == 0 and "spread 0.00%" in summary
    rows = list(csv.DictReader(out.open()))
    assert rows == [{"sample": "0", "perm_seed": "identity", "total_links": rows[0]["total_links"]}]
    assert f"original {rows[0]['total_links']}" in summary


def test_renumber_reports_spread(capsys, tmp_path):
    out = tmp_path / "r.csv"
    code, summary, _ = run(capsys, "renumber", "--network", "nsfnet", "--count", "8", "--seed", "3", "--out", str(out))
    assert code == 0 and summary.startswith("min ")
    totals = [int(r["total_links"]) for r in csv.DictReader(out.open())]
    assert len(totals) == 8 and f"min {min(totals)} max {max(totals)}" in summary


# --- repair --------------------------------------------------------------

def test_repair_nsfnet(capsys, tmp_path, nsf_solution_file):
    out = tmp_path / "rep.json"
    code, msg, _ = run(capsys, "repair", "--network", "nsfnet", "--solution", str(nsf_solution_file), "--out", str(out))
    data = json.loads(out.read_text())
    assert code == 0
    assert data["repair"]["after_mean"] <= data["repair"]["before_mean"]
    assert data["repair"]["rounds"] <= 10
    RoutingSolution.from_dict(data, netgraph.reference_network("nsfnet"))
    assert msg.startswith("before ")


def test_repair_zero_missing_is_noop(capsys, nsf_solution_file):
    code, out, _ = run(capsys, "repair", "--network", "nsfnet", "--solution", str(nsf_solution_file), "--config", "quad")
    data = json.loads(out)
    assert code == 0 and data["repair"]["rounds"] == 0 and data["repair"]["after_mean"] == 0
    assert [c["walk"] for c in data["cycles"]] == [c["walk"] for c in json.loads(nsf_solution_file.read_text())["cycles"]]


def test_repair_lists_unrepairable(capsys):
    code, out, _ = run(capsys, "repair", "--network", "ring5")
    data = json.loads(out)
    assert code == 0 and data["repair"]["unrepairable"]
    assert {"s", "d", "edge"} == set(data["repair"]["unrepairable"][0])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "quorumcycles", "quorum", "--n", "7"], capture_output=True, text=True)
    assert proc.returncode == 0 and "base: 1 2 4" in proc.stdout
