import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coasearch.errors import DuplicateIdError, MissingCveError, ParseError, ScoreDomainError
from coasearch.graph import build_graph, parse_arcs, parse_vertices
from coasearch.scoring import (
    ScoreAssignment,
    VulnDb,
    VulnRecord,
    assign_node_scores,
    edge_weights,
    load_vuln_db,
    score_vul,
)

from _support import make_wg

VERTICES = """\
1,"execCode(dbServer,root)","OR",0
2,"vulExists(webServer,'CVE-2099-0001',httpd,remoteExploit,privEscalation)","LEAF",1
3,"execCode(webServer,user)","OR",0
4,"attackerLocated(internet)","LEAF",1
5,"accessFile(fileServer,write,'/export')","OR",0
6,"hacl(internet,webServer,tcp,80)","LEAF",1
7,"RULE 2 (remote exploit of a server program)","AND",0
8,"vulExists(fileServer,""CVE-2099-0002"",nfsd,remoteExploit,privEscalation)","LEAF",1
"""
ARCS = "2,4,-1\n1,2,-1\n3,4,-1\n1,3,-1\n5,3,-1\n7,6,-1\n3,7,-1\n8,4,-1\n5,8,-1\n"


@pytest.fixture
def graph():
    return build_graph(parse_vertices(VERTICES), parse_arcs(ARCS))


@pytest.fixture
def db():
    return VulnDb([VulnRecord("CVE-2099-0001", 9.8, 3.9), VulnRecord("CVE-2099-0002", 5.0, 10.0)])


def test_score_vul_values():
    assert score_vul(10, 10) == 10
    assert score_vul(7.5, 0) == 0
    # hand arithmetic: 9.8 * 3.9 / 10 = 38.22 / 10
    assert score_vul(9.8, 3.9) == pytest.approx(3.822, abs=1e-12)


@pytest.mark.parametrize("args", [(10.5, 1), (1, -0.1), (float("nan"), 1), (1, float("inf"))])
def test_score_vul_domain(args):
    with pytest.raises(ScoreDomainError):
        score_vul(*args)


scores01 = st.floats(0, 10, allow_nan=False)


@given(scores01, scores01)
def test_score_vul_bounds(b, e):
    s = score_vul(b, e)
    assert 0 <= s <= min(b, 10)


@given(scores01, scores01, scores01)
def test_score_vul_monotone(b, e1, e2):
    lo, hi = sorted((e1, e2))
    assert score_vul(b, lo) <= score_vul(b, hi)
    assert score_vul(lo, b) <= score_vul(hi, b)


def test_load_vuln_db_json_round_trip():
    db = load_vuln_db('[{"cveId": "CVE-2002-0392", "baseScore": 7.5, "exploitabilityScore": 10.0}]')
    assert list(db) == ["CVE-2002-0392"]
    assert db["CVE-2002-0392"] == VulnRecord("CVE-2002-0392", 7.5, 10.0)
    assert load_vuln_db(db.to_json()) == db


def test_load_vuln_db_csv():
    db = load_vuln_db("cveId,baseScore,exploitabilityScore\nCVE-2099-0001,9.8,3.9\r\n\nCVE-2099-0002,5,10\n")
    assert db["CVE-2099-0001"].base_score == 9.8
    assert db["CVE-2099-0002"].exploitability_score == 10.0
    assert len(db) == 2


def test_load_vuln_db_empty():
    assert len(load_vuln_db("[]")) == 0
    assert len(load_vuln_db("")) == 0


def test_load_vuln_db_rejects_out_of_range():
    with pytest.raises(ScoreDomainError, match="CVE-X"):
        load_vuln_db('[{"cveId": "CVE-X", "baseScore": 11, "exploitabilityScore": 1}]')
    with pytest.raises(ScoreDomainError, match="CVE-Y"):
        load_vuln_db("cveId,baseScore,exploitabilityScore\nCVE-Y,1,10.1\n")


def test_load_vuln_db_rejects_duplicates_and_garbage():
    rows = [{"cveId": "CVE-X", "baseScore": 1, "exploitabilityScore": 1}] * 2
    with pytest.raises(DuplicateIdError):
        load_vuln_db(json.dumps(rows))
    with pytest.raises(ParseError):
        load_vuln_db('[{"cveId": "CVE-X"}]')
    with pytest.raises(ParseError):
        load_vuln_db("[1, 2")
    with pytest.raises(ParseError) as err:
        load_vuln_db("cveId,baseScore,exploitabilityScore\nCVE-1,1,1\nCVE-2,high,1\n", source="db.csv")
    assert err.value.lineno == 3 and "db.csv:3:" in str(err.value)
    with pytest.raises(ScoreDomainError):
        load_vuln_db('[{"cveId": "CVE-X", "baseScore": true, "exploitabilityScore": 1}]')


def test_assign_node_scores_rules(graph, db):
    sa = assign_node_scores(graph, db, source=4, target=1)
    assert sa.values[4] == 0.01
    assert sa.values[1] == 100
    assert sa.values[2] == score_vul(9.8, 3.9)
    assert sa.values[3] == 1.5  # execCode
    assert sa.values[5] == 1.5  # accessFile
    assert sa.values[6] == 0  # hacl network fact
    assert sa.values[7] == 0  # rule node
    assert sa.values[8] == 5.0  # double-quoted CVE id
    assert set(sa.values) == set(graph.ids)
    assert sa.warnings == ()


def test_target_overrides_vul_score(graph, db):
    sa = assign_node_scores(graph, db, source=4, target=2)
    assert sa.values[2] == 100


def test_missing_cve_strict_and_lenient(graph):
    db = VulnDb([VulnRecord("CVE-2099-0001", 9.8, 3.9)])
    with pytest.raises(MissingCveError) as err:
        assign_node_scores(graph, db, 4, 1)
    assert err.value.missing == [(8, "CVE-2099-0002")]
    sa = assign_node_scores(graph, db, 4, 1, strict=False)
    assert sa.values[8] == 0
    assert len(sa.warnings) == 1 and "CVE-2099-0002" in sa.warnings[0]


def test_configurable_critical_predicates(graph, db):
    sa = assign_node_scores(graph, db, 4, 1, critical_predicates=["hacl"])
    assert sa.values[6] == 1.5
    assert sa.values[3] == 0


def test_assign_is_idempotent_and_ignores_unused_cves(graph, db):
    first = assign_node_scores(graph, db, 4, 1)
    assert assign_node_scores(graph, db, 4, 1) == first
    extra = VulnDb(list(db.values()) + [VulnRecord("CVE-2099-9999", 10, 10)])
    assert assign_node_scores(graph, extra, 4, 1) == first


def test_edge_weights_dst(graph, db):
    sa = assign_node_scores(graph, db, 4, 1)
    wg = edge_weights(graph, sa)
    assert set(wg.weight) == {(a.src, a.dst) for a in graph.arcs}
    assert wg.weight[(4, 2)] == sa.values[2]
    assert wg.weight[(2, 1)] == 100
    assert wg.weight[(6, 7)] == 0
    for (u, v), w in wg.weight.items():
        assert w == sa.values[v] >= 0


def test_edge_weights_alternative_modes():
    values = {1: 0.01, 2: 3.822, 3: 100.0}
    src = make_wg(3, [(1, 2), (2, 3)], values, 1, 3, mode="src")
    avg = make_wg(3, [(1, 2), (2, 3)], values, 1, 3, mode="avg")
    assert src.weight[(2, 3)] == 3.822
    assert avg.weight[(2, 3)] == (3.822 + 100.0) / 2


def test_g_monotone_on_random_paths():
    rnd = random.Random(3)
    for _ in range(50):
        n = rnd.randint(3, 10)
        arcs = [(u, v) for u in range(1, n + 1) for v in range(1, n + 1) if u != v and rnd.random() < 0.4]
        values = {v: rnd.uniform(0, 10) for v in range(1, n + 1)}
        values[1], values[n] = 0.01, 100.0
        wg = make_wg(n, arcs, values, 1, n)
        v, visited, g = 1, {1}, 0.0
        while True:
            options = [u for u in wg.graph.successors[v] if u not in visited]
            if not options:
                break
            u = rnd.choice(options)
            g_next = g + wg.weight[(v, u)]
            assert g_next >= g
            v, g = u, g_next
            visited.add(u)


def test_score_assignment_direct_construction():
    sa = ScoreAssignment({1: 0.01, 2: 100.0}, 1, 2)
    assert sa.warnings == ()
