import numpy as np
import pandas as pd
import pytest

from src.config import HyperlinkOptions
from src.exceptions import DataValidationError
from src.graph_core import DirectedCountGraph, SiteNode
from src.hyperlink_engine import HyperlinkEngine


def make_nodes():
    return [
        SiteNode(id="A", host_patterns=("a.example",), geography="BR"),
        SiteNode(id="B", host_patterns=("b.example",), geography="DE"),
        SiteNode(id="wiki", host_patterns=("wikipedia.org",), geography="GLOBAL"),
        SiteNode(id="eswiki", host_patterns=("es.wikipedia.org",), geography="ES"),
    ]


def write_edges(tmp_path, text, name="edges.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_ingest_aggregates_repeated_pairs(tmp_path):
    """(A,B,2) and (A,B,1) sum to 3."""
    path = write_edges(tmp_path, "src,dst,count\nA,B,2\nA,B,1\nB,A,1\n")
    g = HyperlinkEngine(make_nodes()).ingest_edge_list(path)

    assert g.count("A", "B") == 3
    assert g.count("B", "A") == 1
    assert g.n_edges == 2


def test_ingest_drops_self_links(tmp_path):
    path = write_edges(tmp_path, "src,dst,count\nA,A,5\nA,B,1\n")
    engine = HyperlinkEngine(make_nodes())
    g = engine.ingest_edge_list(path)

    assert np.all(np.diag(g.counts) == 0)
    assert engine.self_links_dropped == 1


def test_ingest_empty_file(tmp_path):
    """Empty file and header-only file both give a graph without edges."""
    engine = HyperlinkEngine(make_nodes())
    assert engine.ingest_edge_list(write_edges(tmp_path, "")).n_edges == 0
    assert engine.ingest_edge_list(write_edges(tmp_path, "src,dst,count\n", "header.csv")).n_edges == 0


def test_ingest_resolves_hosts_and_skips_unknown(tmp_path):
    """Hostnames and URLs resolve through host patterns; unknown hosts are counted and skipped."""
    path = write_edges(tmp_path, "\n".join([
        "src,dst,count",
        "www.a.example,http://es.wikipedia.org/wiki/NYC,2",
        "http://b.example/page,wikipedia.org,1",
        "A,unknown.example,4",
    ]) + "\n")
    engine = HyperlinkEngine(make_nodes())
    g = engine.ingest_edge_list(path)

    assert g.count("A", "eswiki") == 2
    assert g.count("B", "wiki") == 1
    assert engine.unresolved_rows == 1
    assert g.n_edges == 2


def test_malformed_row_reports_line_number(tmp_path):
    path = write_edges(tmp_path, "src,dst,count\nA,B,1\nA,B,lots\n")
    with pytest.raises(DataValidationError) as err:
        HyperlinkEngine(make_nodes()).ingest_edge_list(path)
    assert 3 in err.value.lines
    assert "line(s)" in str(err.value)


def test_negative_count_rejected(tmp_path):
    path = write_edges(tmp_path, "src,dst,count\nA,B,-1\n")
    with pytest.raises(DataValidationError):
        HyperlinkEngine(make_nodes()).ingest_edge_list(path)


def test_build_hyperlink_graph_valued_and_dichotomized():
    """A->B=3, B->A=1: valued tie 4, dichotomized 1; an unlinked pair has no tie."""
    g = DirectedCountGraph(("A", "B", "C"), np.array([[0, 3, 0], [1, 0, 0], [0, 0, 0]]))
    w = HyperlinkEngine(
        [SiteNode(id=i, geography="BR") for i in "ABC"]).build_hyperlink_graph(g)

    assert w.weight("A", "B") == 4.0
    assert w.dichotomized().weight("A", "B") == 1.0
    assert w.weight("A", "C") == 0.0


def test_dichotomized_view_is_logical_or():
    rng = np.random.default_rng(3)
    c = (rng.random((12, 12)) < 0.2) * rng.integers(1, 5, size=(12, 12))
    np.fill_diagonal(c, 0)
    ids = tuple(f"s{i}" for i in range(12))
    nodes = [SiteNode(id=i, geography="BR") for i in ids]
    g = DirectedCountGraph(ids, c)

    summed = HyperlinkEngine(nodes).build_hyperlink_graph(g).dichotomized()
    maxed = HyperlinkEngine(nodes, HyperlinkOptions(symmetrize="max")).build_hyperlink_graph(g).dichotomized()

    assert np.array_equal(summed.weights, ((c > 0) | (c.T > 0)).astype(float))
    assert summed == maxed
    assert summed.n_ties <= g.n_edges


def test_aggregation_is_order_independent():
    edges = pd.DataFrame({"src": ["A", "B", "A", "wiki"], "dst": ["B", "A", "B", "A"], "count": [1, 2, 3, 4]})
    engine = HyperlinkEngine(make_nodes())

    forward = engine.aggregate(edges)
    backward = engine.aggregate(edges.iloc[::-1].reset_index(drop=True))

    assert forward == backward


def test_drop_sites_removes_uncrawlable_nodes():
    g = DirectedCountGraph(("A", "B", "C"), np.array([[0, 1, 1], [1, 0, 0], [0, 0, 0]]))
    kept = HyperlinkEngine.drop_sites(g, ["C"])

    assert kept.nodes == ("A", "B")
    assert kept.count("A", "B") == 1
