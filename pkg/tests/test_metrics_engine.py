import itertools

import networkx as nx
import numpy as np
import pytest

from src.config import MetricsOptions
from src.exceptions import UndefinedStatisticError, UnknownNodeError
from src.graph_core import WeightedGraph
from src.metrics_engine import (MetricsEngine, centralization, clustering_coefficient, degree,
                                degree_ccdf, degree_distribution, density, freeman_centralization,
                                hhi_centralization, top_hubs)


def make_binary(adj):
    adj = np.asarray(adj, dtype=float)
    return WeightedGraph(tuple(f"n{i}" for i in range(len(adj))), adj)


def make_random(n, p, seed):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return make_binary((upper | upper.T).astype(float))


def make_star(n):
    adj = np.zeros((n, n))
    adj[0, 1:] = adj[1:, 0] = 1
    return make_binary(adj)


def make_cycle(n):
    adj = np.zeros((n, n))
    for i in range(n):
        adj[i, (i + 1) % n] = adj[(i + 1) % n, i] = 1
    return make_binary(adj)


def complete(n):
    return make_binary(np.ones((n, n)) - np.eye(n))


# --- brute-force oracles ---

def oracle_density(adj):
    n = len(adj)
    ties = sum(1 for i, j in itertools.combinations(range(n), 2) if adj[i][j] > 0)
    return ties / (n * (n - 1) / 2)


def oracle_clustering(adj):
    n = len(adj)
    total = 0.0
    for v in range(n):
        nbrs = [u for u in range(n) if adj[v][u] > 0]
        k = len(nbrs)
        if k < 2:
            continue
        closed = sum(1 for a, b in itertools.combinations(nbrs, 2) if adj[a][b] > 0)
        total += closed / (k * (k - 1) / 2)
    return total / n


def oracle_freeman(adj):
    n = len(adj)
    degrees = [sum(1 for u in range(n) if adj[v][u] > 0) for v in range(n)]
    return sum(max(degrees) - d for d in degrees) / ((n - 1) * (n - 2))


def test_density_examples():
    """10 nodes with 30 ties -> 30/45; complete -> 1; no ties -> 0."""
    adj = np.zeros((10, 10))
    pairs = list(itertools.combinations(range(10), 2))[:30]
    for i, j in pairs:
        adj[i, j] = adj[j, i] = 1

    assert density(make_binary(adj)) == pytest.approx(0.667, abs=1e-3)
    assert density(complete(6)) == 1.0
    assert density(make_binary(np.zeros((4, 4)))) == 0.0
    with pytest.raises(UndefinedStatisticError):
        density(make_binary(np.zeros((1, 1))))


def test_degree_examples():
    star = make_star(5)
    assert degree(star, "n0") == 4
    assert degree(make_binary(np.zeros((3, 3))), "n1") == 0
    with pytest.raises(UnknownNodeError):
        degree(star, "missing")


def test_degree_distribution_and_ccdf():
    star = make_star(5)
    assert degree_distribution(star) == {1: 4, 4: 1}

    ccdf = degree_ccdf(star)
    assert list(ccdf["degree"]) == [1, 4]
    assert np.allclose(ccdf["fraction"], [0.8, 0.2])
    assert np.allclose(ccdf["ccdf"], [1.0, 0.2])
    assert sum(degree_distribution(make_random(30, 0.2, 1)).values()) == 30


def test_clustering_examples():
    assert clustering_coefficient(complete(3)) == 1.0
    assert clustering_coefficient(make_binary([[0, 1, 0], [1, 0, 1], [0, 1, 0]])) == 0.0
    for n in (3, 5, 9):
        assert clustering_coefficient(complete(n)) == pytest.approx(1.0)
    with pytest.raises(UndefinedStatisticError):
        clustering_coefficient(complete(2))


def test_transitivity_variant():
    g = make_random(20, 0.3, 4)
    assert clustering_coefficient(g, "transitivity") == pytest.approx(nx.transitivity(g.to_networkx()))
    with pytest.raises(ValueError):
        clustering_coefficient(g, "weighted")


def test_centralization_examples():
    """Star -> 1, cycle and complete graphs -> 0."""
    assert freeman_centralization(make_star(7)) == 1.0
    assert freeman_centralization(make_cycle(8)) == 0.0
    assert centralization(complete(5)) == 0.0
    with pytest.raises(UndefinedStatisticError):
        freeman_centralization(complete(2))


def test_hhi_variant():
    """Degree shares of a 5-node star: center 4/8, leaves 1/8 each."""
    expected = (4 / 8) ** 2 + 4 * (1 / 8) ** 2
    assert hhi_centralization(make_star(5)) == pytest.approx(expected)
    assert centralization(make_star(5), "hhi") == pytest.approx(expected)
    assert hhi_centralization(make_binary(np.zeros((3, 3)))) == 0.0


def test_metrics_match_brute_force_oracles():
    """Density, average local clustering and Freeman centralization on 100 random graphs."""
    rng = np.random.default_rng(2024)
    for trial in range(100):
        n = int(rng.integers(3, 51))
        g = make_random(n, float(rng.uniform(0.05, 0.6)), trial)
        adj = g.weights.tolist()

        assert abs(density(g) - oracle_density(adj)) <= 1e-12
        assert abs(clustering_coefficient(g) - oracle_clustering(adj)) <= 1e-12
        assert abs(freeman_centralization(g) - oracle_freeman(adj)) <= 1e-12


def test_stats_are_permutation_invariant():
    g = make_random(25, 0.2, 9)
    perm = np.random.default_rng(1).permutation(g.n)
    relabeled = g.reordered(perm)
    engine = MetricsEngine()

    a, b = engine.compute(g), engine.compute(relabeled)

    for field in ("density", "clustering_coefficient", "centralization", "hhi", "n_ties"):
        assert getattr(a, field) == pytest.approx(getattr(b, field), abs=1e-12)
    assert a.degree_histogram == b.degree_histogram


def test_adding_an_edge_never_lowers_density():
    g = make_random(15, 0.2, 3)
    w = g.weights.copy()
    i, j = np.argwhere(np.triu(w == 0, k=1))[0]
    w[i, j] = w[j, i] = 1
    assert density(make_binary(w)) > density(g)


def test_compute_uses_dichotomized_view():
    """Tie values do not change any statistic."""
    g = make_random(12, 0.4, 6)
    valued = WeightedGraph(g.nodes, g.weights * np.arange(1, 13)[:, None] * np.arange(1, 13)[None, :])

    a = MetricsEngine().compute(g)
    b = MetricsEngine().compute(valued)

    assert a == b


def test_network_stats_summary_fields():
    stats = MetricsEngine(MetricsOptions(n_hubs=2)).compute(make_star(6))

    assert stats.n_nodes == 6
    assert stats.n_ties == 5
    assert stats.max_degree == 5
    assert stats.median_degree == 1.0
    assert stats.max_median_ratio == 5.0
    assert stats.top_hubs == [("n0", 5), ("n1", 1)]
    assert sum(stats.degree_histogram.values()) == stats.n_nodes
    assert 0 <= stats.density <= 1 and 0 <= stats.centralization <= 1


def test_top_hubs_ties_broken_by_id():
    g = make_cycle(4)
    assert top_hubs(g, 2) == [("n0", 2), ("n1", 2)]


def test_preferential_attachment_graph_has_hubs():
    """A seeded BA graph (n=500) has max degree at least 10x its median degree."""
    G = nx.barabasi_albert_graph(500, 1, seed=7)
    g = WeightedGraph(tuple(str(v) for v in G.nodes), nx.to_numpy_array(G))
    stats = MetricsEngine().compute(g)

    assert stats.max_median_ratio >= 10
