import itertools

import numpy as np
import pytest
from pydantic import ValidationError

from src.analysis.layout_engine import LayoutEngine, LayoutResult, fr_layout
from src.config import LayoutOptions
from src.exceptions import GraphError
from src.graph_core import WeightedGraph


def make_two_cliques(size=5):
    ids = [f"a{i}" for i in range(size)] + [f"b{i}" for i in range(size)]
    w = np.zeros((2 * size, 2 * size))
    w[:size, :size] = 1
    w[size:, size:] = 1
    np.fill_diagonal(w, 0)
    return WeightedGraph(tuple(ids), w)


def distance(p, q):
    return float(np.hypot(p[0] - q[0], p[1] - q[1]))


def test_layout_is_deterministic_per_seed():
    g = make_two_cliques()
    a = fr_layout(g, iterations=100, seed=3)
    b = fr_layout(g, iterations=100, seed=3)
    c = fr_layout(g, iterations=100, seed=4)

    assert a == b
    assert a.positions != c.positions


def test_positions_stay_inside_frame():
    rng = np.random.default_rng(0)
    upper = np.triu(rng.random((40, 40)) < 0.1, k=1)
    g = WeightedGraph(tuple(f"n{i}" for i in range(40)), (upper | upper.T).astype(float))

    layout = fr_layout(g, iterations=200, seed=1, width=300.0, height=200.0)

    assert set(layout.positions) == set(g.nodes)
    for x, y in layout.positions.values():
        assert 0.0 <= x <= 300.0
        assert 0.0 <= y <= 200.0


def test_tied_nodes_end_up_closer():
    """Two K8 joined by one bridge: members sit nearer their own clique than the other one."""
    clique = make_two_cliques(8)
    w = clique.weights.copy()
    w[0, 8] = w[8, 0] = 1
    g = WeightedGraph(clique.nodes, w)
    pos = fr_layout(g, iterations=500, seed=42).positions

    inside = [distance(pos[u], pos[v]) for grp in ("a", "b")
              for u, v in itertools.combinations([n for n in g.nodes if n.startswith(grp)], 2)]
    across = [distance(pos[u], pos[v]) for u in g.nodes if u.startswith("a")
              for v in g.nodes if v.startswith("b")]

    assert np.mean(inside) < np.mean(across)


def test_single_node_is_centred():
    layout = fr_layout(WeightedGraph.empty(["solo"]), width=400.0, height=100.0)
    assert layout.positions == {"solo": (200.0, 50.0)}


def test_empty_graph_rejected():
    with pytest.raises(GraphError):
        fr_layout(WeightedGraph.empty([]))


def test_zero_iterations_keeps_initial_scatter():
    g = WeightedGraph.empty([f"n{i}" for i in range(6)])
    layout = fr_layout(g, iterations=0, seed=5)

    assert layout.iterations == 0
    points = list(layout.positions.values())
    assert len(set(points)) == 6


def test_engine_uses_options():
    g = make_two_cliques(3)
    layout = LayoutEngine(LayoutOptions(iterations=10, width=50.0, height=50.0)).run(g, seed=2)

    assert layout.iterations == 10
    assert layout.seed == 2
    assert layout.width == 50.0


def test_layout_result_rejects_points_outside_frame():
    with pytest.raises(ValidationError):
        LayoutResult(positions={"a": (20.0, 5.0)}, iterations=1, seed=0, width=10.0, height=10.0)
    with pytest.raises(ValidationError):
        LayoutResult(positions={"a": (float("nan"), 5.0)}, iterations=1, seed=0)
