import itertools
import math

import numpy as np
import pytest
from scipy.stats import binom, pearsonr

from src.config import QapOptions
from src.exceptions import GraphError, UndefinedStatisticError
from src.graph_core import WeightedGraph
from src.qap_engine import QapEngine, matrix_pearson, qap_correlation, transform_ties


def make_random(n, seed, ids=None, density=0.5):
    rng = np.random.default_rng(seed)
    w = np.triu(rng.random((n, n)) * (rng.random((n, n)) < density), k=1)
    return WeightedGraph(tuple(ids or (f"n{i}" for i in range(n))), w + w.T)


def brute_force_p(a, b, tail="two_sided"):
    """Share of all n! joint relabelings of b whose r reaches the observed r."""
    iu = np.triu_indices(a.n, k=1)
    x = a.weights[iu]
    r_obs = pearsonr(x, b.weights[iu])[0]
    hits = 0
    for perm in itertools.permutations(range(a.n)):
        p = np.array(perm)
        r = pearsonr(x, b.weights[np.ix_(p, p)][iu])[0]
        if tail == "two_sided":
            hits += abs(r) >= abs(r_obs) - 1e-12
        else:
            hits += r >= r_obs - 1e-12
    return hits / math.factorial(a.n)


def test_identical_matrices_correlate_exactly():
    a = make_random(12, 0)
    assert matrix_pearson(a, a) == 1.0


def test_complement_correlates_negatively():
    """b = c - a on every off-diagonal cell gives r = -1."""
    a = make_random(10, 1)
    c = a.weights.max() + 1.0
    b = WeightedGraph(a.nodes, (c - a.weights) * (1 - np.eye(a.n)))
    assert matrix_pearson(a, b) == pytest.approx(-1.0, abs=1e-12)


def test_pearson_matches_flat_vector_oracle():
    for seed in range(20):
        a, b = make_random(15, seed), make_random(15, seed + 50)
        iu = np.triu_indices(15, k=1)
        expected = pearsonr(a.weights[iu], b.weights[iu])[0]
        assert abs(matrix_pearson(a, b) - expected) <= 1e-12


def test_pearson_errors():
    a = make_random(6, 2)
    with pytest.raises(UndefinedStatisticError):
        matrix_pearson(a, WeightedGraph.empty(a.nodes))
    with pytest.raises(GraphError):
        matrix_pearson(a, a.reordered([1, 0, 2, 3, 4, 5]))


def test_exhaustive_p_matches_brute_force():
    """n = 4: all 24 relabelings are enumerated, identity included."""
    for seed in range(5):
        a, b = make_random(4, seed, density=0.8), make_random(4, seed + 10, density=0.8)
        result = qap_correlation(a, b)

        assert result.exhaustive
        assert result.n_permutations == 24
        assert result.p_value == pytest.approx(brute_force_p(a, b))
        assert result.p_value >= 1 / 24


def test_exhaustive_one_sided():
    a, b = make_random(5, 3, density=0.8), make_random(5, 4, density=0.8)
    result = qap_correlation(a, b, tail="greater")
    assert result.p_value == pytest.approx(brute_force_p(a, b, tail="greater"))


def test_joint_relabeling_invariance():
    """Relabeling both matrices with the same permutation changes neither r nor the exact p."""
    a, b = make_random(6, 5), make_random(6, 6)
    perm = np.random.default_rng(0).permutation(6)
    a2, b2 = a.reordered(perm), b.reordered(perm)

    assert matrix_pearson(a2, b2) == pytest.approx(matrix_pearson(a, b), abs=1e-12)
    assert qap_correlation(a2, b2).p_value == pytest.approx(qap_correlation(a, b).p_value)


def test_monte_carlo_p_value_bounds():
    a, b = make_random(30, 7), make_random(30, 8)
    result = qap_correlation(a, b, n_permutations=99, seed=1)

    assert not result.exhaustive
    assert result.n_permutations == 99
    assert 1 / 100 <= result.p_value <= 1.0


def test_null_mean_is_centred():
    """Under independent matrices the permutation null has mean 0 up to sampling error."""
    a, b = make_random(30, 9), make_random(30, 10)
    result = qap_correlation(a, b, n_permutations=2000, seed=3)

    assert abs(result.null_mean) <= 3 * result.null_sd / math.sqrt(2000) + 1e-3
    assert result.null_sd > 0


def test_monte_carlo_agrees_with_exhaustive():
    """
    n = 4..7. The exact p counts k of n! relabelings, identity included; a sampled
    non-identity relabeling hits with probability (k - 1) / (n! - 1). With 10000 draws
    the hit count lies in the 99% binomial interval, so p = (1 + hits) / (1 + draws) does too.
    """
    draws = 10000
    for n, seed in ((4, 31), (5, 11), (6, 41), (7, 51)):
        a, b = make_random(n, seed, density=0.7), make_random(n, seed + 1, density=0.7)
        exact = qap_correlation(a, b)
        sampled = qap_correlation(a, b, n_permutations=draws, seed=5, exhaustive_limit=1)

        assert exact.exhaustive and not sampled.exhaustive
        total = math.factorial(n)
        rate = (round(exact.p_value * total) - 1) / (total - 1)
        lo, hi = binom.interval(0.99, draws, rate)
        assert (1 + lo) / (1 + draws) - 1e-12 <= sampled.p_value <= (1 + hi) / (1 + draws) + 1e-12, n


def test_result_independent_of_worker_count():
    a, b = make_random(25, 13), make_random(25, 14)
    serial = qap_correlation(a, b, n_permutations=500, seed=42, n_workers=1)
    threaded = qap_correlation(a, b, n_permutations=500, seed=42, n_workers=4)

    assert serial == threaded


def test_same_seed_same_p_value():
    a, b = make_random(20, 15), make_random(20, 16)
    first = qap_correlation(a, b, n_permutations=300, seed=9)
    second = qap_correlation(a, b, n_permutations=300, seed=9)
    assert first.p_value == second.p_value


def test_strong_association_is_significant():
    a = make_random(25, 17)
    noise = make_random(25, 18)
    b = WeightedGraph(a.nodes, a.weights + 0.1 * noise.weights)
    result = qap_correlation(a, b, n_permutations=200, seed=1)

    assert result.r_observed > 0.9
    assert result.p_value == pytest.approx(1 / 201)


def test_rank_and_log_transforms():
    """A monotone map of the tie values leaves the rank correlation at 1."""
    a = make_random(12, 19)
    b = WeightedGraph(a.nodes, a.weights ** 2)

    ranked = qap_correlation(a, b, n_permutations=50, transform="rank")
    assert ranked.r_observed == 1.0
    assert ranked.transform == "rank"

    logged = transform_ties(a, "log1p")
    assert np.allclose(logged.weights, np.log1p(a.weights))
    with pytest.raises(ValueError):
        transform_ties(a, "sqrt")


def test_binary_ties_option():
    a = make_random(12, 20)
    b = WeightedGraph(a.nodes, a.weights * 3.0 + (a.weights > 0) * 5.0)
    result = qap_correlation(a, b, n_permutations=50, ties="binary")

    assert result.ties == "binary"
    assert result.r_observed == 1.0


def test_engine_aligns_shared_nodes():
    a = make_random(8, 21, ids=[f"s{i}" for i in range(8)])
    b = make_random(8, 22, ids=[f"s{i}" for i in range(2, 10)])
    result = QapEngine(QapOptions(n_permutations=100)).run(a, b, seed=4)

    assert result.n_nodes == 6
    assert result.seed == 4


def test_rejects_bad_permutation_count():
    a, b = make_random(6, 23), make_random(6, 24)
    with pytest.raises(ValueError):
        qap_correlation(a, b, n_permutations=0)
