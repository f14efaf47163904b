import logging
from typing import Optional

import networkx as nx
import numpy as np
import pandas as pd
from pydantic import BaseModel

from src.config import MetricsOptions
from src.exceptions import UndefinedStatisticError
from src.graph_core import WeightedGraph
from src.schema import DegreeCcdfSchema

logger = logging.getLogger(__name__)


class NetworkStats(BaseModel):
    n_nodes: int
    n_ties: int
    density: float
    clustering_coefficient: float
    clustering_variant: str
    centralization: float
    centralization_variant: str
    hhi: float
    transitivity: float
    mean_degree: float
    median_degree: float
    max_degree: int
    max_median_ratio: Optional[float]
    degree_histogram: dict[int, int]
    top_hubs: list[tuple[str, int]]


def _binary(g: WeightedGraph) -> np.ndarray:
    return (g.weights > 0).astype(np.int64)


def density(g: WeightedGraph) -> float:
    """Ties present over n(n-1)/2."""
    n = g.n
    if n < 2:
        raise UndefinedStatisticError("density needs at least 2 nodes")
    return g.n_ties / (n * (n - 1) / 2)


def degree(g: WeightedGraph, node: str) -> int:
    return int(np.count_nonzero(g.weights[g.index_of(node)]))


def degree_distribution(g: WeightedGraph) -> dict[int, int]:
    degrees = g.degrees()
    values, counts = np.unique(degrees, return_counts=True)
    return {int(d): int(c) for d, c in zip(values, counts)}


def degree_ccdf(g: WeightedGraph) -> pd.DataFrame:
    """Per observed degree: node count, fraction, and P(D >= degree)."""
    hist = degree_distribution(g)
    df = pd.DataFrame({"degree": list(hist.keys()), "count": list(hist.values())})
    n = max(g.n, 1)
    df["fraction"] = df["count"] / n
    df["ccdf"] = df["count"][::-1].cumsum()[::-1] / n
    return DegreeCcdfSchema.validate(df)


def clustering_coefficient(g: WeightedGraph, variant: str = "avg-local") -> float:
    """
    avg-local: mean over nodes of closed/possible neighbor pairs, degree < 2 counting 0.
    transitivity: 3 x triangles / connected triples.
    """
    if g.n < 3:
        raise UndefinedStatisticError("clustering coefficient needs at least 3 nodes")
    G = g.dichotomized().to_networkx()
    if variant == "avg-local":
        return float(nx.average_clustering(G, count_zeros=True))
    if variant == "transitivity":
        return float(nx.transitivity(G))
    raise ValueError(f"unknown clustering variant '{variant}'")


def freeman_centralization(g: WeightedGraph) -> float:
    n = g.n
    if n < 3:
        raise UndefinedStatisticError("centralization needs at least 3 nodes")
    d = g.degrees()
    return float((d.max() - d).sum() / ((n - 1) * (n - 2)))


def hhi_centralization(g: WeightedGraph) -> float:
    """Herfindahl-Hirschman concentration of degree shares; 0 for a graph without ties."""
    if g.n < 3:
        raise UndefinedStatisticError("centralization needs at least 3 nodes")
    d = g.degrees().astype(float)
    total = d.sum()
    if total == 0:
        return 0.0
    return float(((d / total) ** 2).sum())


def centralization(g: WeightedGraph, variant: str = "freeman") -> float:
    if variant == "freeman":
        return freeman_centralization(g)
    if variant == "hhi":
        return hhi_centralization(g)
    raise ValueError(f"unknown centralization variant '{variant}'")


def top_hubs(g: WeightedGraph, k: int = 10) -> list[tuple[str, int]]:
    """The k highest-degree nodes, degree descending then id ascending."""
    ranked = sorted(zip(g.nodes, g.degrees().tolist()), key=lambda item: (-item[1], item[0]))
    return [(node, int(d)) for node, d in ranked[:k]]


class MetricsEngine:
    """
    Descriptive statistics of a network, always on its dichotomized view.
    """
    def __init__(self, options: Optional[MetricsOptions] = None):
        self.options = options or MetricsOptions()

    def compute(self, g: WeightedGraph) -> NetworkStats:
        b = g.dichotomized()
        degrees = b.degrees()
        median = float(np.median(degrees)) if b.n else 0.0
        stats = NetworkStats(
            n_nodes=b.n,
            n_ties=b.n_ties,
            density=density(b),
            clustering_coefficient=clustering_coefficient(b, self.options.clustering),
            clustering_variant=self.options.clustering,
            centralization=centralization(b, self.options.centralization),
            centralization_variant=self.options.centralization,
            hhi=hhi_centralization(b),
            transitivity=clustering_coefficient(b, "transitivity"),
            mean_degree=float(degrees.mean()),
            median_degree=median,
            max_degree=int(degrees.max()),
            max_median_ratio=float(degrees.max() / median) if median > 0 else None,
            degree_histogram=degree_distribution(b),
            top_hubs=top_hubs(b, self.options.n_hubs),
        )
        logger.info(f"   -> n={stats.n_nodes} ties={stats.n_ties} density={stats.density:.3f} "
                    f"clustering={stats.clustering_coefficient:.3f} centralization={stats.centralization:.3f}")
        return stats
