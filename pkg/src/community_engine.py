"""
Weighted modularity communities (Louvain) and the geo-linguistic purity of clusters.
"""
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from typing import Hashable, Literal, Mapping, Optional, Sequence

import community as community_louvain
import numpy as np
from pydantic import BaseModel, Field, model_validator
from sklearn.metrics import adjusted_rand_score

from src.config import CommunityOptions
from src.exceptions import DualWebError, UndefinedStatisticError, UnknownNodeError
from src.graph_core import GLOBAL, SiteNode, WeightedGraph

logger = logging.getLogger(__name__)

Q_TOLERANCE = 1e-12


class CommunityPartition(BaseModel):
    assignment: dict[str, int]
    modularity_q: float = Field(le=1.0 + 1e-9)
    seed: int
    n_communities: int
    resolution: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _check(self):
        ids = set(self.assignment.values())
        if len(ids) != self.n_communities:
            raise ValueError("n_communities does not match the distinct community ids")
        if ids and ids != set(range(len(ids))):
            raise ValueError("community ids must be dense and 0-based")
        # Q >= -1/2 at resolution 1; in general Q >= -resolution * sum_c (K_c / 2m)^2 >= -resolution
        floor = -0.5 if self.resolution == 1.0 else -self.resolution
        if self.modularity_q < floor - 1e-9:
            raise ValueError(f"modularity_q {self.modularity_q} is below {floor} at resolution {self.resolution}")
        return self

    def members(self) -> dict[int, list[str]]:
        groups: dict[int, list[str]] = {}
        for node, cid in self.assignment.items():
            groups.setdefault(cid, []).append(node)
        return dict(sorted(groups.items()))


def _labels(g: WeightedGraph, partition: Mapping[str, int]) -> np.ndarray:
    missing = [node for node in g.nodes if node not in partition]
    if missing:
        raise UnknownNodeError(missing, "partition")
    _, labels = np.unique([partition[node] for node in g.nodes], return_inverse=True)
    return labels


def modularity(g: WeightedGraph, partition: Mapping[str, int], resolution: float = 1.0) -> float:
    """Q = (1/2m) sum_ij [w_ij - resolution * k_i k_j / 2m] delta(c_i, c_j)."""
    labels = _labels(g, partition)
    w = g.weights
    two_m = w.sum()
    if two_m <= 0:
        raise UndefinedStatisticError("modularity is undefined for a graph without ties (m = 0)")
    k = w.sum(axis=1)
    membership = np.zeros((g.n, labels.max() + 1 if g.n else 0))
    membership[np.arange(g.n), labels] = 1.0
    internal = np.einsum("ic,ij,jc->", membership, w, membership)
    strength = membership.T @ k
    return float((internal - resolution * (strength @ strength) / two_m) / two_m)


def dense_relabel(g: WeightedGraph, partition: Mapping[str, int]) -> dict[str, int]:
    """Community ids renumbered 0.. by first appearance in node order."""
    mapping: dict[int, int] = {}
    out = {}
    for node in g.nodes:
        cid = partition[node]
        if cid not in mapping:
            mapping[cid] = len(mapping)
        out[node] = mapping[cid]
    return out


def partition_agreement(a: Mapping[str, Hashable], b: Mapping[str, Hashable]) -> float:
    """Adjusted Rand index over the nodes both labelings share."""
    shared = [node for node in a if node in b]
    if not shared:
        raise DualWebError("labelings share no nodes")
    return float(adjusted_rand_score([a[n] for n in shared], [b[n] for n in shared]))


class CommunityEngine:
    def __init__(self, options: Optional[CommunityOptions] = None):
        self.options = options or CommunityOptions()

    def _restart_seeds(self, seed: int) -> list[int]:
        children = np.random.SeedSequence(seed).spawn(self.options.restarts)
        return [int(child.generate_state(1)[0]) for child in children]

    def _one_restart(self, g: WeightedGraph, G, rng_seed: int) -> tuple[float, int, dict[str, int]]:
        raw = community_louvain.best_partition(
            G, weight="weight", resolution=self.options.resolution, random_state=rng_seed)
        assignment = dense_relabel(g, raw)
        q = modularity(g, assignment, self.options.resolution)
        return q, len(set(assignment.values())), assignment

    def detect_communities(self, g: WeightedGraph, seed: int) -> CommunityPartition:
        """
        Best-of-restarts Louvain on tie weights. Highest Q wins; near-equal Q prefers
        fewer communities, then the earlier restart.
        """
        if g.n == 0:
            raise DualWebError("cannot detect communities in an empty graph")
        resolution = self.options.resolution
        if g.n == 1 or g.total_weight == 0:
            assignment = {node: i for i, node in enumerate(g.nodes)} if g.n > 1 else {g.nodes[0]: 0}
            logger.info("   -> No ties: every node is its own community, Q defined as 0")
            return CommunityPartition(assignment=assignment, modularity_q=0.0, seed=seed,
                                      n_communities=len(assignment), resolution=resolution)

        G = g.to_networkx()
        seeds = self._restart_seeds(seed)
        if self.options.n_workers > 1:
            with ThreadPoolExecutor(max_workers=self.options.n_workers) as pool:
                runs = list(pool.map(lambda s: self._one_restart(g, G, s), seeds))
        else:
            runs = [self._one_restart(g, G, s) for s in seeds]

        best = runs[0]
        for run in runs[1:]:
            if run[0] > best[0] + Q_TOLERANCE:
                best = run
            elif abs(run[0] - best[0]) <= Q_TOLERANCE and run[1] < best[1]:
                best = run
        q, n_communities, assignment = best
        logger.info(f"   -> Louvain: {n_communities} communities, Q={q:.4f} (best of {len(runs)})")
        return CommunityPartition(assignment=assignment, modularity_q=q, seed=seed,
                                  n_communities=n_communities, resolution=resolution)


class ClusterPurity(BaseModel):
    size: int
    counted: int
    modal_value: Optional[str]
    purity: Optional[float]


class PurityReport(BaseModel):
    attribute: Literal["geography", "language"]
    clusters: dict[int, ClusterPurity]
    mean_purity: Optional[float]
    undefined_clusters: list[int]


def _attribute_values(node: SiteNode, attribute: str) -> tuple[str, ...]:
    if attribute == "geography":
        return () if node.geography == GLOBAL else (node.geography,)
    if attribute == "language":
        return node.languages
    raise ValueError(f"unknown attribute '{attribute}'")


def cluster_purity(partition: CommunityPartition, nodes: Sequence[SiteNode] | Mapping[str, SiteNode],
                   attribute: Literal["geography", "language"] = "geography") -> PurityReport:
    """
    Per cluster: share of members carrying the modal attribute value, among members that
    carry any value (GLOBAL sites are left out of the geography denominator). The mean is
    weighted by cluster size over clusters where purity is defined.
    """
    by_id = dict(nodes) if isinstance(nodes, Mapping) else {n.id: n for n in nodes}
    missing = [node for node in partition.assignment if node not in by_id]
    if missing:
        raise UnknownNodeError(missing, "node metadata")

    clusters: dict[int, ClusterPurity] = {}
    undefined = []
    weighted_sum = 0.0
    weight_total = 0
    for cid, members in partition.members().items():
        values = [_attribute_values(by_id[m], attribute) for m in members]
        counted = [v for v in values if v]
        if not counted:
            clusters[cid] = ClusterPurity(size=len(members), counted=0, modal_value=None, purity=None)
            undefined.append(cid)
            continue
        tally = Counter(value for v in counted for value in set(v))
        modal_value, _ = min(tally.items(), key=lambda item: (-item[1], item[0]))
        purity = sum(1 for v in counted if modal_value in v) / len(counted)
        clusters[cid] = ClusterPurity(size=len(members), counted=len(counted),
                                      modal_value=modal_value, purity=purity)
        weighted_sum += purity * len(members)
        weight_total += len(members)

    if undefined:
        logger.info(f"   -> {attribute} purity undefined for cluster(s) {undefined} (no attribute values)")
    return PurityReport(attribute=attribute, clusters=clusters,
                        mean_purity=weighted_sum / weight_total if weight_total else None,
                        undefined_clusters=undefined)
