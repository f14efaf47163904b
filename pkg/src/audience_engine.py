"""
Audience network from panel visitation data.

Reach and pairwise duplication are fractions of the panel universe N; a tie exists
only where the observed duplication is strictly greater than the product of the two
reaches (independent consumption), and its value is the excess over that product.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd
import scipy.sparse as sp
from pydantic import BaseModel, Field

from src.config import AudienceOptions
from src.exceptions import DataValidationError, DualWebError, GraphError, UnknownNodeError
from src.graph_core import DEFAULT_MAX_NODES, SiteNode, WeightedGraph, check_unique_ids, ensure_within_cap
from src.schema import VisitationLogSchema

logger = logging.getLogger(__name__)


class Panel(BaseModel):
    universe_size: int = Field(ge=1)
    window: str = ""


@dataclass(frozen=True, eq=False)
class VisitationLog:
    """Deduplicated (user_id, site_id) pairs for one window."""
    records: pd.DataFrame

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "VisitationLog":
        df = VisitationLogSchema.validate(df)
        df = (df[["user_id", "site_id"]]
              .drop_duplicates()
              .sort_values(["site_id", "user_id"], kind="mergesort")
              .reset_index(drop=True))
        return cls(df)

    @property
    def n_users(self) -> int:
        return int(self.records["user_id"].nunique())

    @property
    def site_ids(self) -> set[str]:
        return set(self.records["site_id"].unique())

    def restrict(self, site_ids: Sequence[str]) -> "VisitationLog":
        keep = self.records["site_id"].isin(set(site_ids))
        return VisitationLog(self.records[keep].reset_index(drop=True))


@dataclass(frozen=True, eq=False)
class DuplicationMatrix:
    """
    d[i][j]: fraction of the universe visiting both i and j; d[i][i] is the reach of i.
    counts holds the integer numerators when the matrix was built from a log.
    """
    nodes: tuple[str, ...]
    d: np.ndarray
    universe_size: int
    counts: Optional[np.ndarray] = None

    def __post_init__(self):
        d = np.array(self.d, dtype=float, copy=True)
        n = len(self.nodes)
        if d.shape != (n, n):
            raise GraphError(f"duplication matrix shape {d.shape} does not match {n} nodes")
        if not np.array_equal(d, d.T):
            raise GraphError("duplication matrix must be symmetric")
        if np.any(d < 0) or np.any(d > 1):
            raise GraphError("duplication fractions must lie in [0, 1]")
        reach = np.diag(d)
        tol = 1e-12
        if np.any(d > np.minimum.outer(reach, reach) + tol):
            raise GraphError("shared audience exceeds the reach of one of the sites")
        if np.any(d < np.maximum(0.0, np.add.outer(reach, reach) - 1.0) - tol):
            raise GraphError("duplication below the Frechet lower bound")
        d.setflags(write=False)
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "d", d)

    @property
    def reach(self) -> np.ndarray:
        return np.diag(self.d).copy()

    @property
    def n_pairs(self) -> int:
        n = len(self.nodes)
        return n * (n - 1) // 2

    def expected(self) -> np.ndarray:
        reach = self.reach
        return np.outer(reach, reach)

    def to_pairs(self) -> pd.DataFrame:
        """One row per unordered pair (upper triangle), with the independence baseline."""
        iu = np.triu_indices(len(self.nodes), k=1)
        expected = self.expected()
        nodes = np.array(self.nodes, dtype=object)
        return pd.DataFrame({
            "src": nodes[iu[0]],
            "dst": nodes[iu[1]],
            "duplication": self.d[iu],
            "expected": expected[iu],
            "excess": self.d[iu] - expected[iu],
        })


class AudienceEngine:
    """
    Builds reach, duplication and the greater-than-expected-duplication network
    over a fixed node set.
    """
    def __init__(self, nodes: Sequence[SiteNode], options: Optional[AudienceOptions] = None,
                 max_nodes: int = DEFAULT_MAX_NODES):
        self.nodes = list(nodes)
        check_unique_ids(self.nodes)
        ensure_within_cap(len(self.nodes), max_nodes)
        self.node_ids = tuple(node.id for node in self.nodes)
        self.options = options or AudienceOptions()
        self.max_nodes = max_nodes

    def restricted(self, site_ids: Sequence[str]) -> "AudienceEngine":
        keep = set(site_ids)
        return AudienceEngine([n for n in self.nodes if n.id in keep], self.options, self.max_nodes)

    def _check_inputs(self, log: VisitationLog, panel: Panel) -> None:
        if panel.universe_size < 1:
            raise DualWebError("panel universe size must be at least 1")
        unknown = log.site_ids - set(self.node_ids)
        if unknown:
            raise UnknownNodeError(unknown, "node metadata")
        if log.n_users > panel.universe_size:
            raise DataValidationError(
                f"log references {log.n_users} users but the panel universe is {panel.universe_size}")

    def compute_reach(self, log: VisitationLog, panel: Panel) -> pd.Series:
        self._check_inputs(log, panel)
        visitors = log.records.groupby("site_id")["user_id"].nunique()
        visitors = visitors.reindex(list(self.node_ids), fill_value=0)
        return (visitors / panel.universe_size).astype(float).rename("reach")

    @staticmethod
    def expected_duplication(reach_i: float, reach_j: float) -> float:
        for r in (reach_i, reach_j):
            if not 0.0 <= r <= 1.0:
                raise DualWebError(f"reach {r} outside [0, 1]")
        return reach_i * reach_j

    def select_top_sites(self, reach: pd.Series, k: int) -> list[str]:
        """The k sites with the highest reach (ties by id), in node order."""
        ranked = (reach.rename("reach").rename_axis("id").reset_index()
                  .sort_values(["reach", "id"], ascending=[False, True], kind="mergesort"))
        top = set(ranked["id"].head(k))
        return [node_id for node_id in self.node_ids if node_id in top]

    def _incidence(self, log: VisitationLog) -> sp.csc_matrix:
        index = {node_id: i for i, node_id in enumerate(self.node_ids)}
        user_codes, _ = pd.factorize(log.records["user_id"], sort=True)
        site_codes = log.records["site_id"].map(index).to_numpy(dtype=np.int64)
        n_users = int(user_codes.max()) + 1 if len(user_codes) else 0
        data = np.ones(len(site_codes), dtype=np.int64)
        return sp.csc_matrix((data, (user_codes, site_codes)), shape=(n_users, len(self.node_ids)))

    def _co_visit_counts(self, X: sp.csc_matrix) -> np.ndarray:
        n = X.shape[1]
        counts = np.zeros((n, n), dtype=np.int64)
        if n == 0:
            return counts
        Xt = X.T.tocsr()
        chunks = [c for c in np.array_split(np.arange(n), min(self.options.n_workers, n)) if len(c)]

        def block(cols: np.ndarray) -> np.ndarray:
            return np.asarray((Xt @ X[:, cols]).todense(), dtype=np.int64)

        if len(chunks) == 1:
            blocks = [block(chunks[0])]
        else:
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                blocks = list(pool.map(block, chunks))
        for cols, values in zip(chunks, blocks):
            counts[:, cols] = values
        return counts

    def duplication_matrix(self, log: VisitationLog, panel: Panel) -> DuplicationMatrix:
        self._check_inputs(log, panel)
        counts = self._co_visit_counts(self._incidence(log))
        logger.info(f"   -> Duplication over {len(self.node_ids)} sites "
                    f"({len(self.node_ids) * (len(self.node_ids) - 1) // 2} pairs), N={panel.universe_size}")
        return DuplicationMatrix(self.node_ids, counts / panel.universe_size, panel.universe_size, counts)

    def build_audience_graph(self, dup: DuplicationMatrix) -> WeightedGraph:
        expected = dup.expected()
        excess = dup.d - expected
        margin = self.options.min_margin
        if dup.counts is not None and margin == 0:
            # exact test in integer space: c_ij / N > (c_i / N)(c_j / N)
            c = dup.counts
            diag = np.diag(c)
            tie = c * dup.universe_size > np.outer(diag, diag)
        else:
            tie = excess > margin
        np.fill_diagonal(tie, False)
        weights = np.where(tie, np.maximum(excess, 0.0), 0.0)
        graph = WeightedGraph(dup.nodes, weights)
        logger.info(f"   -> Audience ties above expectation: {graph.n_ties} of {dup.n_pairs} pairs")
        return graph

    def run(self, log: VisitationLog, panel: Panel) -> tuple[DuplicationMatrix, WeightedGraph]:
        dup = self.duplication_matrix(log, panel)
        return dup, self.build_audience_graph(dup)
