import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from src.config import HyperlinkOptions
from src.crawler import HostResolver
from src.graph_core import (DEFAULT_MAX_NODES, DirectedCountGraph, SiteNode, WeightedGraph,
                            check_unique_ids, ensure_within_cap, symmetrize)
from src.load_data import DataLoader

logger = logging.getLogger(__name__)


class HyperlinkEngine:
    """
    Directed inter-site hyperlink counts -> undirected hyperlink network.
    Edge-list endpoints may be node ids, hostnames or URLs; the latter two are
    resolved through the nodes' host patterns.
    """
    def __init__(self, nodes: Sequence[SiteNode], options: Optional[HyperlinkOptions] = None,
                 max_nodes: int = DEFAULT_MAX_NODES):
        self.nodes = list(nodes)
        self.by_id = check_unique_ids(self.nodes)
        ensure_within_cap(len(self.nodes), max_nodes)
        self.node_ids = tuple(node.id for node in self.nodes)
        self.options = options or HyperlinkOptions()
        self.resolver = HostResolver(self.nodes)
        self.unresolved_rows = 0
        self.self_links_dropped = 0

    def _resolve(self, value: str) -> Optional[str]:
        if value in self.by_id:
            return value
        target = value if "://" in value else f"http://{value}/"
        return self.resolver.resolve(target)

    def aggregate(self, edges: pd.DataFrame) -> DirectedCountGraph:
        """Sum counts per resolved (src, dst); self-links and unresolvable rows are dropped."""
        index = {node_id: i for i, node_id in enumerate(self.node_ids)}
        counts = np.zeros((len(self.node_ids), len(self.node_ids)), dtype=np.int64)
        self.unresolved_rows = 0
        self.self_links_dropped = 0
        unresolved_hosts = set()

        cache: dict[str, Optional[str]] = {}
        for src, dst, count in edges[["src", "dst", "count"]].itertuples(index=False):
            for value in (src, dst):
                if value not in cache:
                    cache[value] = self._resolve(value)
            a, b = cache[src], cache[dst]
            if a is None or b is None:
                self.unresolved_rows += 1
                unresolved_hosts.update(v for v in (src, dst) if cache[v] is None)
                continue
            if a == b:
                self.self_links_dropped += 1
                continue
            counts[index[a], index[b]] += int(count)

        if self.unresolved_rows:
            logger.warning(f"   -> Skipped {self.unresolved_rows} edge row(s) with unresolvable endpoints "
                           f"({len(unresolved_hosts)} distinct): {', '.join(sorted(unresolved_hosts)[:5])}")
        if self.self_links_dropped:
            logger.info(f"   -> Dropped {self.self_links_dropped} self-link row(s)")
        return DirectedCountGraph(self.node_ids, counts)

    def ingest_edge_list(self, path: str | Path) -> DirectedCountGraph:
        edges = DataLoader.load_directed_edges(path)
        graph = self.aggregate(edges)
        logger.info(f"   -> Ingested {len(edges)} edge row(s) into {graph.n_edges} directed edge(s)")
        return graph

    def build_hyperlink_graph(self, g: DirectedCountGraph) -> WeightedGraph:
        """Valued undirected view; call .dichotomized() for 'at least one link either way'."""
        return symmetrize(g, self.options.symmetrize)

    @staticmethod
    def drop_sites(g: DirectedCountGraph, site_ids: Sequence[str]) -> DirectedCountGraph:
        """Remove sites that could not be crawled from the node set."""
        drop = set(site_ids)
        return g.subgraph([node for node in g.nodes if node not in drop])
