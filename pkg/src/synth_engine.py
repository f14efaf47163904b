"""
Seeded generators for a paired synthetic dataset.

Audiences are block-structured: a user belongs to one geo-linguistic block and visits
in-block sites far more often than out-of-block ones, global platforms at a flat rate.
Hyperlinks ignore blocks and global status entirely: sites enter in random order and
link to established sites by preferential attachment, plus a few early hubs.
"""
import logging
from typing import Optional

import numpy as np
import pandas as pd

from src.audience_engine import Panel, VisitationLog
from src.config import SYNTH_LOCALES, SynthConfig
from src.exceptions import UnknownNodeError
from src.graph_core import GLOBAL, DirectedCountGraph, SiteNode

logger = logging.getLogger(__name__)


def _streams(cfg: SynthConfig) -> tuple[np.random.Generator, np.random.Generator]:
    audience, hyperlink = np.random.SeedSequence(cfg.seed).spawn(2)
    return np.random.default_rng(audience), np.random.default_rng(hyperlink)


def synth_nodes(cfg: SynthConfig) -> list[SiteNode]:
    """Global platforms first, then regional sites assigned to blocks round-robin."""
    nodes = [
        SiteNode(id=f"global-{k:02d}", host_patterns=(f"global-{k:02d}.example",), geography=GLOBAL)
        for k in range(cfg.n_global_sites)
    ]
    for k in range(cfg.n_sites - cfg.n_global_sites):
        geo, lang = SYNTH_LOCALES[k % cfg.n_blocks]
        site_id = f"{geo.lower()}-{k:03d}"
        nodes.append(SiteNode(id=site_id, host_patterns=(f"{site_id}.example",),
                              languages=(lang,), geography=geo))
    return nodes


def site_blocks(cfg: SynthConfig) -> np.ndarray:
    """Block index per node in synth_nodes order; -1 for global platforms."""
    regional = np.arange(cfg.n_sites - cfg.n_global_sites) % cfg.n_blocks
    return np.concatenate([np.full(cfg.n_global_sites, -1, dtype=np.int64), regional])


def generate_audience_log(cfg: SynthConfig) -> tuple[VisitationLog, Panel, list[SiteNode]]:
    nodes = synth_nodes(cfg)
    rng, _ = _streams(cfg)
    blocks = site_blocks(cfg)

    user_blocks = rng.integers(cfg.n_blocks, size=cfg.n_users)
    probs = np.where(user_blocks[:, None] == blocks[None, :], cfg.p_in, cfg.p_out)
    probs[:, blocks == -1] = cfg.p_global
    visited = rng.random((cfg.n_users, len(nodes))) < probs

    users, sites = np.nonzero(visited)
    ids = np.array([node.id for node in nodes], dtype=object)
    frame = pd.DataFrame({
        "user_id": pd.Series([f"u{u:05d}" for u in users], dtype=object),
        "site_id": pd.Series(ids[sites], dtype=object),
    })
    log = VisitationLog.from_frame(frame)
    panel = Panel(universe_size=max(cfg.n_users, 1), window="synthetic")
    logger.info(f"   -> Synthetic audience: {cfg.n_users} users, {len(log.records)} visits "
                f"over {len(nodes)} sites in {cfg.n_blocks} block(s)")
    return log, panel, nodes


def generate_hyperlink_graph(cfg: SynthConfig, nodes: Optional[list[SiteNode]] = None) -> DirectedCountGraph:
    """
    Sites enter in a uniformly random order, blind to block and to global status. Each
    entrant links to min(ba_m, #predecessors) of its predecessors, drawn without
    replacement with probability proportional to in-degree + 1. The first n_hubs
    entrants are hubs: every later site also links to each hub it has not picked yet
    with probability p_hub. Owner cliques are cross-linked in both directions afterwards.
    """
    nodes = nodes or synth_nodes(cfg)
    n = len(nodes)
    _, rng = _streams(cfg)
    index = {node.id: i for i, node in enumerate(nodes)}
    order = rng.permutation(n).tolist()
    hubs = order[:min(cfg.n_hubs, n)]

    counts = np.zeros((n, n), dtype=np.int64)
    in_degree = np.zeros(n, dtype=np.int64)
    for t, site in enumerate(order):
        predecessors = np.array(order[:t], dtype=np.int64)
        if t:
            attraction = in_degree[predecessors] + 1.0
            targets = rng.choice(predecessors, size=min(cfg.ba_m, t), replace=False,
                                 p=attraction / attraction.sum())
            counts[site, targets] = 1
            in_degree[targets] += 1
        if t >= len(hubs):
            for hub in hubs:
                if counts[site, hub] == 0 and rng.random() < cfg.p_hub:
                    counts[site, hub] = 1
                    in_degree[hub] += 1

    unknown = {site for group in cfg.owner_cliques for site in group if site not in index}
    if unknown:
        raise UnknownNodeError(unknown, "synthetic node set")
    for group in cfg.owner_cliques:
        members = [index[site] for site in group]
        for a in members:
            for b in members:
                if a != b:
                    counts[a, b] = max(counts[a, b], 1)

    graph = DirectedCountGraph(tuple(node.id for node in nodes), counts)
    logger.info(f"   -> Synthetic hyperlinks: {graph.n_edges} directed edge(s), "
                f"max in-degree {int(graph.in_degrees().max()) if n else 0}")
    return graph


class SynthEngine:
    """
    Generates the paired dataset and writes it in the standard input formats.
    """
    def __init__(self, cfg: Optional[SynthConfig] = None):
        self.cfg = cfg or SynthConfig()

    def generate(self) -> tuple[list[SiteNode], VisitationLog, Panel, DirectedCountGraph]:
        log, panel, nodes = generate_audience_log(self.cfg)
        edges = generate_hyperlink_graph(self.cfg, nodes)
        return nodes, log, panel, edges

    def write(self, exporter) -> dict[str, str]:
        """Writes nodes.csv, visits.csv, panel.json and edges.csv; returns their paths."""
        nodes, log, panel, edges = self.generate()
        return {
            "metadata_path": exporter.write_nodes("nodes.csv", nodes),
            "log_path": exporter.write_visits("visits.csv", log),
            "panel_path": exporter.write_panel("panel.json", panel),
            "edges_path": exporter.write_directed_edges("edges.csv", edges),
        }
