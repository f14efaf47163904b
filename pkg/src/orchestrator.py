import logging
import os
from contextlib import contextmanager
from datetime import datetime
from typing import Optional

from pydantic import BaseModel

from src.analysis.layout_engine import LayoutEngine
from src.analysis.svg_renderer import render_svg
from src.analysis.table_generator import NetworkSummary, TableGenerator
from src.analysis.visual_engine import VisualEngine
from src.audience_engine import AudienceEngine
from src.community_engine import (CommunityEngine, CommunityPartition, PurityReport, cluster_purity,
                                  partition_agreement)
from src.config import RunConfig, run_config
from src.data_exporter import DataExporter
from src.exceptions import StageError
from src.graph_core import SiteNode, WeightedGraph, align_common
from src.hyperlink_engine import HyperlinkEngine
from src.load_data import DataLoader
from src.metrics_engine import MetricsEngine, NetworkStats, degree_ccdf
from src.qap_engine import QapEngine, QapResult
from src.schema import DegreeCcdfSchema, StatsTableSchema
from src.synth_engine import SynthEngine

logger = logging.getLogger(__name__)

N_STAGES = 9
NETWORKS = ("hyperlink", "audience")


class NetworkReport(BaseModel):
    stats: NetworkStats
    n_communities: int
    modularity_q: float
    geography_purity: PurityReport
    language_purity: PurityReport
    geography_agreement: Optional[float]


class ReproduceReport(BaseModel):
    seed: int
    synthetic: bool
    n_nodes: int
    hyperlink: NetworkReport
    audience: NetworkReport
    qap: QapResult
    directional_checks: dict[str, bool]
    artifacts: dict[str, str]


@contextmanager
def stage(number: int, name: str):
    """Logs the stage banner; any failure inside is re-raised as StageError(name)."""
    logger.info(f"[{number}/{N_STAGES}] {name} ({datetime.now().strftime('%H:%M:%S')})...")
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        logger.error(f"   -> Stage '{name}' failed: {exc}")
        raise StageError(name, exc) from exc


def geography_labels(nodes: list[SiteNode], ids) -> dict[str, str]:
    """Geography per node, GLOBAL platforms left out."""
    by_id = {node.id: node for node in nodes}
    return {i: by_id[i].geography for i in ids if not by_id[i].is_global}


def run_full_pipeline(cfg: Optional[RunConfig] = None, progress: bool = False) -> ReproduceReport:
    """
    synth (optional) -> audience & hyperlink networks -> common node set -> metrics ->
    communities & purity -> QAP -> layouts, maps and degree figures -> table and report.
    Outputs written before a failing stage are kept.
    """
    cfg = cfg or run_config
    start_time = datetime.now()
    out = str(cfg.output_dir)
    exporter = DataExporter(out)
    artifacts: dict[str, str] = {}

    def keep(key: str, path: str) -> None:
        artifacts[key] = os.path.relpath(path, out).replace(os.sep, "/")

    with stage(1, "Loading inputs"):
        if cfg.synth is not None:
            synth_cfg = cfg.synth.model_copy(update={"seed": cfg.seed})
            paths = SynthEngine(synth_cfg).write(DataExporter(os.path.join(out, "data")))
            for key, path in paths.items():
                keep(f"input_{key}", path)
        else:
            paths = {"metadata_path": cfg.metadata_path, "log_path": cfg.log_path,
                     "panel_path": cfg.panel_path, "edges_path": cfg.edges_path}
        allowed = set(cfg.allowed_geographies) if cfg.allowed_geographies is not None else None
        loader = DataLoader(**paths, allowed_geographies=allowed)
        nodes, log, panel, edges = loader.load_all()

    with stage(2, "Building audience network"):
        audience_engine = AudienceEngine(nodes, cfg.audience, cfg.max_nodes)
        if cfg.audience.top_k is not None:
            top = audience_engine.select_top_sites(audience_engine.compute_reach(log, panel), cfg.audience.top_k)
            logger.info(f"   -> Keeping the top {len(top)} site(s) by reach")
            audience_engine = audience_engine.restricted(top)
            log = log.restrict(top)
        dup, audience = audience_engine.run(log, panel)
        keep("duplication_pairs", exporter.write_pairs("graphs/duplication_pairs.csv", dup))

    with stage(3, "Building hyperlink network"):
        hyperlink_engine = HyperlinkEngine(nodes, cfg.hyperlink, cfg.max_nodes)
        directed = hyperlink_engine.aggregate(edges)
        hyperlink = hyperlink_engine.build_hyperlink_graph(directed)
        keep("hyperlink_directed", exporter.write_directed_edges("graphs/hyperlink_directed.csv", directed))

    with stage(4, "Aligning node sets"):
        hyperlink, audience = align_common(hyperlink, audience)
        graphs: dict[str, WeightedGraph] = {"hyperlink": hyperlink, "audience": audience}
        for name, g in graphs.items():
            keep(f"{name}_graph", exporter.write_graph(f"graphs/{name}.json", g))
            keep(f"{name}_edges", exporter.write_weighted_edges(f"graphs/{name}_edges.csv", g))
        logger.info(f"   -> {hyperlink.n} node(s) in both networks")

    with stage(5, "Computing descriptive statistics"):
        metrics = MetricsEngine(cfg.metrics)
        stats: dict[str, NetworkStats] = {}
        for name, g in graphs.items():
            stats[name] = metrics.compute(g)
            keep(f"{name}_stats", exporter.write_json(f"stats/{name}.json", stats[name]))
            keep(f"{name}_ccdf", exporter.write_frame(f"stats/{name}_degree_ccdf.csv", degree_ccdf(g),
                                                      DegreeCcdfSchema))

    with stage(6, "Detecting communities"):
        community_engine = CommunityEngine(cfg.communities)
        partitions: dict[str, CommunityPartition] = {}
        purity: dict[str, dict[str, PurityReport]] = {}
        agreement: dict[str, Optional[float]] = {}
        for name, g in graphs.items():
            partitions[name] = community_engine.detect_communities(g, cfg.seed)
            purity[name] = {attr: cluster_purity(partitions[name], nodes, attr) for attr in ("geography", "language")}
            geo = geography_labels(nodes, g.nodes)
            agreement[name] = partition_agreement(partitions[name].assignment, geo) if geo else None
            keep(f"{name}_partition", exporter.write_json(f"communities/{name}_partition.json", partitions[name]))
            for attr, report in purity[name].items():
                keep(f"{name}_{attr}_purity",
                     exporter.write_json(f"communities/{name}_{attr}_purity.json", report))
            logger.info(f"   -> {name}: geography purity {purity[name]['geography'].mean_purity}")

    with stage(7, "Running QAP correlation"):
        qap = QapEngine(cfg.qap).run(audience, hyperlink, cfg.seed, progress=progress)
        keep("qap", exporter.write_json("qap.json", qap))

    with stage(8, "Drawing layouts and figures"):
        layout_engine = LayoutEngine(cfg.layout)
        for name, g in graphs.items():
            layout = layout_engine.run(g, cfg.seed)
            keep(f"{name}_layout", exporter.write_json(f"layouts/{name}.json", layout))
            keep(f"{name}_map", render_svg(g, layout, partitions[name], nodes,
                                           exporter.path(f"figures/{name}_map.svg"), cfg.render))
        visuals = VisualEngine(os.path.join(out, "figures"))
        keep("degree_comparison", visuals.plot_degree_comparison(hyperlink, audience))

    with stage(9, "Writing table and report"):
        summaries = {
            name: NetworkSummary(stats[name], partitions[name], purity[name]["geography"], purity[name]["language"])
            for name in NETWORKS
        }
        tables = TableGenerator(summaries["hyperlink"], summaries["audience"])
        keep("table1", exporter.write_frame("table1.csv", tables.generate_stats_table(), StatsTableSchema))
        report = ReproduceReport(
            seed=cfg.seed,
            synthetic=cfg.synth is not None,
            n_nodes=hyperlink.n,
            hyperlink=_network_report(stats, partitions, purity, agreement, "hyperlink"),
            audience=_network_report(stats, partitions, purity, agreement, "audience"),
            qap=qap,
            directional_checks=tables.directional_checks(),
            artifacts=dict(sorted(artifacts.items())),
        )
        exporter.write_json("report.json", report)

    failed = [k for k, ok in report.directional_checks.items() if not ok]
    if failed:
        logger.warning(f"   -> Directional check(s) not met: {', '.join(failed)}")
    logger.info(f"PIPELINE FINISHED in {datetime.now() - start_time}")
    return report


def _network_report(stats, partitions, purity, agreement, name: str) -> NetworkReport:
    return NetworkReport(
        stats=stats[name],
        n_communities=partitions[name].n_communities,
        modularity_q=partitions[name].modularity_q,
        geography_purity=purity[name]["geography"],
        language_purity=purity[name]["language"],
        geography_agreement=agreement[name],
    )


if __name__ == "__main__":
    run_full_pipeline()
