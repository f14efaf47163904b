"""
Command-line front end: `python -m src <subcommand>` (program name dualweb).

Exit codes: 0 success, 1 pipeline/data error, 2 invalid configuration or arguments.
"""
import argparse
import json
import logging
import os
import sys
from typing import Optional

from pydantic import ValidationError

from src.analysis.layout_engine import LayoutEngine
from src.analysis.svg_renderer import render_svg
from src.analysis.visual_engine import VisualEngine
from src.audience_engine import AudienceEngine
from src.community_engine import CommunityEngine, cluster_purity
from src.config import (AudienceOptions, CommunityOptions, CrawlConfig, HyperlinkOptions, LayoutOptions,
                        MetricsOptions, QapOptions, RenderOptions, RunConfig, SynthConfig, default_seed)
from src.crawler import Crawler
from src.data_exporter import DataExporter
from src.exceptions import DualWebError
from src.graph_core import DEFAULT_MAX_NODES
from src.hyperlink_engine import HyperlinkEngine
from src.load_data import DataLoader
from src.metrics_engine import MetricsEngine, degree_ccdf
from src.orchestrator import run_full_pipeline
from src.qap_engine import QapEngine
from src.schema import DegreeCcdfSchema
from src.synth_engine import SynthEngine

logger = logging.getLogger("dualweb")


def _seed(args) -> int:
    return args.seed if args.seed is not None else default_seed()


def _geographies(args) -> Optional[set[str]]:
    """Comma-separated --geographies as a set; None when the flag is absent."""
    raw = getattr(args, "geographies", None)
    return {code.strip() for code in raw.split(",") if code.strip()} if raw else None


def _exporter_for(path: str) -> tuple[DataExporter, str]:
    """Exporter rooted at the file's directory, plus the bare file name."""
    return DataExporter(os.path.dirname(os.path.abspath(path))), os.path.basename(path)


def _write_json(path: str, payload) -> str:
    exporter, name = _exporter_for(path)
    return exporter.write_json(name, payload)


def _load_config(model, path: Optional[str], overrides: dict):
    """File values first, then every CLI flag that was actually given."""
    base = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            base = json.load(fh)
    base.update({k: v for k, v in overrides.items() if v is not None})
    return model.model_validate(base)


def cmd_synth(args) -> int:
    cfg = _load_config(SynthConfig, args.config,
                       {"seed": args.seed, "n_sites": args.n_sites, "n_users": args.n_users})
    paths = SynthEngine(cfg).write(DataExporter(args.out_dir))
    logger.info(f"Synthetic dataset written: {', '.join(sorted(paths.values()))}")
    return 0


def cmd_crawl(args) -> int:
    base = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
    if args.seeds:
        base["seeds"] = [node.model_dump() for node in DataLoader.load_nodes(args.seeds)]
    overrides = {
        "max_pages_per_site": args.max_pages, "max_depth": args.max_depth,
        "per_host_delay": args.delay, "timeout": args.timeout, "user_agent": args.user_agent,
        "max_workers": args.workers, "proxy": args.proxy,
        "respect_robots": False if args.ignore_robots else None,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    cfg = CrawlConfig.model_validate(base)

    report = Crawler(cfg).crawl()
    exporter, name = _exporter_for(args.out)
    exporter.write_directed_edges(name, report.resolved_edges)
    report_path = args.report or os.path.splitext(args.out)[0] + "_report.json"
    _write_json(report_path, report.summary())
    return 0


def cmd_build_audience(args) -> int:
    loader = DataLoader(metadata_path=args.meta, log_path=args.log, panel_path=args.panel)
    nodes = loader.load_nodes(args.meta, _geographies(args))
    log = loader.load_visits(args.log)
    panel = loader.load_panel(args.panel)
    options = AudienceOptions(min_margin=args.min_margin, top_k=args.top_k, n_workers=args.workers)

    engine = AudienceEngine(nodes, options, args.max_nodes)
    if options.top_k is not None:
        top = engine.select_top_sites(engine.compute_reach(log, panel), options.top_k)
        engine, log = engine.restricted(top), log.restrict(top)
    dup, graph = engine.run(log, panel)

    exporter, name = _exporter_for(args.out)
    exporter.write_graph(name, graph)
    if args.pairs_out:
        pairs_exporter, pairs_name = _exporter_for(args.pairs_out)
        pairs_exporter.write_pairs(pairs_name, dup)
    if args.edges_out:
        edges_exporter, edges_name = _exporter_for(args.edges_out)
        edges_exporter.write_weighted_edges(edges_name, graph)
    return 0


def cmd_build_hyperlink(args) -> int:
    nodes = DataLoader.load_nodes(args.meta, _geographies(args))
    engine = HyperlinkEngine(nodes, HyperlinkOptions(symmetrize=args.symmetrize), args.max_nodes)
    directed = engine.ingest_edge_list(args.edges)
    if args.drop_report:
        unreachable = DataLoader.load_json(args.drop_report).get("unreachable_sites", [])
        if unreachable:
            logger.info(f"   -> Dropping {len(unreachable)} uncrawlable site(s)")
        directed = engine.drop_sites(directed, unreachable)
    graph = engine.build_hyperlink_graph(directed)

    exporter, name = _exporter_for(args.out)
    exporter.write_graph(name, graph)
    if args.edges_out:
        edges_exporter, edges_name = _exporter_for(args.edges_out)
        edges_exporter.write_weighted_edges(edges_name, graph)
    return 0


def cmd_metrics(args) -> int:
    graph = DataLoader.load_graph(args.graph)
    stats = MetricsEngine(MetricsOptions(clustering=args.clustering, centralization=args.centralization,
                                         n_hubs=args.hubs)).compute(graph)
    _write_json(args.out, stats)
    if args.ccdf_out:
        exporter, name = _exporter_for(args.ccdf_out)
        exporter.write_frame(name, degree_ccdf(graph), DegreeCcdfSchema)
    if args.plot:
        visuals = VisualEngine(os.path.dirname(os.path.abspath(args.plot)))
        visuals.plot_degree_ccdf(graph, args.name, os.path.basename(args.plot))
    return 0


def cmd_communities(args) -> int:
    graph = DataLoader.load_graph(args.graph)
    engine = CommunityEngine(CommunityOptions(resolution=args.resolution, restarts=args.restarts,
                                              n_workers=args.workers))
    partition = engine.detect_communities(graph, _seed(args))
    _write_json(args.out, partition)
    if args.meta:
        nodes = DataLoader.load_nodes(args.meta, _geographies(args))
        reports = {attr: cluster_purity(partition, nodes, attr) for attr in ("geography", "language")}
        target = args.purity_out or os.path.splitext(args.out)[0] + "_purity.json"
        _write_json(target, {attr: report.model_dump(mode="json") for attr, report in reports.items()})
    return 0


def cmd_qap(args) -> int:
    a = DataLoader.load_graph(args.a)
    b = DataLoader.load_graph(args.b)
    options = QapOptions(n_permutations=args.perms, tail=args.tail, transform=args.transform,
                         ties=args.ties, n_workers=args.workers)
    result = QapEngine(options).run(a, b, _seed(args), progress=args.progress)
    _write_json(args.out, result)
    return 0


def cmd_layout(args) -> int:
    graph = DataLoader.load_graph(args.graph)
    options = LayoutOptions(iterations=args.iterations, width=args.width, height=args.height)
    _write_json(args.out, LayoutEngine(options).run(graph, _seed(args)))
    return 0


def cmd_render(args) -> int:
    graph = DataLoader.load_graph(args.graph)
    layout = DataLoader.load_layout(args.pos)
    partition = DataLoader.load_partition(args.partition)
    nodes = DataLoader.load_nodes(args.meta, _geographies(args))
    render_svg(graph, layout, partition, nodes, args.out,
               RenderOptions(edge_quantile=args.edge_quantile, node_radius=args.node_radius))
    return 0


def cmd_reproduce(args) -> int:
    base = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
    if args.out_dir is not None:
        base["output_dir"] = args.out_dir
    if args.seed is not None:
        base["seed"] = args.seed
    cfg = RunConfig.model_validate(base)
    report = run_full_pipeline(cfg, progress=args.progress)
    logger.info(f"Report written to {os.path.join(str(cfg.output_dir), 'report.json')} "
                f"(checks: {sum(report.directional_checks.values())}/{len(report.directional_checks)} met)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualweb",
                                     description="Audience vs. hyperlink networks of websites.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str, seeded: bool = False) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        if seeded:
            p.add_argument("--seed", type=int, default=None, help="falls back to $DUALWEB_SEED, then 42")
        return p

    def add_geographies(p: argparse.ArgumentParser) -> None:
        p.add_argument("--geographies", help="comma-separated allowed geography codes (GLOBAL always allowed)")

    p = add("synth", cmd_synth, "generate a paired synthetic dataset", seeded=True)
    p.add_argument("--config", help="SynthConfig JSON")
    p.add_argument("--out-dir", default="data")
    p.add_argument("--n-sites", type=int)
    p.add_argument("--n-users", type=int)

    p = add("crawl", cmd_crawl, "crawl the seed sites and count inter-site hyperlinks")
    p.add_argument("--seeds", help="node metadata CSV of the seed sites (overrides seeds in --config)")
    p.add_argument("--out", required=True, help="directed edge list CSV")
    p.add_argument("--report", help="crawl report JSON (default: <out stem>_report.json)")
    p.add_argument("--config", help="CrawlConfig JSON")
    p.add_argument("--max-pages", type=int)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--delay", type=int, help="per-host delay in ms")
    p.add_argument("--timeout", type=int, help="ms")
    p.add_argument("--user-agent")
    p.add_argument("--workers", type=int)
    p.add_argument("--proxy")
    p.add_argument("--ignore-robots", action="store_true")

    p = add("build-audience", cmd_build_audience, "audience network from a visitation log")
    p.add_argument("--log", required=True)
    p.add_argument("--panel", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--out", required=True, help="graph JSON")
    p.add_argument("--pairs-out", help="duplication pairs CSV")
    p.add_argument("--edges-out", help="weighted edge list CSV")
    p.add_argument("--top-k", type=int)
    p.add_argument("--min-margin", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES)
    add_geographies(p)

    p = add("build-hyperlink", cmd_build_hyperlink, "hyperlink network from a directed edge list")
    p.add_argument("--edges", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--out", required=True, help="graph JSON")
    p.add_argument("--edges-out", help="weighted edge list CSV")
    p.add_argument("--symmetrize", choices=["sum", "max", "or"], default="sum")
    p.add_argument("--drop-report", help="crawl report JSON; its unreachable sites are removed")
    p.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES)
    add_geographies(p)

    p = add("metrics", cmd_metrics, "descriptive statistics of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clustering", choices=["avg-local", "transitivity"], default="avg-local")
    p.add_argument("--centralization", choices=["freeman", "hhi"], default="freeman")
    p.add_argument("--hubs", type=int, default=10)
    p.add_argument("--ccdf", dest="ccdf_out", help="degree distribution CSV")
    p.add_argument("--plot", help="degree CCDF SVG")
    p.add_argument("--name", default="network", help="network name used in the plot title")

    p = add("communities", cmd_communities, "Louvain communities (and purity with --meta)", seeded=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--meta", help="node metadata CSV for purity scores")
    p.add_argument("--purity-out")
    add_geographies(p)

    p = add("qap", cmd_qap, "QAP correlation between two graphs", seeded=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--perms", type=int, default=1000)
    p.add_argument("--tail", choices=["two_sided", "greater", "less"], default="two_sided")
    p.add_argument("--transform", choices=["none", "log1p", "rank"], default="none")
    p.add_argument("--ties", choices=["valued", "binary"], default="valued")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--progress", action="store_true")

    p = add("layout", cmd_layout, "Fruchterman-Reingold layout", seeded=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--width", type=float, default=1000.0)
    p.add_argument("--height", type=float, default=1000.0)

    p = add("render", cmd_render, "SVG map of a laid-out graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--pos", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--edge-quantile", type=float, default=0.2)
    p.add_argument("--node-radius", type=float, default=6.0)
    add_geographies(p)

    p = add("reproduce", cmd_reproduce, "run the full comparison pipeline", seeded=True)
    p.add_argument("--config", help="RunConfig JSON")
    p.add_argument("--out-dir")
    p.add_argument("--progress", action="store_true")
    return parser


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.func(args)
    except ValidationError as exc:
        logger.error(f"Invalid configuration:\n{exc}")
        return 2
    except (DualWebError, FileNotFoundError) as exc:
        logger.error(f"Error: {exc}")
        return 1
