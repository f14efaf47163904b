"""
Static SVG map of one network: nodes colored by geography, labeled with their
community id, strongest ties drawn with weight-scaled opacity.
"""
import logging
import os
from typing import Mapping, Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

import matplotlib
import numpy as np
from matplotlib.colors import to_hex
from scipy.stats import rankdata

from src.analysis.layout_engine import LayoutResult
from src.community_engine import CommunityPartition
from src.config import RenderOptions
from src.exceptions import DualWebError, UnknownNodeError
from src.graph_core import GLOBAL, SiteNode, WeightedGraph

logger = logging.getLogger(__name__)

GLOBAL_COLOR = "#999999"
MARGIN = 20.0
LEGEND_WIDTH = 160.0


def geography_palette(geographies: Sequence[str]) -> dict[str, str]:
    """tab20 colors assigned in sorted code order; GLOBAL is always gray."""
    cmap = matplotlib.colormaps["tab20"]
    codes = sorted({geo for geo in geographies if geo != GLOBAL})
    palette = {geo: to_hex(cmap(i % cmap.N)) for i, geo in enumerate(codes)}
    if GLOBAL in geographies:
        palette[GLOBAL] = GLOBAL_COLOR
    return palette


def _check_coverage(g: WeightedGraph, layout: LayoutResult, partition: CommunityPartition,
                    by_id: Mapping[str, SiteNode]) -> None:
    if not partition.assignment:
        raise DualWebError("partition is empty")
    for context, known in (("layout", layout.positions), ("partition", partition.assignment),
                           ("node metadata", by_id)):
        missing = [node for node in g.nodes if node not in known]
        if missing:
            raise UnknownNodeError(missing, context)


def _edge_lines(g: WeightedGraph, layout: LayoutResult, quantile: float) -> list[str]:
    rows, cols = np.nonzero(np.triu(g.weights, k=1))
    if len(rows) == 0:
        return []
    weights = g.weights[rows, cols]
    threshold = np.quantile(weights, 1.0 - quantile)
    # opacity follows the weight's quantile among all ties
    opacity = 0.1 + 0.7 * rankdata(weights, method="max") / len(weights)
    lines = []
    for i, j, w, alpha in zip(rows, cols, weights, opacity):
        if w < threshold:
            continue
        x1, y1 = layout.positions[g.nodes[i]]
        x2, y2 = layout.positions[g.nodes[j]]
        lines.append(f'<line x1="{x1 + MARGIN:.2f}" y1="{y1 + MARGIN:.2f}" '
                     f'x2="{x2 + MARGIN:.2f}" y2="{y2 + MARGIN:.2f}" stroke-opacity="{alpha:.3f}"/>')
    return lines


def render_svg(g: WeightedGraph, layout: LayoutResult, partition: CommunityPartition,
               metadata: Sequence[SiteNode] | Mapping[str, SiteNode], path: str,
               options: Optional[RenderOptions] = None) -> str:
    """Writes the SVG to `path`. Node elements follow graph node order."""
    options = options or RenderOptions()
    by_id = dict(metadata) if isinstance(metadata, Mapping) else {n.id: n for n in metadata}
    _check_coverage(g, layout, partition, by_id)

    palette = geography_palette([by_id[node].geography for node in g.nodes])
    width = layout.width + 2 * MARGIN + LEGEND_WIDTH
    height = layout.height + 2 * MARGIN
    r = options.node_radius

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>',
        '<g class="edges" stroke="#555555" stroke-width="0.6">',
        *_edge_lines(g, layout, options.edge_quantile),
        "</g>",
        '<g class="nodes" stroke="#ffffff" stroke-width="0.8">',
    ]
    for node in g.nodes:
        x, y = layout.positions[node]
        fill = palette[by_id[node].geography]
        out.append(f'<circle cx="{x + MARGIN:.2f}" cy="{y + MARGIN:.2f}" r="{r:g}" fill="{fill}">'
                   f"<title>{escape(node)}</title></circle>")
    out.append("</g>")
    out.append(f'<g class="labels" font-family="sans-serif" font-size="{max(r * 1.4, 6):.0f}" '
               f'text-anchor="middle" fill="#111111">')
    for node in g.nodes:
        x, y = layout.positions[node]
        out.append(f'<text class="label" x="{x + MARGIN:.2f}" y="{y + MARGIN - r - 2:.2f}" '
                   f'data-node={quoteattr(node)}>{partition.assignment[node]}</text>')
    out.append("</g>")

    legend_x = layout.width + 2 * MARGIN
    out.append('<g class="legend" font-family="sans-serif" font-size="12" fill="#111111">')
    out.append(f'<text x="{legend_x:.0f}" y="{MARGIN:.0f}">geography</text>')
    for k, (geo, color) in enumerate(palette.items()):
        y = MARGIN + 12 + 18 * k
        out.append(f'<rect x="{legend_x:.0f}" y="{y:.0f}" width="12" height="12" fill="{color}"/>')
        out.append(f'<text x="{legend_x + 18:.0f}" y="{y + 10:.0f}">{escape(geo)}</text>')
    out.append("</g>")
    out.append("</svg>")

    parent = os.path.dirname(str(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
    logger.info(f"   -> Rendered {g.n} nodes with {len(palette)} geography color(s) to {path}")
    return str(path)
