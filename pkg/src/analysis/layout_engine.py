"""
Fruchterman-Reingold force-directed layout on a fixed rectangular frame.
"""
import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, model_validator

from src.config import LayoutOptions
from src.exceptions import GraphError
from src.graph_core import WeightedGraph

logger = logging.getLogger(__name__)

MIN_DISTANCE = 0.01


class LayoutResult(BaseModel):
    positions: dict[str, tuple[float, float]]
    iterations: int
    seed: int
    width: float = 1000.0
    height: float = 1000.0

    @model_validator(mode="after")
    def _inside_frame(self):
        for node, (x, y) in self.positions.items():
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"non-finite position for node '{node}'")
            if not (0.0 <= x <= self.width and 0.0 <= y <= self.height):
                raise ValueError(f"node '{node}' lies outside the {self.width}x{self.height} frame")
        return self


def fr_layout(g: WeightedGraph, iterations: int = 500, seed: int = 42,
              width: float = 1000.0, height: float = 1000.0, c: float = 1.0) -> LayoutResult:
    """
    Classic FR: optimal distance k = c * sqrt(area / n), repulsion k^2/d between every
    pair, attraction d^2/k along ties scaled by w / max(w). Displacements are capped by
    a temperature starting at width/10 and cooling linearly to 0; positions are clipped
    to the frame after every step.
    """
    n = g.n
    if n == 0:
        raise GraphError("cannot lay out an empty graph")
    if n == 1:
        return LayoutResult(positions={g.nodes[0]: (width / 2, height / 2)},
                            iterations=iterations, seed=seed, width=width, height=height)

    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2)) * np.array([width, height])
    k = c * math.sqrt(width * height / n)
    w = g.weights
    w_max = w.max()
    attraction_scale = w / w_max if w_max > 0 else w
    t0 = width / 10.0

    for step in range(iterations):
        temperature = t0 * (1.0 - step / iterations)
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((delta ** 2).sum(axis=-1))
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, MIN_DISTANCE)

        repulsion = (k * k) / dist
        attraction = attraction_scale * (dist * dist) / k
        force = repulsion - attraction
        np.fill_diagonal(force, 0.0)
        displacement = (delta / dist[:, :, None] * force[:, :, None]).sum(axis=1)

        length = np.sqrt((displacement ** 2).sum(axis=1))
        length = np.maximum(length, MIN_DISTANCE)
        pos += displacement / length[:, None] * np.minimum(length, temperature)[:, None]
        pos[:, 0] = np.clip(pos[:, 0], 0.0, width)
        pos[:, 1] = np.clip(pos[:, 1], 0.0, height)

    logger.info(f"   -> FR layout: {n} nodes, {iterations} iterations, seed={seed}")
    return LayoutResult(
        positions={node: (float(x), float(y)) for node, (x, y) in zip(g.nodes, pos)},
        iterations=iterations, seed=seed, width=width, height=height,
    )


class LayoutEngine:
    def __init__(self, options: Optional[LayoutOptions] = None):
        self.options = options or LayoutOptions()

    def run(self, g: WeightedGraph, seed: int) -> LayoutResult:
        opts = self.options
        return fr_layout(g, iterations=opts.iterations, seed=seed,
                         width=opts.width, height=opts.height, c=opts.c)
