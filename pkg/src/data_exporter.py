import json
import logging
import os
from typing import Iterable, Union

import pandas as pd
import pandera.pandas as pa
from pydantic import BaseModel

from src.audience_engine import DuplicationMatrix, Panel, VisitationLog
from src.graph_core import DirectedCountGraph, SiteNode, WeightedGraph
from src.schema import (DirectedEdgeListSchema, DuplicationPairsSchema, NodeMetadataSchema,
                        VisitationLogSchema, WeightedEdgeListSchema)

logger = logging.getLogger(__name__)


def dumps(payload: Union[BaseModel, dict, list]) -> str:
    """Canonical JSON text: sorted keys, fixed indent, trailing newline."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


class DataExporter:
    """
    Writes every pipeline artifact under one output directory.
    Tables are validated against their schema before they are saved.
    """
    def __init__(self, output_dir: str):
        self.output_dir = str(output_dir)
        os.makedirs(self.output_dir, exist_ok=True)

    def path(self, name: str) -> str:
        """Relative names land in output_dir; absolute paths are kept."""
        path = os.path.join(self.output_dir, str(name))
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return path

    def write_frame(self, name: str, df: pd.DataFrame, schema: type[pa.DataFrameModel]) -> str:
        validated = schema.validate(df)
        path = self.path(name)
        validated.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
        logger.info(f"   -> Saved {len(validated)} row(s) to {path}")
        return path

    def write_json(self, name: str, payload: Union[BaseModel, dict, list]) -> str:
        path = self.path(name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps(payload))
        logger.info(f"   -> Saved {path}")
        return path

    def write_graph(self, name: str, g: WeightedGraph) -> str:
        return self.write_json(name, {"nodes": list(g.nodes), "weights": g.weights.tolist()})

    def write_weighted_edges(self, name: str, g: WeightedGraph) -> str:
        return self.write_frame(name, g.edge_frame(), WeightedEdgeListSchema)

    def write_directed_edges(self, name: str, g: DirectedCountGraph) -> str:
        return self.write_frame(name, g.edge_frame(), DirectedEdgeListSchema)

    def write_nodes(self, name: str, nodes: Iterable[SiteNode]) -> str:
        df = pd.DataFrame([
            {
                "id": node.id,
                "host_patterns": ";".join(node.host_patterns),
                "languages": ";".join(node.languages),
                "geography": node.geography,
            }
            for node in nodes
        ], columns=["id", "host_patterns", "languages", "geography"])
        return self.write_frame(name, df, NodeMetadataSchema)

    def write_visits(self, name: str, log: VisitationLog) -> str:
        return self.write_frame(name, log.records, VisitationLogSchema)

    def write_panel(self, name: str, panel: Panel) -> str:
        return self.write_json(name, panel)

    def write_pairs(self, name: str, dup: DuplicationMatrix) -> str:
        return self.write_frame(name, dup.to_pairs(), DuplicationPairsSchema)
