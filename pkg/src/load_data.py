import json
import logging
import os
import re
from typing import Optional

import numpy as np
import pandas as pd
import pandera.pandas as pa
from pandera.errors import SchemaErrors
from pydantic import ValidationError

from src.analysis.layout_engine import LayoutResult
from src.audience_engine import Panel, VisitationLog
from src.community_engine import CommunityPartition
from src.exceptions import DataValidationError
from src.graph_core import SiteNode, WeightedGraph, check_unique_ids
from src.schema import DirectedEdgeListSchema, NodeMetadataSchema, VisitationLogSchema

logger = logging.getLogger(__name__)

_PARSER_LINE = re.compile(r"line (\d+)")


def split_list(value) -> tuple[str, ...]:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return ()
    return tuple(part.strip() for part in str(value).split(";") if part.strip())


def _validate(schema: type[pa.DataFrameModel], df: pd.DataFrame, path) -> pd.DataFrame:
    """Lazy schema validation; failures are reported with 1-based file line numbers."""
    try:
        return schema.validate(df, lazy=True)
    except SchemaErrors as err:
        cases = err.failure_cases
        index = pd.to_numeric(cases.get("index", pd.Series(dtype=object)), errors="coerce").dropna()
        lines = sorted({int(i) + 2 for i in index})
        checks = ", ".join(sorted({str(c) for c in cases.get("check", [])})[:5])
        raise DataValidationError(f"{path}: invalid rows ({checks})", lines) from err


def _read_csv(path, columns: list[str]) -> pd.DataFrame:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Missing input file: {path}")
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        return pd.DataFrame({c: pd.Series(dtype=str) for c in columns})
    except pd.errors.ParserError as err:
        match = _PARSER_LINE.search(str(err))
        raise DataValidationError(f"{path}: malformed CSV row", [int(match.group(1))] if match else []) from err


class DataLoader:
    """
    Reads every input artifact of the pipeline and validates it before handing it on.
    """
    def __init__(self, metadata_path=None, log_path=None, panel_path=None, edges_path=None,
                 allowed_geographies: Optional[set[str]] = None):
        self.metadata_path = metadata_path
        self.log_path = log_path
        self.panel_path = panel_path
        self.edges_path = edges_path
        self.allowed_geographies = allowed_geographies

    def load_all(self) -> tuple[list[SiteNode], VisitationLog, Panel, pd.DataFrame]:
        nodes = self.load_nodes(self.metadata_path, self.allowed_geographies)
        log = self.load_visits(self.log_path)
        panel = self.load_panel(self.panel_path)
        edges = self.load_directed_edges(self.edges_path)
        return nodes, log, panel, edges

    @staticmethod
    def load_nodes(path, allowed_geographies: Optional[set[str]] = None) -> list[SiteNode]:
        """
        Node metadata CSV: id,host_patterns(;-separated),languages(;-separated),geography
        """
        df = _validate(NodeMetadataSchema, _read_csv(path, ["id", "host_patterns", "languages", "geography"]), path)
        nodes = [
            SiteNode(
                id=row.id,
                host_patterns=split_list(row.host_patterns),
                languages=split_list(row.languages),
                geography=row.geography,
            )
            for row in df.itertuples(index=False)
        ]
        check_unique_ids(nodes)
        if allowed_geographies is not None:
            bad = [i + 2 for i, n in enumerate(nodes) if not n.is_global and n.geography not in allowed_geographies]
            if bad:
                raise DataValidationError(f"{path}: geography not in the configured set", bad)
        logger.info(f"   -> Loaded {len(nodes)} site node(s) from {path}")
        return nodes

    @staticmethod
    def load_visits(path) -> VisitationLog:
        df = _validate(VisitationLogSchema, _read_csv(path, ["user_id", "site_id"]), path)
        log = VisitationLog.from_frame(df)
        logger.info(f"   -> Loaded {len(log.records)} unique (user, site) visit(s) by {log.n_users} user(s)")
        return log

    @staticmethod
    def load_panel(path) -> Panel:
        return DataLoader._load_model(Panel, path)

    @staticmethod
    def load_directed_edges(path) -> pd.DataFrame:
        """
        Directed edge list CSV: src,dst,count. Returns an empty frame for an empty file.
        """
        raw = _read_csv(path, ["src", "dst", "count"])
        if raw.empty:
            return pd.DataFrame({"src": pd.Series(dtype=str), "dst": pd.Series(dtype=str),
                                 "count": pd.Series(dtype="int64")})
        return _validate(DirectedEdgeListSchema, raw, path)

    @staticmethod
    def load_json(path) -> dict:
        if not os.path.exists(path):
            raise FileNotFoundError(f"Missing input file: {path}")
        with open(path, encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as err:
                raise DataValidationError(f"{path}: malformed JSON ({err.msg})", [err.lineno]) from err
        if not isinstance(payload, dict):
            raise DataValidationError(f"{path}: expected a JSON object")
        return payload

    @staticmethod
    def _load_model(model, path):
        try:
            return model.model_validate(DataLoader.load_json(path))
        except ValidationError as err:
            raise DataValidationError(f"{path}: invalid {model.__name__}: {err.errors()[0]['msg']}") from err

    @staticmethod
    def load_graph(path) -> WeightedGraph:
        payload = DataLoader.load_json(path)
        try:
            nodes, weights = payload["nodes"], payload["weights"]
        except KeyError as err:
            raise DataValidationError(f"{path}: graph JSON needs 'nodes' and 'weights'") from err
        try:
            w = np.asarray(weights, dtype=float).reshape(len(nodes), len(nodes))
        except (TypeError, ValueError) as err:
            raise DataValidationError(f"{path}: weights do not form a {len(nodes)}x{len(nodes)} matrix") from err
        return WeightedGraph(tuple(nodes), w)

    @staticmethod
    def load_partition(path) -> CommunityPartition:
        return DataLoader._load_model(CommunityPartition, path)

    @staticmethod
    def load_layout(path) -> LayoutResult:
        return DataLoader._load_model(LayoutResult, path)
