"""
Shared data model of both website networks.

WeightedGraph is the common currency: an undirected, nonnegative, dense tie matrix
over an ordered list of SiteNode ids. DirectedCountGraph holds raw hyperlink counts
before symmetrization.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Literal, Sequence

import networkx as nx
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.exceptions import GraphError, UnknownNodeError

GLOBAL = "GLOBAL"
DEFAULT_MAX_NODES = 5000

SymmetrizeRule = Literal["sum", "max", "or"]


def normalize_host(host: str) -> str:
    host = (host or "").strip().lower().rstrip(".")
    if host.startswith("www."):
        host = host[4:]
    return host


class SiteNode(BaseModel):
    """A website node: one domain or a configured subdomain (e.g. es.wikipedia.org)."""
    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    host_patterns: tuple[str, ...] = ()
    languages: tuple[str, ...] = ()
    geography: str = Field(pattern=r"^([A-Z]{2}|GLOBAL)$")

    @field_validator("id")
    @classmethod
    def _strip_id(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("node id must be nonempty")
        return v

    @field_validator("host_patterns")
    @classmethod
    def _normalize_patterns(cls, v) -> tuple[str, ...]:
        out = []
        for p in v:
            p = normalize_host(p)
            if p and p not in out:
                out.append(p)
        return tuple(out)

    @field_validator("languages")
    @classmethod
    def _sort_languages(cls, v) -> tuple[str, ...]:
        return tuple(sorted({lang.strip().lower() for lang in v if lang.strip()}))

    @property
    def is_global(self) -> bool:
        return self.geography == GLOBAL


def check_unique_ids(nodes: Iterable[SiteNode]) -> dict[str, SiteNode]:
    by_id: dict[str, SiteNode] = {}
    dupes = set()
    for node in nodes:
        if node.id in by_id:
            dupes.add(node.id)
        by_id[node.id] = node
    if dupes:
        raise GraphError(f"duplicate node ids: {', '.join(sorted(dupes))}")
    return by_id


def ensure_within_cap(n: int, max_nodes: int = DEFAULT_MAX_NODES) -> None:
    if n > max_nodes:
        raise GraphError(f"{n} nodes exceeds the dense-matrix cap of {max_nodes}")


def _check_node_list(nodes: Sequence[str]) -> tuple[str, ...]:
    nodes = tuple(str(n) for n in nodes)
    if len(set(nodes)) != len(nodes):
        raise GraphError("node ids must be unique")
    if any(not n for n in nodes):
        raise GraphError("node ids must be nonempty")
    return nodes


class _NodeIndexMixin:
    nodes: tuple[str, ...]

    @cached_property
    def index(self) -> dict[str, int]:
        return {node: i for i, node in enumerate(self.nodes)}

    @property
    def n(self) -> int:
        return len(self.nodes)

    def index_of(self, node_id: str) -> int:
        try:
            return self.index[node_id]
        except KeyError:
            raise UnknownNodeError([node_id], "graph") from None

    def _indices(self, ids: Sequence[str]) -> np.ndarray:
        missing = [i for i in ids if i not in self.index]
        if missing:
            raise UnknownNodeError(missing, "graph")
        return np.array([self.index[i] for i in ids], dtype=int)


@dataclass(frozen=True, eq=False)
class WeightedGraph(_NodeIndexMixin):
    nodes: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        nodes = _check_node_list(self.nodes)
        w = np.array(self.weights, dtype=float, copy=True)
        if w.size == 0 and not nodes:
            w = np.zeros((0, 0))
        if w.shape != (len(nodes), len(nodes)):
            raise GraphError(f"weights shape {w.shape} does not match {len(nodes)} nodes")
        if not np.all(np.isfinite(w)):
            raise GraphError("weights must be finite")
        if np.any(w < 0):
            raise GraphError("weights must be nonnegative")
        if not np.array_equal(w, w.T):
            raise GraphError("weights must be symmetric")
        if np.any(np.diag(w) != 0):
            raise GraphError("self-loops are not allowed (nonzero diagonal)")
        w.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self.nodes == other.nodes and np.array_equal(self.weights, other.weights)

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.weights == 0) | (self.weights == 1)))

    @property
    def n_ties(self) -> int:
        return int(np.count_nonzero(np.triu(self.weights, k=1)))

    @property
    def total_weight(self) -> float:
        """m: the sum of tie weights, each undirected tie counted once."""
        return float(np.triu(self.weights, k=1).sum())

    def weight(self, a: str, b: str) -> float:
        return float(self.weights[self.index_of(a), self.index_of(b)])

    def degrees(self) -> np.ndarray:
        return np.count_nonzero(self.weights, axis=1)

    def upper_triangle(self) -> np.ndarray:
        iu = np.triu_indices(self.n, k=1)
        return self.weights[iu]

    def dichotomized(self) -> "WeightedGraph":
        return dichotomize(self)

    def subgraph(self, ids: Sequence[str]) -> "WeightedGraph":
        idx = self._indices(ids)
        return WeightedGraph(tuple(ids), self.weights[np.ix_(idx, idx)])

    def reordered(self, order: Sequence[int]) -> "WeightedGraph":
        """Relabel by a permutation of positions: node k of the result is node order[k]."""
        order = np.asarray(order, dtype=int)
        return WeightedGraph(tuple(self.nodes[i] for i in order), self.weights[np.ix_(order, order)])

    def edge_frame(self) -> pd.DataFrame:
        """Ties as src,dst,weight rows, each undirected tie once with src < dst by id."""
        rows, cols = np.nonzero(np.triu(self.weights, k=1))
        records = []
        for i, j in zip(rows, cols):
            a, b = self.nodes[i], self.nodes[j]
            if b < a:
                a, b = b, a
            records.append((a, b, float(self.weights[i, j])))
        df = pd.DataFrame(records, columns=["src", "dst", "weight"])
        return df.sort_values(["src", "dst"], kind="mergesort").reset_index(drop=True)

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(self.nodes)
        rows, cols = np.nonzero(np.triu(self.weights, k=1))
        G.add_weighted_edges_from(
            (self.nodes[i], self.nodes[j], float(self.weights[i, j])) for i, j in zip(rows, cols)
        )
        return G

    @classmethod
    def empty(cls, nodes: Sequence[str]) -> "WeightedGraph":
        return cls(tuple(nodes), np.zeros((len(nodes), len(nodes))))


@dataclass(frozen=True, eq=False)
class DirectedCountGraph(_NodeIndexMixin):
    nodes: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        nodes = _check_node_list(self.nodes)
        c = np.array(self.counts, copy=True)
        if c.size == 0:
            c = np.zeros((len(nodes), len(nodes)), dtype=np.int64)
        if c.shape != (len(nodes), len(nodes)):
            raise GraphError(f"counts shape {c.shape} does not match {len(nodes)} nodes")
        if not np.all(np.equal(np.mod(c, 1), 0)):
            raise GraphError("hyperlink counts must be integers")
        c = c.astype(np.int64)
        if np.any(c < 0):
            raise GraphError("hyperlink counts must be nonnegative")
        if np.any(np.diag(c) != 0):
            raise GraphError("self-links are not allowed (nonzero diagonal)")
        c.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "counts", c)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DirectedCountGraph):
            return NotImplemented
        return self.nodes == other.nodes and np.array_equal(self.counts, other.counts)

    @property
    def n_edges(self) -> int:
        """Number of directed (src, dst) pairs with at least one link."""
        return int(np.count_nonzero(self.counts))

    def count(self, src: str, dst: str) -> int:
        return int(self.counts[self.index_of(src), self.index_of(dst)])

    def in_degrees(self) -> np.ndarray:
        return np.count_nonzero(self.counts, axis=0)

    def subgraph(self, ids: Sequence[str]) -> "DirectedCountGraph":
        idx = self._indices(ids)
        return DirectedCountGraph(tuple(ids), self.counts[np.ix_(idx, idx)])

    def edge_frame(self) -> pd.DataFrame:
        rows, cols = np.nonzero(self.counts)
        df = pd.DataFrame({
            "src": [self.nodes[i] for i in rows],
            "dst": [self.nodes[j] for j in cols],
            "count": self.counts[rows, cols].astype(np.int64),
        })
        return df.sort_values(["src", "dst"], kind="mergesort").reset_index(drop=True)

    @classmethod
    def empty(cls, nodes: Sequence[str]) -> "DirectedCountGraph":
        return cls(tuple(nodes), np.zeros((len(nodes), len(nodes)), dtype=np.int64))


def symmetrize(g: DirectedCountGraph, rule: SymmetrizeRule = "sum") -> WeightedGraph:
    """
    Undirected tie matrix from directed counts.
    sum: c + c^T (default, keeps tie values); max: elementwise max; or: 1 if any link either way.
    """
    c = g.counts.astype(float)
    if rule == "sum":
        w = c + c.T
    elif rule == "max":
        w = np.maximum(c, c.T)
    elif rule == "or":
        w = ((c + c.T) > 0).astype(float)
    else:
        raise GraphError(f"unknown symmetrize rule '{rule}'")
    return WeightedGraph(g.nodes, w)


def dichotomize(g: WeightedGraph) -> WeightedGraph:
    return WeightedGraph(g.nodes, (g.weights > 0).astype(float))


def align_common(a: WeightedGraph, b: WeightedGraph) -> tuple[WeightedGraph, WeightedGraph]:
    """Restrict both graphs to their shared node ids, in a's order."""
    if a.n == 0 or b.n == 0:
        raise GraphError("cannot align an empty graph")
    in_b = set(b.nodes)
    common = [node for node in a.nodes if node in in_b]
    if not common:
        raise GraphError("graphs share no node ids")
    return a.subgraph(common), b.subgraph(common)
