"""
Two-coloured graphs on S x [2] and chains of them.

A chain P = (G_1, ..., G_m) is stacked into G_P on S x [2m]: layer t
occupies rows 2t-1 and 2t, row 2t is joined to row 2t+1 by the identity
matching, and nothing else connects rows two or more apart.
"""

import logging
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from bootlab.core.errors import domain_error

logger = logging.getLogger("Bootlab.Graphs")

Vertex = Tuple[int, int]
Edge = FrozenSet[Vertex]


def _edge(u: Sequence[int], v: Sequence[int]) -> Edge:
    a, b = (int(u[0]), int(u[1])), (int(v[0]), int(v[1]))
    if a == b:
        raise domain_error(f"Loop at {a} is not a simple-graph edge")
    return frozenset((a, b))


@dataclass(frozen=True)
class ColouredGraph:
    """Simple graph on S x [2] with good and bad edges."""

    S: Tuple[int, ...]
    good_edges: FrozenSet[Edge] = field(default_factory=frozenset)
    bad_edges: FrozenSet[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "S", tuple(self.S))
        if len(set(self.S)) != len(self.S):
            raise domain_error(f"Vertex labels {self.S} are not distinct")
        object.__setattr__(self, "good_edges", frozenset(self.good_edges))
        object.__setattr__(self, "bad_edges", frozenset(self.bad_edges))
        if self.good_edges & self.bad_edges:
            raise domain_error("An edge cannot be both good and bad")
        for e in self.good_edges | self.bad_edges:
            for x, side in e:
                if x not in self.S or side not in (1, 2):
                    raise domain_error(f"Edge endpoint {(x, side)} not in S x [2]")

    @classmethod
    def build(
        cls,
        S: Iterable[int],
        good: Iterable[Tuple[Vertex, Vertex]] = (),
        bad: Iterable[Tuple[Vertex, Vertex]] = (),
    ) -> "ColouredGraph":
        return cls(tuple(S), frozenset(_edge(u, v) for u, v in good), frozenset(_edge(u, v) for u, v in bad))

    @property
    def vertices(self) -> List[Vertex]:
        return [(x, side) for side in (1, 2) for x in self.S]

    def index(self, v: Vertex) -> int:
        x, side = v
        return (side - 1) * len(self.S) + self.S.index(x)

    def with_edge(self, u: Vertex, v: Vertex, good: bool = True) -> "ColouredGraph":
        e = _edge(u, v)
        if good:
            return ColouredGraph(self.S, self.good_edges | {e}, self.bad_edges - {e})
        return ColouredGraph(self.S, self.good_edges - {e}, self.bad_edges | {e})


def _components(n: int, pairs: List[Tuple[int, int]]) -> np.ndarray:
    rows = np.asarray([i for i, _ in pairs], dtype=np.int64)
    cols = np.asarray([j for _, j in pairs], dtype=np.int64)
    adjacency = coo_matrix((np.ones(len(pairs), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, labels = connected_components(adjacency, directed=False)
    return labels


def is_admissible(g: ColouredGraph) -> bool:
    """A bad edge is present, or every good-edge component is a clique."""
    if g.bad_edges:
        return True
    n = 2 * len(g.S)
    pairs = [tuple(g.index(v) for v in e) for e in g.good_edges]
    labels = _components(n, pairs)
    sizes = np.bincount(labels, minlength=n)
    edge_counts = np.zeros(n, dtype=np.int64)
    for i, _ in pairs:
        edge_counts[labels[i]] += 1
    return bool(np.all(edge_counts == sizes * (sizes - 1) // 2))


@dataclass(frozen=True)
class GraphChain:
    graphs: Tuple[ColouredGraph, ...]

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if not self.graphs:
            raise domain_error("A chain needs at least one graph")
        S = self.graphs[0].S
        for t, g in enumerate(self.graphs, start=1):
            if g.S != S:
                raise domain_error(f"G_{t} is on {g.S}, expected {S}")

    @property
    def S(self) -> Tuple[int, ...]:
        return self.graphs[0].S

    @property
    def m(self) -> int:
        return len(self.graphs)

    def node(self, x: int, row: int) -> int:
        """Index of (x, row) in G_P, rows numbered 1..2m."""
        return (row - 1) * len(self.S) + self.S.index(x)

    def stacked_edges(self) -> List[Tuple[int, int]]:
        pairs = []
        for t, g in enumerate(self.graphs, start=1):
            for e in g.good_edges | g.bad_edges:
                (x, s), (y, u) = tuple(e)
                pairs.append((self.node(x, 2 * t - 2 + s), self.node(y, 2 * t - 2 + u)))
        for t in range(1, self.m):
            for x in self.S:
                pairs.append((self.node(x, 2 * t), self.node(x, 2 * t + 1)))
        return pairs


def chain_crossed(p: GraphChain) -> bool:
    """Some path in G_P joins S x {1} to S x {2m}."""
    for t, g in enumerate(p.graphs, start=1):
        if not is_admissible(g):
            raise domain_error(f"G_{t} is not admissible")
    width = len(p.S)
    labels = _components(width * 2 * p.m, p.stacked_edges())
    first = set(labels[:width].tolist())
    last = set(labels[-width:].tolist())
    crossed = bool(first & last)
    logger.debug(f"Chain of {p.m} graphs on |S| = {width}: crossed={crossed}")
    return crossed


def good_neighbours(p: GraphChain, x: int, row: int) -> List[Vertex]:
    """Vertices u != v of G_P with a good edge to v = (x, row)."""
    t = (row + 1) // 2
    side = row - 2 * t + 2
    g = p.graphs[t - 1]
    out = []
    for e in g.good_edges:
        if (x, side) in e:
            (y, s), = e - {(x, side)}
            out.append((y, 2 * t - 2 + s))
    return sorted(out)


def figure_chain() -> GraphChain:
    """Three-vertex chain of four layers whose stacked graph is crossed."""
    S = (1, 2, 3)
    top = [(1, 1), (2, 1), (3, 1), (1, 2)]
    g1 = ColouredGraph.build(
        S, good=[(u, v) for i, u in enumerate(top) for v in top[i + 1 :]] + [((2, 2), (3, 2))]
    )
    g2 = ColouredGraph.build(S, good=[((3, 1), (3, 2)), ((1, 1), (2, 2)), ((2, 1), (1, 2))])
    g3 = ColouredGraph.build(S, good=[((1, 1), (2, 1)), ((3, 1), (3, 2))])
    g4 = ColouredGraph.build(
        S, good=[((3, 1), (3, 2)), ((1, 1), (2, 2))], bad=[((1, 2), (2, 2))]
    )
    return GraphChain((g1, g2, g3, g4))


# --- Chain files ---


class LayerModel(BaseModel):
    good: List[Tuple[Tuple[int, int], Tuple[int, int]]] = Field(default_factory=list)
    bad: List[Tuple[Tuple[int, int], Tuple[int, int]]] = Field(default_factory=list)


class ChainFile(BaseModel):
    """JSON chain description: {"S": [...], "layers": [{"good": [...], "bad": [...]}]}."""

    S: List[int]
    layers: List[LayerModel]

    @field_validator("layers")
    @classmethod
    def nonempty(cls, v: List[LayerModel]) -> List[LayerModel]:
        if not v:
            raise ValueError("layers must not be empty")
        return v

    def to_chain(self) -> GraphChain:
        return GraphChain(
            tuple(ColouredGraph.build(self.S, layer.good, layer.bad) for layer in self.layers)
        )

    @classmethod
    def from_chain(cls, p: GraphChain) -> "ChainFile":
        def pairs(edges):
            return sorted(tuple(sorted(e)) for e in edges)

        return cls(
            S=list(p.S),
            layers=[LayerModel(good=pairs(g.good_edges), bad=pairs(g.bad_edges)) for g in p.graphs],
        )
