"""
Coloured Graph Tests
Admissibility, stacked chains and chain files.
"""

import json

import pytest
from pydantic import ValidationError

from bootlab.core.errors import DomainError
from bootlab.services.graphs import (
    ChainFile,
    ColouredGraph,
    GraphChain,
    chain_crossed,
    figure_chain,
    good_neighbours,
    is_admissible,
)

S3 = (1, 2, 3)


def _clique(vertices):
    return [(u, v) for i, u in enumerate(vertices) for v in vertices[i + 1 :]]


def _random_admissible(rng, S):
    """Good edges forming disjoint cliques over a random partition of S x [2]."""
    vertices = [(x, side) for side in (1, 2) for x in S]
    groups = {}
    for v in vertices:
        groups.setdefault(int(rng.integers(0, 3)), []).append(v)
    good = [e for block in groups.values() for e in _clique(block)]
    return ColouredGraph.build(S, good=good)


class TestColouredGraph:
    """Construction and validation."""

    def test_overlap_rejected(self):
        edge = ((1, 1), (2, 1))
        with pytest.raises(DomainError):
            ColouredGraph.build(S3, good=[edge], bad=[edge])

    def test_endpoint_outside(self):
        with pytest.raises(DomainError):
            ColouredGraph.build(S3, good=[((1, 1), (4, 2))])

    def test_loop_rejected(self):
        with pytest.raises(DomainError):
            ColouredGraph.build(S3, good=[((1, 1), (1, 1))])

    def test_with_edge_recolours(self):
        g = ColouredGraph.build(S3, good=[((1, 1), (2, 1))])
        h = g.with_edge((2, 1), (1, 1), good=False)
        assert not h.good_edges
        assert len(h.bad_edges) == 1


class TestAdmissibility:
    """Admissible graphs: a bad edge, or good components that are cliques."""

    def test_bad_edge_suffices(self):
        g = ColouredGraph.build(S3, good=[((1, 1), (2, 1)), ((2, 1), (3, 1))], bad=[((1, 2), (2, 2))])
        assert is_admissible(g)

    def test_good_path_is_not(self):
        g = ColouredGraph.build(S3, good=[((1, 1), (2, 1)), ((2, 1), (3, 1))])
        assert not is_admissible(g)

    def test_disjoint_triangles(self):
        top = [(1, 1), (2, 1), (3, 1)]
        bottom = [(1, 2), (2, 2), (3, 2)]
        assert is_admissible(ColouredGraph.build(S3, good=_clique(top) + _clique(bottom)))

    def test_edgeless(self):
        assert is_admissible(ColouredGraph.build(S3))


class TestChains:
    """Stacked graphs G_P and the crossing event."""

    def test_figure_chain_crossed(self):
        chain = figure_chain()
        assert chain.m == 4
        assert all(is_admissible(g) for g in chain.graphs)
        assert chain_crossed(chain)

    def test_stacked_edge_count(self):
        assert len(figure_chain().stacked_edges()) == 15 + 9

    def test_edgeless_not_crossed(self):
        chain = GraphChain(tuple(ColouredGraph.build(S3) for _ in range(3)))
        assert not chain_crossed(chain)

    def test_full_cliques_crossed(self):
        vertices = [(x, side) for side in (1, 2) for x in S3]
        full = ColouredGraph.build(S3, good=_clique(vertices))
        assert chain_crossed(GraphChain((full, full)))

    def test_non_admissible_rejected(self):
        bad = ColouredGraph.build(S3, good=[((1, 1), (2, 1)), ((2, 1), (3, 1))])
        with pytest.raises(DomainError):
            chain_crossed(GraphChain((bad,)))

    def test_mixed_vertex_sets_rejected(self):
        with pytest.raises(DomainError):
            GraphChain((ColouredGraph.build(S3), ColouredGraph.build((1, 2))))

    def test_monotone_under_bad_edges(self, rng):
        vertices = [(x, side) for side in (1, 2) for x in S3]
        pairs = _clique(vertices)
        for _ in range(100):
            graphs = [_random_admissible(rng, S3) for _ in range(int(rng.integers(1, 5)))]
            before = chain_crossed(GraphChain(tuple(graphs)))
            t = int(rng.integers(len(graphs)))
            free = [e for e in pairs if frozenset(e) not in graphs[t].good_edges]
            if not free:
                continue
            u, v = free[int(rng.integers(len(free)))]
            graphs[t] = graphs[t].with_edge(u, v, good=False)
            after = chain_crossed(GraphChain(tuple(graphs)))
            assert after or not before

    def test_good_neighbours(self):
        chain = figure_chain()
        assert good_neighbours(chain, 1, 1) == [(1, 2), (2, 1), (3, 1)]
        assert good_neighbours(chain, 3, 3) == [(3, 4)]


class TestChainFile:
    """JSON chain descriptions."""

    def test_round_trip(self):
        chain = figure_chain()
        text = ChainFile.from_chain(chain).model_dump_json()
        again = ChainFile.model_validate_json(text).to_chain()
        assert again == chain

    def test_parse_document(self):
        document = {
            "S": [1, 2],
            "layers": [
                {"good": [[[1, 1], [2, 1]], [[1, 2], [2, 2]]]},
                {"bad": [[[1, 1], [1, 2]]]},
            ],
        }
        chain = ChainFile.model_validate_json(json.dumps(document)).to_chain()
        assert chain.m == 2
        assert not chain_crossed(chain)

    def test_empty_layers_rejected(self):
        with pytest.raises(ValidationError):
            ChainFile.model_validate({"S": [1], "layers": []})
