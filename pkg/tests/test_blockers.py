"""
Slab Tests
Blockers, blocked edges, the crossing trichotomy and L-gap probabilities.
"""

from fractions import Fraction

import numpy as np
import pytest

from bootlab.core.errors import DomainError
from bootlab.services.blockers import (
    BoundaryEdge,
    CrossingCase,
    SlabIndex,
    Sign,
    corners,
    detercross_check,
    edge_blocked,
    edges,
    is_blocker,
    lgap_probability_enumerated,
    lgap_probability_exact,
    slice_occupancy,
)
from bootlab.services.lattice import CellSet, LatticeSpec
from bootlab.services.metrics import lemma_checks_total
from bootlab.services.special import beta
from tests.conftest import random_set


def _direct_blocked(slab, a, edge, full):
    """Quantify over every (y, z) pair on the edge."""
    length = slab.thick_lengths[edge.axis - 1]
    for y in range(1, length + 1):
        if not is_blocker(slab, a, SlabIndex(edge.position(slab, y)), edge, Sign.PLUS):
            continue
        for z in range(y + 1, length + 1):
            if not is_blocker(slab, a, SlabIndex(edge.position(slab, z)), edge, Sign.MINUS):
                continue
            if not full or (y < length / 3 - 1 and z > 2 * length / 3 + 1):
                return True
    return False


def _sweep(instances: int, rng) -> int:
    slabs = [
        LatticeSpec.slab(d=1, n=2, k=(3, 3)),
        LatticeSpec.slab(d=1, n=3, k=(4, 5)),
        LatticeSpec.slab(d=2, n=2, k=(3, 4)),
        LatticeSpec.slab(d=1, n=2, k=(8, 3)),
    ]
    violations = 0
    for _ in range(instances):
        slab = slabs[rng.integers(len(slabs))]
        a = random_set(slab, rng.uniform(0.02, 0.3), rng)
        axis = int(rng.integers(1, 3))
        if detercross_check(slab, a, axis) == CrossingCase.VIOLATION:
            violations += 1
    return violations


class TestSlices:
    """Slices, corners and edges."""

    def test_occupancy(self, slab_spec):
        a = CellSet.from_cells(slab_spec, [(2, 1, 3)])
        occupied = slice_occupancy(slab_spec, a)
        assert occupied.shape == (4, 4)
        assert occupied[0, 2]
        assert occupied.sum() == 1

    def test_corners(self, slab_spec):
        assert corners(slab_spec) == [(1, 1), (1, 4), (4, 1), (4, 4)]

    def test_edges_per_axis(self, slab_spec):
        assert edges(slab_spec, 1) == [BoundaryEdge((1, 1), 1), BoundaryEdge((1, 4), 1)]

    def test_uniform_rejected(self, square4):
        with pytest.raises(DomainError):
            corners(square4)

    def test_index_validation(self, slab_spec):
        with pytest.raises(DomainError):
            SlabIndex((5, 1)).validate(slab_spec)


class TestBlockers:
    """L+ and L- blockers along boundary edges."""

    def test_empty_set_blocks_everywhere(self, slab_spec):
        a = CellSet.empty(slab_spec)
        for edge in edges(slab_spec, 1) + edges(slab_spec, 2):
            for t in range(1, 5):
                x = SlabIndex(edge.position(slab_spec, t))
                assert is_blocker(slab_spec, a, x, edge, Sign.PLUS)
                assert is_blocker(slab_spec, a, x, edge, Sign.MINUS)

    def test_full_set_blocks_nowhere(self, slab_spec):
        a = CellSet.full(slab_spec)
        edge = BoundaryEdge((1, 4), 1)
        assert not is_blocker(slab_spec, a, SlabIndex((2, 4)), edge, Sign.PLUS)
        assert not is_blocker(slab_spec, a, SlabIndex((2, 4)), edge, Sign.MINUS)

    def test_occupied_slice_is_not_blocker(self, slab_spec):
        a = CellSet.from_cells(slab_spec, [(1, 2, 4)])
        edge = BoundaryEdge((1, 4), 1)
        assert not is_blocker(slab_spec, a, SlabIndex((2, 4)), edge, Sign.PLUS)

    def test_neighbour_slice_breaks_sign(self, slab_spec):
        """An occupied slice ahead stops L+ but not L-."""
        a = CellSet.from_cells(slab_spec, [(1, 3, 1)])
        edge = BoundaryEdge((1, 1), 1)
        assert not is_blocker(slab_spec, a, SlabIndex((2, 1)), edge, Sign.PLUS)
        assert is_blocker(slab_spec, a, SlabIndex((2, 1)), edge, Sign.MINUS)

    def test_slice_off_edge(self, slab_spec):
        with pytest.raises(DomainError):
            is_blocker(slab_spec, CellSet.empty(slab_spec), SlabIndex((2, 3)), BoundaryEdge((1, 4), 1), "+")

    def test_edge_needs_corner(self, slab_spec):
        with pytest.raises(DomainError):
            BoundaryEdge((1, 2), 1).validate(slab_spec)


class TestBlockedEdges:
    """Blocked and fully blocked edges."""

    def test_empty_set_blocked(self, slab_spec):
        assert edge_blocked(slab_spec, CellSet.empty(slab_spec), BoundaryEdge((1, 1), 1))

    def test_fully_blocked_needs_room(self, slab_spec):
        a = CellSet.empty(slab_spec)
        assert not edge_blocked(slab_spec, a, BoundaryEdge((1, 1), 1), full=True)
        wide = LatticeSpec.slab(d=1, n=2, k=(8, 8))
        assert edge_blocked(wide, CellSet.empty(wide), BoundaryEdge((1, 1), 1), full=True)

    def test_full_set_not_blocked(self, slab_spec):
        assert not edge_blocked(slab_spec, CellSet.full(slab_spec), BoundaryEdge((1, 4), 2))

    def test_matches_pair_scan(self, rng):
        slab = LatticeSpec.slab(d=1, n=2, k=(9, 7))
        for _ in range(40):
            a = random_set(slab, rng.uniform(0.02, 0.2), rng)
            for axis in (1, 2):
                for edge in edges(slab, axis):
                    for full in (False, True):
                        assert edge_blocked(slab, a, edge, full) == _direct_blocked(slab, a, edge, full)


class TestDetercross:
    """Crossing trichotomy on slabs."""

    def test_empty_set_no_cross(self, slab_spec):
        assert detercross_check(slab_spec, CellSet.empty(slab_spec), 1) == CrossingCase.NO_CROSS

    def test_adjacent_line_is_case_a(self, slab_spec):
        a = CellSet.from_cells(slab_spec, [(1, t, 1) for t in range(1, 5)])
        assert detercross_check(slab_spec, a, 1) == CrossingCase.CASE_A

    def test_short_thick_axis_rejected(self):
        slab = LatticeSpec.slab(d=1, n=3, k=(1, 4))
        with pytest.raises(DomainError):
            detercross_check(slab, CellSet.empty(slab), 2)

    def test_axis_range(self, slab_spec):
        with pytest.raises(DomainError):
            detercross_check(slab_spec, CellSet.empty(slab_spec), 3)

    def test_random_never_violates(self, rng):
        assert _sweep(300, rng) == 0
        assert lemma_checks_total.value(lemma="detercross", outcome="violation") == 0

    @pytest.mark.slow
    def test_random_never_violates_full(self, rng):
        assert _sweep(100_000, rng) == 0


class TestLGap:
    """Probability of no L-gap."""

    def test_single_step(self):
        assert lgap_probability_exact(1, 0, 0.5) == pytest.approx(0.75)
        assert lgap_probability_exact(1, 0, Fraction(1, 3)) == 1 - Fraction(2, 3) ** 2

    def test_endpoints(self):
        for ell in range(4):
            assert lgap_probability_exact(5, ell, 1.0) == 1.0
            assert lgap_probability_exact(5, ell, 0.0) == 0.0

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            lgap_probability_exact(0, 1, 0.5)
        with pytest.raises(DomainError):
            lgap_probability_exact(3, -1, 0.5)
        with pytest.raises(DomainError):
            lgap_probability_exact(3, 1, 1.5)

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    @pytest.mark.parametrize("ell", [0, 1, 2])
    def test_matches_enumeration(self, m, ell):
        u = Fraction(3, 10)
        assert lgap_probability_exact(m, ell, u) == lgap_probability_enumerated(m, ell, u)

    def test_within_beta_bounds(self):
        for m in range(1, 21):
            for ell in range(4):
                for u in np.arange(0.05, 0.96, 0.05):
                    value = lgap_probability_exact(m, ell, float(u))
                    b = beta(ell + 1, float(u))
                    assert b ** (m + 1) * (1 - 1e-12) <= value <= b**m * (1 + 1e-12)
