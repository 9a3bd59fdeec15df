"""
Slab structures: slices, boundary-edge blockers, the deterministic crossing
trichotomy and the L-gap probability.

A slab has d long axes of side n and ell + 1 thick axes of lengths k_i.
The slice M_x is the set of cells whose thick coordinates equal x, and it
is occupied when it meets the initial set. Slices outside [k] do not exist
and count as unoccupied.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from bootlab.core.errors import domain_error
from bootlab.services.engine import closure
from bootlab.services.lattice import CellSet, LatticeSpec, StructureKind
from bootlab.services.metrics import lemma_checks_total

logger = logging.getLogger("Bootlab.Blockers")

Probability = Union[float, Fraction]


class Sign(str, Enum):
    PLUS = "+"
    MINUS = "-"


class CrossingCase(str, Enum):
    NO_CROSS = "NO_CROSS"
    CASE_A = "CASE_A"
    CASE_B = "CASE_B"
    CASE_C = "CASE_C"
    VIOLATION = "VIOLATION"


@dataclass(frozen=True)
class SlabIndex:
    """Thick coordinates x of a slice M_x (1-based)."""

    x: Tuple[int, ...]

    def validate(self, slab: LatticeSpec) -> "SlabIndex":
        k = slab.thick_lengths
        if len(self.x) != len(k) or any(not 1 <= xi <= ki for xi, ki in zip(self.x, k)):
            raise domain_error(f"Slice index {self.x} outside {k}")
        return self


@dataclass(frozen=True)
class BoundaryEdge:
    """Edge E^{(axis)}_b: slices agreeing with corner b off the edge axis."""

    corner: Tuple[int, ...]
    axis: int

    def validate(self, slab: LatticeSpec) -> "BoundaryEdge":
        k = slab.thick_lengths
        if not 1 <= self.axis <= len(k):
            raise domain_error(f"Edge axis {self.axis} not in [1, {len(k)}]")
        if len(self.corner) != len(k):
            raise domain_error(f"Corner {self.corner} has wrong length for {k}")
        for i, (bi, ki) in enumerate(zip(self.corner, k), start=1):
            if i != self.axis and bi not in (1, ki):
                raise domain_error(f"{self.corner} is not a corner of {k}")
        return self

    def contains(self, x: Sequence[int]) -> bool:
        return all(xi == bi for i, (xi, bi) in enumerate(zip(x, self.corner), start=1) if i != self.axis)

    def position(self, slab: LatticeSpec, t: int) -> Tuple[int, ...]:
        """Slice at coordinate t along the edge."""
        x = list(self.corner)
        x[self.axis - 1] = t
        return tuple(x)


def _require_slab(slab: LatticeSpec) -> None:
    if slab.kind != StructureKind.SLAB:
        raise domain_error("Blockers are defined on SLAB structures only")


def slice_occupancy(slab: LatticeSpec, a: CellSet) -> np.ndarray:
    """Boolean array over [k_1] x ... x [k_{ell+1}]: slice meets a."""
    _require_slab(slab)
    return a.mask.any(axis=tuple(range(slab.d)))


def corners(slab: LatticeSpec) -> List[Tuple[int, ...]]:
    """The corner set C(k)."""
    _require_slab(slab)
    return sorted(set(itertools.product(*[(1, ki) for ki in slab.thick_lengths])))


def edges(slab: LatticeSpec, axis: int) -> List[BoundaryEdge]:
    """Distinct boundary edges in direction axis."""
    seen = set()
    out = []
    for b in corners(slab):
        normal = tuple(1 if i == axis else bi for i, bi in enumerate(b, start=1))
        if normal not in seen:
            seen.add(normal)
            out.append(BoundaryEdge(normal, axis).validate(slab))
    return out


def _unoccupied(occupied: np.ndarray, y: Sequence[int]) -> bool:
    if any(not 1 <= yi <= ki for yi, ki in zip(y, occupied.shape)):
        return True
    return not occupied[tuple(yi - 1 for yi in y)]


def _blocker_at(occupied: np.ndarray, x: Tuple[int, ...], edge: BoundaryEdge, sign: Sign) -> bool:
    if not _unoccupied(occupied, x):
        return False
    k = occupied.shape
    for i in range(1, len(k) + 1):
        step = [0] * len(k)
        if i == edge.axis:
            step[i - 1] = 1 if sign == Sign.PLUS else -1
        elif edge.corner[i - 1] == k[i - 1]:
            step[i - 1] = -1
        else:
            step[i - 1] = 1
        if not _unoccupied(occupied, tuple(xi + s for xi, s in zip(x, step))):
            return False
    return True


def is_blocker(
    slab: LatticeSpec, a: CellSet, x: SlabIndex, edge: BoundaryEdge, sign: Sign
) -> bool:
    """L+ (sign PLUS) or L- (sign MINUS) blocker at slice x of the edge."""
    _require_slab(slab)
    x.validate(slab)
    edge.validate(slab)
    if not edge.contains(x.x):
        raise domain_error(f"Slice {x.x} does not lie on edge {edge}")
    return _blocker_at(slice_occupancy(slab, a), x.x, edge, Sign(sign))


def blocker_positions(occupied: np.ndarray, edge: BoundaryEdge, sign: Sign) -> List[int]:
    length = occupied.shape[edge.axis - 1]
    out = []
    for t in range(1, length + 1):
        x = list(edge.corner)
        x[edge.axis - 1] = t
        if _blocker_at(occupied, tuple(x), edge, sign):
            out.append(t)
    return out


def _blocked(occupied: np.ndarray, edge: BoundaryEdge, full: bool) -> bool:
    plus = blocker_positions(occupied, edge, Sign.PLUS)
    minus = blocker_positions(occupied, edge, Sign.MINUS)
    if not plus or not minus:
        return False
    if not full:
        return min(plus) < max(minus)
    k = occupied.shape[edge.axis - 1]
    return min(plus) < k / 3 - 1 and max(minus) > 2 * k / 3 + 1


def edge_blocked(slab: LatticeSpec, a: CellSet, edge: BoundaryEdge, full: bool = False) -> bool:
    """An L+ blocker at y and an L- blocker at z with z beyond y along the edge.

    With full=True the positions must also satisfy y < k/3 - 1 and z > 2k/3 + 1.
    """
    _require_slab(slab)
    edge.validate(slab)
    return _blocked(slice_occupancy(slab, a), edge, full)


def slab_crosses(slab: LatticeSpec, a: CellSet, axis: int) -> bool:
    """A component of [a] meets both faces of thick axis `axis`."""
    closed = closure(slab, a).closure.mask
    structure = ndimage.generate_binary_structure(closed.ndim, 1)
    labels, _ = ndimage.label(closed, structure=structure)
    dim = slab.d + axis - 1
    low = np.take(labels, 0, axis=dim)
    high = np.take(labels, -1, axis=dim)
    return np.intersect1d(low[low > 0], high[high > 0]).size > 0


def _close_pair(a: CellSet) -> bool:
    coords = np.argwhere(a.mask)
    if len(coords) < 2:
        return False
    return len(cKDTree(coords).query_pairs(r=2, p=1)) > 0


def detercross_check(slab: LatticeSpec, a: CellSet, axis: int) -> CrossingCase:
    """Classify a crossing of the slab in thick direction `axis`.

    Returns the first of: two initial sites within graph distance 2 (A),
    a direction-axis edge that is not blocked (B), an edge in another
    direction that is not fully blocked (C). VIOLATION means a crossing
    exists and none of the three holds.
    """
    _require_slab(slab)
    k = slab.thick_lengths
    if any(ki < 2 for ki in k):
        raise domain_error(f"Slab thick lengths must all be at least 2, got {k}")
    if not 1 <= axis <= len(k):
        raise domain_error(f"Axis {axis} not in [1, {len(k)}]")
    if not slab_crosses(slab, a, axis):
        return CrossingCase.NO_CROSS
    if _close_pair(a):
        return CrossingCase.CASE_A
    occupied = slice_occupancy(slab, a)
    if any(not _blocked(occupied, e, False) for e in edges(slab, axis)):
        return CrossingCase.CASE_B
    for other in range(1, len(k) + 1):
        if other != axis and any(not _blocked(occupied, e, True) for e in edges(slab, other)):
            return CrossingCase.CASE_C
    lemma_checks_total.inc(lemma="detercross", outcome="violation")
    logger.error(f"Crossing trichotomy failed on slab {k}, axis {axis}, |A| = {len(a)}")
    return CrossingCase.VIOLATION


# --- L-gaps ---


def _check_lgap_args(m: int, ell: int, u: Probability) -> None:
    if m < 1:
        raise domain_error(f"m must be positive, got {m}")
    if ell < 0:
        raise domain_error(f"ell must be nonnegative, got {ell}")
    if not 0 <= u <= 1:
        raise domain_error(f"u must lie in [0, 1], got {u}")


def lgap_probability_exact(m: int, ell: int, u: Probability) -> Probability:
    """P(no L-gap) for events U_1..U_{m+1} and V^{(i)}_j, each with probability u.

    Two-state recursion on whether U_i occurred; the arithmetic follows the
    type of u, so a Fraction input gives an exact rational.
    """
    _check_lgap_args(m, ell, u)
    # some V^{(.)}_i occurs
    v = 1 - (1 - u) ** ell
    missed, hit = 1 - u, u
    for _ in range(m):
        missed, hit = (1 - u) * (hit + v * missed), u * (missed + hit)
    return missed + hit


def lgap_probability_enumerated(m: int, ell: int, u: Probability) -> Fraction:
    """Same quantity by summing over all 2^(m+1+ell*m) outcomes, exactly."""
    _check_lgap_args(m, ell, u)
    u = Fraction(u)
    total = Fraction(0)
    n_events = (m + 1) + ell * m
    for outcome in itertools.product((False, True), repeat=n_events):
        big_u = outcome[: m + 1]
        vs = [outcome[m + 1 + i * m : m + 1 + (i + 1) * m] for i in range(ell)]
        gap = any(
            not big_u[j] and not big_u[j + 1] and not any(row[j] for row in vs)
            for j in range(m)
        )
        if gap:
            continue
        hits = sum(outcome)
        total += u**hits * (1 - u) ** (n_events - hits)
    return total
