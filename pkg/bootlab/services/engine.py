"""
Bootstrap dynamics: closures, percolation, components, span and crossings.

The production engine is a frontier closure. Every cell keeps a counter of
infected neighbours and the queue is drained one synchronous generation at
a time, so generation counts agree with the naive rescan iteration.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from numba import njit
from scipy import ndimage

from bootlab.core.errors import domain_error
from bootlab.services.lattice import (
    CellSet,
    LatticeSpec,
    Rect,
    StructureKind,
    _interior,
    neighbour_table,
    threshold_array,
)
from bootlab.services.metrics import closure_generations, closures_total

logger = logging.getLogger("Bootlab.Engine")


class BoundaryMode(str, Enum):
    NONE = "none"
    HALF_SPACE_LOW = "half-low"
    HALF_SPACE_HIGH = "half-high"
    ALL_OUTSIDE = "all-outside"


@dataclass(frozen=True)
class BoundaryCondition:
    """Infected exterior granting +1 neighbour credit to adjacent face cells."""

    mode: BoundaryMode = BoundaryMode.NONE
    axis: Optional[int] = None

    def __post_init__(self):
        half = self.mode in (BoundaryMode.HALF_SPACE_LOW, BoundaryMode.HALF_SPACE_HIGH)
        if half and (self.axis is None or self.axis < 1):
            raise domain_error(f"{self.mode.value} needs a 1-based axis")
        if not half and self.axis is not None:
            raise domain_error(f"{self.mode.value} takes no axis")

    @classmethod
    def parse(cls, text: str) -> "BoundaryCondition":
        """Parse 'none', 'all-outside', 'half-low:J' or 'half-high:J'."""
        name, _, axis = text.strip().lower().partition(":")
        try:
            mode = BoundaryMode(name)
        except ValueError:
            raise domain_error(f"Unknown boundary condition '{text}'")
        return cls(mode, int(axis) if axis else None)

    def validate(self, spec: LatticeSpec) -> "BoundaryCondition":
        if self.axis is not None and not 1 <= self.axis <= spec.d:
            raise domain_error(f"Boundary axis {self.axis} not in [1, {spec.d}]")
        return self

    def __str__(self) -> str:
        return self.mode.value + (f":{self.axis}" if self.axis is not None else "")


NO_BOUNDARY = BoundaryCondition()


@dataclass(frozen=True)
class ClosureResult:
    closure: CellSet
    generations: int
    history_sizes: Tuple[int, ...]
    # Infection round per cell: -1 never, 0 initially infected
    times: np.ndarray = field(repr=False, compare=False)

    def to_dict(self, include_cells: bool = True) -> dict:
        payload = {
            "generations": self.generations,
            "final_size": len(self.closure),
            "history": list(self.history_sizes),
        }
        if include_cells:
            payload["cells"] = [list(c) for c in self.closure.cells()]
        return payload


@dataclass(frozen=True)
class SpanDecomposition:
    rects: Tuple[Rect, ...]

    def __len__(self) -> int:
        return len(self.rects)

    def __contains__(self, rect: Rect) -> bool:
        return rect in self.rects


# --- Kernel ---


@njit(cache=True)
def _frontier_kernel(neighbours, thresholds, counts, seeds):
    total = seeds.shape[0]
    degree = neighbours.shape[1]
    times = np.full(total, -1, np.int64)
    frontier = np.empty(total, np.int64)
    upcoming = np.empty(total, np.int64)
    history = np.empty(total + 1, np.int64)

    size = 0
    for v in range(total):
        if seeds[v]:
            times[v] = 0
            size += 1
    for v in range(total):
        if seeds[v]:
            for t in range(degree):
                w = neighbours[v, t]
                if w >= 0:
                    counts[w] += 1
    history[0] = size

    width = 0
    for v in range(total):
        if times[v] < 0 and counts[v] >= thresholds[v]:
            frontier[width] = v
            width += 1

    gen = 0
    while width > 0:
        gen += 1
        for i in range(width):
            times[frontier[i]] = gen
        size += width
        history[gen] = size
        next_width = 0
        for i in range(width):
            v = frontier[i]
            for t in range(degree):
                w = neighbours[v, t]
                if w >= 0 and times[w] < 0:
                    counts[w] += 1
                    if counts[w] == thresholds[w]:
                        upcoming[next_width] = w
                        next_width += 1
        frontier, upcoming = upcoming, frontier
        width = next_width
    return times, history[: gen + 1].copy()


def boundary_credit(shape: Tuple[int, ...], d: int, bc: BoundaryCondition) -> np.ndarray:
    """Initial neighbour counters contributed by the infected exterior of a box."""
    credit = np.zeros(shape, dtype=np.int64)
    if bc.mode == BoundaryMode.NONE:
        return credit
    if bc.mode == BoundaryMode.ALL_OUTSIDE:
        axes = [(axis, end) for axis in range(d) for end in (0, -1)]
    else:
        end = 0 if bc.mode == BoundaryMode.HALF_SPACE_LOW else -1
        axes = [(bc.axis - 1, end)]
    for axis, end in axes:
        face = [slice(None)] * len(shape)
        face[axis] = end
        credit[tuple(face)] += 1
    return credit


def close_box(
    seeds: np.ndarray, thresholds: np.ndarray, credit: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Run the frontier kernel on a box. Returns (times, history), box-shaped times."""
    shape = seeds.shape
    counts = (
        np.zeros(seeds.size, dtype=np.int64)
        if credit is None
        else np.ascontiguousarray(credit, dtype=np.int64).ravel().copy()
    )
    times, history = _frontier_kernel(
        neighbour_table(tuple(shape)),
        np.ascontiguousarray(thresholds, dtype=np.int64).ravel(),
        counts,
        np.ascontiguousarray(seeds, dtype=np.bool_).ravel(),
    )
    return times.reshape(shape), history


def _embed(spec: LatticeSpec, box, times_box: np.ndarray, history: np.ndarray) -> ClosureResult:
    times = np.full(spec.shape, -1, dtype=np.int64)
    times[box] = times_box
    times.setflags(write=False)
    generations = len(history) - 1
    closures_total.inc(kind=spec.kind.value)
    closure_generations.observe(generations)
    return ClosureResult(
        closure=CellSet(times >= 0),
        generations=generations,
        history_sizes=tuple(int(h) for h in history),
        times=times,
    )


def closure(
    spec: LatticeSpec, a: CellSet, bc: BoundaryCondition = NO_BOUNDARY
) -> ClosureResult:
    """Bootstrap closure [a] on the whole lattice."""
    bc.validate(spec)
    times, history = close_box(
        a.mask, threshold_array(spec), boundary_credit(spec.shape, spec.d, bc)
    )
    box = (slice(None),) * spec.ndim
    return _embed(spec, box, times, history)


def confined_closure(
    spec: LatticeSpec,
    rect: Rect,
    a: CellSet,
    bc: BoundaryCondition = NO_BOUNDARY,
    forced: Optional[CellSet] = None,
) -> ClosureResult:
    """Closure of (a ∩ rect) ∪ forced with the process confined to rect."""
    bc.validate(spec)
    box = rect.box(spec)
    seeds = a.mask[box]
    if forced is not None:
        seeds = seeds | forced.mask[box]
    times, history = close_box(
        seeds,
        threshold_array(spec)[box],
        boundary_credit(rect.box_shape(spec), spec.d, bc),
    )
    return _embed(spec, box, times, history)


def naive_closure(
    spec: LatticeSpec,
    a: CellSet,
    bc: BoundaryCondition = NO_BOUNDARY,
    rect: Optional[Rect] = None,
) -> ClosureResult:
    """Full-rescan synchronous iteration. Reference oracle for the kernel."""
    bc.validate(spec)
    box = rect.box(spec) if rect is not None else (slice(None),) * spec.ndim
    state = np.array(a.mask[box], dtype=bool)
    thresholds = threshold_array(spec)[box]
    credit = boundary_credit(state.shape, spec.d, bc)
    times = np.where(state, 0, -1).astype(np.int64)
    history = [int(state.sum())]
    while True:
        counts = credit.copy()
        for axis in range(state.ndim):
            lo = [slice(None)] * state.ndim
            hi = [slice(None)] * state.ndim
            lo[axis], hi[axis] = slice(None, -1), slice(1, None)
            counts[tuple(hi)] += state[tuple(lo)]
            counts[tuple(lo)] += state[tuple(hi)]
        fresh = ~state & (counts >= thresholds)
        if not fresh.any():
            break
        state |= fresh
        times[fresh] = len(history)
        history.append(int(state.sum()))
    return _embed(spec, box, times, np.asarray(history))


def async_closure(
    spec: LatticeSpec,
    a: CellSet,
    rng: np.random.Generator,
    bc: BoundaryCondition = NO_BOUNDARY,
) -> CellSet:
    """One-cell-at-a-time closure visiting candidates in random order."""
    bc.validate(spec)
    table = neighbour_table(spec.shape)
    thresholds = threshold_array(spec).ravel()
    infected = a.mask.ravel().copy()
    counts = boundary_credit(spec.shape, spec.d, bc).ravel().copy()
    for v in np.flatnonzero(infected):
        for w in table[v]:
            if w >= 0:
                counts[w] += 1
    changed = True
    while changed:
        changed = False
        for v in rng.permutation(np.flatnonzero(~infected)):
            if not infected[v] and counts[v] >= thresholds[v]:
                infected[v] = True
                changed = True
                for w in table[v]:
                    if w >= 0:
                        counts[w] += 1
    return CellSet(infected.reshape(spec.shape))


def percolates(spec: LatticeSpec, a: CellSet) -> bool:
    """True iff [a] is the whole vertex set."""
    return len(closure(spec, a).closure) == spec.cell_count


# --- Components ---


def label_components(mask: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """Nearest-neighbour labels plus label ids ordered by smallest linear member."""
    structure = ndimage.generate_binary_structure(mask.ndim, 1)
    labels, count = ndimage.label(mask, structure=structure)
    if count == 0:
        return labels, []
    flat = labels.ravel()
    ids, first = np.unique(flat, return_index=True)
    order = [int(i) for _, i in sorted(zip(first, ids)) if i != 0]
    return labels, order


def components(spec: LatticeSpec, s: CellSet) -> List[CellSet]:
    """Maximal connected subsets of s, ordered by smallest linearized member."""
    labels, order = label_components(s.mask)
    return [CellSet(labels == lab) for lab in order]


def _extents(mask: np.ndarray, axes: Optional[int] = None) -> List[int]:
    structure = ndimage.generate_binary_structure(mask.ndim, 1)
    labels, _ = ndimage.label(mask, structure=structure)
    out = []
    for sl in ndimage.find_objects(labels):
        if sl is None:
            continue
        chosen = sl if axes is None else sl[:axes]
        out.append(max(s.stop - s.start for s in chosen))
    return out


def diam(spec: LatticeSpec, s: CellSet) -> int:
    """Largest L-infinity extent (+1) of a component of s; 0 when s is empty."""
    return max(_extents(s.mask), default=0)


def long_diam(spec: LatticeSpec, s: CellSet) -> int:
    """As diam, measured on the long axes only."""
    return max(_extents(s.mask, spec.d), default=0)


def span(spec: LatticeSpec, a: CellSet) -> SpanDecomposition:
    """Bounding rectangles of the components of [a]."""
    labels, order = label_components(closure(spec, a).closure.mask)
    slices = ndimage.find_objects(labels)
    rects = []
    for lab in order:
        sl = slices[lab - 1][: spec.d]
        rects.append(Rect(tuple(s.start + 1 for s in sl), tuple(s.stop for s in sl)))
    return SpanDecomposition(tuple(rects))


def internally_spanned(spec: LatticeSpec, rect: Rect, a: CellSet) -> bool:
    """True iff rect belongs to the span of a ∩ rect, the process confined to rect."""
    rect.within(spec)
    box = rect.box(spec)
    inner = confined_closure(spec, rect, a).closure.mask[box]
    structure = ndimage.generate_binary_structure(inner.ndim, 1)
    labels, _ = ndimage.label(inner, structure=structure)
    for sl in ndimage.find_objects(labels):
        if sl is None:
            continue
        if all(s.start == 0 and s.stop == size for s, size in zip(sl[: spec.d], rect.dim)):
            return True
    return False


def crossed(
    spec: LatticeSpec,
    rect: Rect,
    a: CellSet,
    axis: int,
    forced: Optional[CellSet] = None,
) -> bool:
    """Crossing event of rect in direction axis with the half-space behind the low face.

    A single component of the confined closure must touch both faces.
    """
    rect.within(spec)
    if not 1 <= axis <= spec.d:
        raise domain_error(f"Axis {axis} not in [1, {spec.d}]")
    if forced is not None and not forced <= forced.restrict(spec, rect):
        raise domain_error("Forced cells must lie inside the rectangle")
    bc = BoundaryCondition(BoundaryMode.HALF_SPACE_LOW, axis)
    box = rect.box(spec)
    inner = confined_closure(spec, rect, a, bc, forced).closure.mask[box]
    structure = ndimage.generate_binary_structure(inner.ndim, 1)
    labels, _ = ndimage.label(inner, structure=structure)
    low = np.take(labels, 0, axis=axis - 1)
    high = np.take(labels, -1, axis=axis - 1)
    touching = np.intersect1d(low[low > 0], high[high > 0])
    return touching.size > 0


def coupled_block_closure(
    spec: LatticeSpec, rect: Rect, a: CellSet, block_len: int, axis: int
) -> CellSet:
    """Union {A} of independent closures of width-block_len blocks along axis.

    Inside a block every threshold drops by one except on cells interior to
    the block along axis, which is the slab rule with the block axis thick.
    The result contains the confined closure of a ∩ rect with the half-space
    behind the low face along the same axis.
    """
    rect.within(spec)
    if spec.kind == StructureKind.SLAB or spec.r < 2:
        raise domain_error("Block coupling needs a UNIFORM or THICK structure with r >= 2")
    if not 1 <= axis <= spec.d:
        raise domain_error(f"Axis {axis} not in [1, {spec.d}]")
    length = rect.dim[axis - 1]
    if block_len < 2:
        raise domain_error(f"block_len must be at least 2, got {block_len}")
    if length % block_len:
        raise domain_error(
            f"block_len {block_len} does not divide rectangle length {length} along axis {axis}"
        )

    view = [1] * spec.ndim
    view[axis - 1] = block_len
    relief = _interior(block_len).reshape(view) - 1

    result = np.zeros(spec.shape, dtype=bool)
    start = rect.lo[axis - 1]
    for offset in range(0, length, block_len):
        lo = list(rect.lo)
        hi = list(rect.hi)
        lo[axis - 1] = start + offset
        hi[axis - 1] = start + offset + block_len - 1
        box = Rect(tuple(lo), tuple(hi)).box(spec)
        times, _ = close_box(a.mask[box], threshold_array(spec)[box] + relief)
        result[box] = times >= 0
    logger.debug(
        f"Coupled closure over {length // block_len} blocks of width {block_len}: {int(result.sum())} cells"
    )
    return CellSet(result)
