"""
Deterministic structure of closures: spanned windows of controlled size,
small internally filled components, double gaps and Gamma-sets.
"""

import itertools
import logging
from typing import Iterator

import numpy as np
from scipy import ndimage
from scipy.cluster.hierarchy import DisjointSet

from bootlab.core.errors import domain_error, lemma_violation
from bootlab.services.engine import (
    closure,
    diam,
    internally_spanned,
    label_components,
    long_diam,
)
from bootlab.services.lattice import (
    CellSet,
    LatticeSpec,
    Rect,
    StructureKind,
    neighbour_table,
    validate_cell,
)
from bootlab.services.metrics import lemma_checks_total

logger = logging.getLogger("Bootlab.Structure")


def _rects_within(outer: Rect, L: int) -> Iterator[Rect]:
    """Sub-rectangles of outer with L <= long <= 2L, lexicographic in (lo, hi)."""
    ranges = [range(a, b + 1) for a, b in zip(outer.lo, outer.hi)]
    for lo in itertools.product(*ranges):
        his = [range(x, b + 1) for x, b in zip(lo, outer.hi)]
        for hi in itertools.product(*his):
            long = max(h - l + 1 for l, h in zip(lo, hi))
            if L <= long <= 2 * L:
                yield Rect(lo, hi)


def al_window(spec: LatticeSpec, a: CellSet, L: int) -> Rect:
    """Internally spanned rectangle R with L <= long(R) <= 2L.

    Only defined for r = 2 structures. The scan is exhaustive over
    rectangles inside components of [a] whose long-axis extent reaches L.
    """
    if spec.kind == StructureKind.SLAB or spec.r != 2:
        raise domain_error("al_window is only defined for UNIFORM/THICK structures with r = 2")
    closed = closure(spec, a).closure
    reach = long_diam(spec, closed)
    if not 1 <= L <= reach:
        raise domain_error(f"L = {L} outside [1, {reach}] (long-axis diameter of the closure)")

    labels, order = label_components(closed.mask)
    slices = ndimage.find_objects(labels)
    for lab in order:
        sl = slices[lab - 1][: spec.d]
        outer = Rect(tuple(s.start + 1 for s in sl), tuple(s.stop for s in sl))
        if outer.long < L:
            continue
        for rect in _rects_within(outer, L):
            if internally_spanned(spec, rect, a):
                lemma_checks_total.inc(lemma="al_window", outcome="ok")
                return rect
    lemma_checks_total.inc(lemma="al_window", outcome="violation")
    raise lemma_violation("al_window", f"no spanned rectangle with long in [{L}, {2 * L}]")


def small_component(spec: LatticeSpec, a: CellSet, L: int) -> CellSet:
    """Connected internally filled X with L <= diam(X) <= 2L.

    Cells of [a] are added one at a time in infection order (generation,
    then linear index). Each addition merges at most 2*ndim components of
    diameter below L, so the first component to reach L stays below 2L.
    """
    result = closure(spec, a)
    reach = diam(spec, result.closure)
    if not 1 <= L <= reach:
        raise domain_error(f"L = {L} outside [1, {reach}] (diameter of the closure)")

    times = result.times.ravel()
    infected = np.flatnonzero(times >= 0)
    order = infected[np.lexsort((infected, times[infected]))]
    coords = np.array(np.unravel_index(order, spec.shape)).T

    table = neighbour_table(spec.shape)
    added = np.zeros(spec.cell_count, dtype=bool)
    sets = DisjointSet()
    lows = {}
    highs = {}
    found = None
    for v, xyz in zip(order.tolist(), coords):
        sets.add(v)
        lows[v] = xyz.copy()
        highs[v] = xyz.copy()
        added[v] = True
        for w in table[v].tolist():
            if w < 0 or not added[w]:
                continue
            ra, rb = sets[v], sets[w]
            if ra == rb:
                continue
            sets.merge(ra, rb)
            root = sets[v]
            lo = np.minimum(lows.pop(ra), lows.pop(rb))
            hi = np.maximum(highs.pop(ra), highs.pop(rb))
            lows[root], highs[root] = lo, hi
        root = sets[v]
        if int((highs[root] - lows[root]).max()) + 1 >= L:
            found = sets.subset(v)
            break

    if found is None:
        raise lemma_violation("small_component", "no component reached the requested diameter")
    mask = np.zeros(spec.cell_count, dtype=bool)
    mask[list(found)] = True
    x = CellSet(mask.reshape(spec.shape))

    size = diam(spec, x)
    filled = x <= closure(spec, a & x).closure
    connected = len(label_components(x.mask)[1]) == 1
    if not (L <= size <= 2 * L and filled and connected):
        lemma_checks_total.inc(lemma="small_component", outcome="violation")
        raise lemma_violation(
            "small_component",
            f"diam {size}, filled={filled}, connected={connected} for L = {L}",
        )
    lemma_checks_total.inc(lemma="small_component", outcome="ok")
    return x


def has_double_gap(spec: LatticeSpec, rect: Rect, a: CellSet, axis: int) -> bool:
    """Two adjacent hyperplanes of rect perpendicular to axis free of a."""
    rect.within(spec)
    if not 1 <= axis <= spec.d:
        raise domain_error(f"Axis {axis} not in [1, {spec.d}]")
    inner = a.mask[rect.box(spec)]
    others = tuple(i for i in range(inner.ndim) if i != axis - 1)
    occupied = inner.any(axis=others) if others else inner
    empty = ~occupied
    return bool(np.any(empty[:-1] & empty[1:]))


def gamma_set(spec: LatticeSpec, a: CellSet, m: int, x) -> CellSet:
    """Cells joined to x by an internally filled connected X with diam(X) <= m.

    A witness X fits in a box of side m. For a fixed box Q the largest
    union of witnesses is the fixpoint of B <- B ∩ K(B), where K(B) is
    the component of x in [B] ∩ Q and B starts at a ∩ Q; the map is
    monotone so the fixpoint dominates every witness. Larger boxes only
    add witnesses, so maximal boxes suffice.
    """
    cell = validate_cell(spec, x)
    if m < 1:
        raise domain_error(f"m must be positive, got {m}")
    origin = tuple(c - 1 for c in cell)
    sides = [min(m, size) for size in spec.shape]
    starts = [
        range(max(0, o - s + 1), min(o, size - s) + 1)
        for o, s, size in zip(origin, sides, spec.shape)
    ]
    gamma = np.zeros(spec.shape, dtype=bool)
    structure = ndimage.generate_binary_structure(spec.ndim, 1)
    for corner in itertools.product(*starts):
        box = tuple(slice(c, c + s) for c, s in zip(corner, sides))
        local = tuple(o - c for o, c in zip(origin, corner))
        seeds = np.zeros(spec.shape, dtype=bool)
        seeds[box] = a.mask[box]
        while seeds.any():
            closed = closure(spec, CellSet(seeds)).closure.mask[box]
            if not closed[local]:
                break
            labels, _ = ndimage.label(closed, structure=structure)
            component = np.zeros(spec.shape, dtype=bool)
            component[box] = labels == labels[local]
            trimmed = seeds & component
            if np.array_equal(trimmed, seeds):
                gamma |= component
                break
            seeds = trimmed
    return CellSet(gamma)
