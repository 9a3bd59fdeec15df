"""
Lattice geometry: bootstrap structures, cells, cell sets and rectangles.

All coordinates are 1-based. Cells are linearized in C order over
``spec.shape``: long axes first, thick axes last.
"""

import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from cachetools import LRUCache, cached
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from bootlab.core.config import settings
from bootlab.core.errors import bounds_error, domain_error, empty_input

logger = logging.getLogger("Bootlab.Lattice")

Cell = Tuple[int, ...]


class StructureKind(str, Enum):
    UNIFORM = "uniform"
    THICK = "thick"
    SLAB = "slab"


class LatticeSpec(BaseModel):
    """Shape and threshold rule of a bootstrap structure.

    UNIFORM is B([n]^d, r). THICK is C([n]^d x [k]^ell, r). SLAB is
    C([n]^d x [k_1] x ... x [k_{ell+1}], 1) with one length per thick axis.
    """

    model_config = ConfigDict(frozen=True)

    kind: StructureKind
    d: int = Field(ge=1)
    ell: int = Field(default=0, ge=0)
    n: int = Field(ge=1)
    k: Union[int, Tuple[int, ...]] = 1
    r: int = Field(ge=1)

    @field_validator("k", mode="before")
    @classmethod
    def assemble_k(cls, v):
        if isinstance(v, (list, tuple)):
            return tuple(int(x) for x in v)
        return v

    @model_validator(mode="before")
    @classmethod
    def normalize_slab(cls, data):
        # SLAB always stores its thick lengths as a vector
        if not isinstance(data, dict):
            return data
        kind = data.get("kind", "")
        if str(getattr(kind, "value", kind)).lower() == "slab":
            data = dict(data)
            k = data.get("k", 1)
            if isinstance(k, int):
                data["k"] = (k,) * (int(data.get("ell", 0)) + 1)
            data.setdefault("r", 1)
        return data

    @model_validator(mode="after")
    def check_rule(self) -> "LatticeSpec":
        if self.kind == StructureKind.UNIFORM:
            if self.ell != 0:
                raise ValueError("UNIFORM structures have no thick axes (ell must be 0)")
        elif self.kind == StructureKind.THICK:
            if not isinstance(self.k, int):
                raise ValueError("THICK structures take a single thick length k")
        else:
            if self.r != 1:
                raise ValueError("SLAB structures have base threshold r = 1")
            if not isinstance(self.k, tuple) or len(self.k) != self.ell + 1:
                raise ValueError("SLAB needs ell + 1 thick lengths")
        if any(length < 1 for length in self.thick_lengths):
            raise ValueError("thick lengths must be positive")
        if self.cell_count > settings.MAX_CELLS:
            raise ValueError(
                f"{self.cell_count} cells exceed the addressable limit {settings.MAX_CELLS}"
            )
        return self

    @property
    def thick_lengths(self) -> Tuple[int, ...]:
        if self.kind == StructureKind.UNIFORM:
            return ()
        if self.kind == StructureKind.THICK:
            return (self.k,) * self.ell
        return tuple(self.k)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d + self.thick_lengths

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))

    @classmethod
    def uniform(cls, d: int, n: int, r: int) -> "LatticeSpec":
        return cls(kind=StructureKind.UNIFORM, d=d, n=n, r=r)

    @classmethod
    def thick(cls, d: int, ell: int, n: int, k: int, r: int) -> "LatticeSpec":
        return cls(kind=StructureKind.THICK, d=d, ell=ell, n=n, k=k, r=r)

    @classmethod
    def slab(cls, d: int, n: int, k: Sequence[int]) -> "LatticeSpec":
        return cls(kind=StructureKind.SLAB, d=d, ell=len(k) - 1, n=n, k=tuple(k), r=1)

    def to_json(self) -> str:
        payload = self.model_dump(mode="json")
        if isinstance(self.k, tuple):
            payload["k"] = list(self.k)
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "LatticeSpec":
        return cls.model_validate_json(text)


# --- Cached per-shape tables ---


@cached(LRUCache(maxsize=64))
def neighbour_table(shape: Tuple[int, ...]) -> np.ndarray:
    """(cells, 2*ndim) table of linear neighbour indices, -1 where absent.

    Column 2*i holds the neighbour at -e_i, column 2*i+1 the one at +e_i.
    """
    total = int(np.prod(shape, dtype=np.int64))
    idx = np.arange(total, dtype=np.int64).reshape(shape)
    table = np.full((total, 2 * len(shape)), -1, dtype=np.int64)
    for axis in range(len(shape)):
        lower = np.full(shape, -1, dtype=np.int64)
        upper = np.full(shape, -1, dtype=np.int64)
        src = [slice(None)] * len(shape)
        dst = [slice(None)] * len(shape)
        src[axis], dst[axis] = slice(None, -1), slice(1, None)
        lower[tuple(dst)] = idx[tuple(src)]
        upper[tuple(src)] = idx[tuple(dst)]
        table[:, 2 * axis] = lower.ravel()
        table[:, 2 * axis + 1] = upper.ravel()
    table.setflags(write=False)
    return table


def _interior(length: int) -> np.ndarray:
    """Indicator of coordinates not in {1, length}."""
    ind = np.zeros(length, dtype=np.int64)
    if length > 2:
        ind[1:-1] = 1
    return ind


@cached(LRUCache(maxsize=64), key=lambda spec: (spec.kind, spec.shape, spec.r))
def threshold_array(spec: LatticeSpec) -> np.ndarray:
    """Per-cell infection thresholds, shaped like the lattice."""
    thresholds = np.full(spec.shape, spec.r, dtype=np.int64)
    for offset, length in enumerate(spec.thick_lengths):
        axis = spec.d + offset
        view = [1] * spec.ndim
        view[axis] = length
        thresholds = thresholds + _interior(length).reshape(view)
    thresholds.setflags(write=False)
    return thresholds


# --- Cells ---


def validate_cell(spec: LatticeSpec, c: Sequence[int]) -> Cell:
    cell = tuple(int(x) for x in c)
    if len(cell) != spec.ndim:
        raise bounds_error(f"Cell {cell} has {len(cell)} coordinates, expected {spec.ndim}")
    for coord, side in zip(cell, spec.shape):
        if not 1 <= coord <= side:
            raise bounds_error(f"Cell {cell} outside lattice of shape {spec.shape}")
    return cell


def threshold(spec: LatticeSpec, c: Sequence[int]) -> int:
    """Infection threshold of cell c."""
    cell = validate_cell(spec, c)
    return int(threshold_array(spec)[tuple(x - 1 for x in cell)])


def neighbours(spec: LatticeSpec, c: Sequence[int]) -> List[Cell]:
    """In-bounds cells at L1 distance one, axis by axis, lower side first."""
    cell = validate_cell(spec, c)
    out = []
    for axis, side in enumerate(spec.shape):
        for step in (-1, 1):
            coord = cell[axis] + step
            if 1 <= coord <= side:
                out.append(cell[:axis] + (coord,) + cell[axis + 1 :])
    return out


# --- Cell sets ---


class CellSet:
    """Immutable dense set of cells backed by a boolean array."""

    __slots__ = ("_bits", "_count")

    def __init__(self, mask: np.ndarray):
        bits = np.array(mask, dtype=bool, copy=True)
        bits.setflags(write=False)
        self._bits = bits
        self._count = int(bits.sum())

    @classmethod
    def empty(cls, spec: LatticeSpec) -> "CellSet":
        return cls(np.zeros(spec.shape, dtype=bool))

    @classmethod
    def full(cls, spec: LatticeSpec) -> "CellSet":
        return cls(np.ones(spec.shape, dtype=bool))

    @classmethod
    def from_cells(cls, spec: LatticeSpec, cells: Iterable[Sequence[int]]) -> "CellSet":
        mask = np.zeros(spec.shape, dtype=bool)
        for c in cells:
            cell = validate_cell(spec, c)
            mask[tuple(x - 1 for x in cell)] = True
        return cls(mask)

    @classmethod
    def from_text(cls, spec: LatticeSpec, text: str) -> "CellSet":
        """Parse one comma-separated cell per line; '#' starts a comment."""
        cells = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                cells.append(tuple(int(tok) for tok in line.split(",")))
            except ValueError:
                raise domain_error(f"Line {lineno}: cannot parse cell '{raw.strip()}'")
        return cls.from_cells(spec, cells)

    @property
    def mask(self) -> np.ndarray:
        return self._bits

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._bits.shape

    def __len__(self) -> int:
        return self._count

    def __bool__(self) -> bool:
        return self._count > 0

    def __contains__(self, c) -> bool:
        cell = tuple(c)
        if len(cell) != self._bits.ndim:
            return False
        if any(not 1 <= x <= side for x, side in zip(cell, self.shape)):
            return False
        return bool(self._bits[tuple(x - 1 for x in cell)])

    def cells(self) -> List[Cell]:
        """Members in ascending linear order."""
        return [tuple(int(x) + 1 for x in idx) for idx in np.argwhere(self._bits)]

    def __iter__(self) -> Iterator[Cell]:
        return iter(self.cells())

    def linear_indices(self) -> np.ndarray:
        return np.flatnonzero(self._bits)

    def _check(self, other: "CellSet") -> None:
        if self.shape != other.shape:
            raise domain_error(f"Cell sets on different lattices: {self.shape} vs {other.shape}")

    def __or__(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self._bits | other._bits)

    def __and__(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self._bits & other._bits)

    def __sub__(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self._bits & ~other._bits)

    def __le__(self, other: "CellSet") -> bool:
        self._check(other)
        return not np.any(self._bits & ~other._bits)

    def __ge__(self, other: "CellSet") -> bool:
        return other <= self

    def __eq__(self, other) -> bool:
        if not isinstance(other, CellSet):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._bits, other._bits)

    def __hash__(self) -> int:
        return hash((self.shape, np.packbits(self._bits).tobytes()))

    def __repr__(self) -> str:
        return f"CellSet(shape={self.shape}, size={self._count})"

    def restrict(self, spec: LatticeSpec, rect: "Rect") -> "CellSet":
        """Members lying inside rect."""
        mask = np.zeros(self.shape, dtype=bool)
        box = rect.box(spec)
        mask[box] = self._bits[box]
        return CellSet(mask)

    def to_text(self) -> str:
        return "".join(",".join(str(x) for x in c) + "\n" for c in self.cells())


# --- Rectangles ---


@dataclass(frozen=True)
class Rect:
    """Product of intervals [lo_i, hi_i] on the long axes, full range on thick axes."""

    lo: Tuple[int, ...]
    hi: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(int(x) for x in self.lo))
        object.__setattr__(self, "hi", tuple(int(x) for x in self.hi))
        if len(self.lo) != len(self.hi) or not self.lo:
            raise domain_error(f"Rect corners {self.lo}, {self.hi} have mismatched length")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise domain_error(f"Rect needs lo <= hi, got {self.lo} > {self.hi}")

    @classmethod
    def parse(cls, text: str) -> "Rect":
        """Parse 'x1,y1:x2,y2'."""
        try:
            lo_text, hi_text = text.split(":")
            return cls(
                tuple(int(t) for t in lo_text.split(",")),
                tuple(int(t) for t in hi_text.split(",")),
            )
        except ValueError:
            raise domain_error(f"Cannot parse rectangle '{text}' (expected x1,y1:x2,y2)")

    @classmethod
    def full(cls, spec: LatticeSpec) -> "Rect":
        return cls((1,) * spec.d, (spec.n,) * spec.d)

    @property
    def dim(self) -> Tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    @property
    def phi(self) -> int:
        return sum(self.dim)

    @property
    def long(self) -> int:
        return max(self.dim)

    @property
    def short(self) -> int:
        return min(self.dim)

    def contains(self, c: Sequence[int]) -> bool:
        return all(a <= x <= b for a, x, b in zip(self.lo, c, self.hi))

    def __le__(self, other: "Rect") -> bool:
        return all(oa <= a and b <= ob for a, b, oa, ob in zip(self.lo, self.hi, other.lo, other.hi))

    def within(self, spec: LatticeSpec) -> "Rect":
        """Return self, raising a bounds error if it leaves the lattice."""
        if len(self.lo) != spec.d:
            raise bounds_error(f"Rect has {len(self.lo)} axes, lattice has {spec.d} long axes")
        if any(a < 1 or b > spec.n for a, b in zip(self.lo, self.hi)):
            raise bounds_error(f"Rect {self} leaves [1, {spec.n}]^{spec.d}")
        return self

    def box(self, spec: LatticeSpec) -> Tuple[slice, ...]:
        """Array slices selecting the rectangle, thick axes included."""
        self.within(spec)
        long = tuple(slice(a - 1, b) for a, b in zip(self.lo, self.hi))
        return long + (slice(None),) * (spec.ndim - spec.d)

    def box_shape(self, spec: LatticeSpec) -> Tuple[int, ...]:
        return self.dim + spec.thick_lengths

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    def __str__(self) -> str:
        return ",".join(map(str, self.lo)) + ":" + ",".join(map(str, self.hi))


def bounding_rect(spec: LatticeSpec, s: CellSet) -> Rect:
    """Smallest rectangle R(S) containing s."""
    if not s:
        raise empty_input("bounding_rect of an empty set")
    idx = np.argwhere(s.mask)[:, : spec.d]
    return Rect(tuple(idx.min(axis=0) + 1), tuple(idx.max(axis=0) + 1))


def rect_mask(spec: LatticeSpec, rect: Rect) -> np.ndarray:
    mask = np.zeros(spec.shape, dtype=bool)
    mask[rect.box(spec)] = True
    return mask


def load_spec(path: Optional[str] = None, inline: Optional[str] = None) -> LatticeSpec:
    """Read a LatticeSpec from a JSON file or an inline JSON string."""
    if inline is not None:
        return LatticeSpec.from_json(inline)
    if path is None:
        raise domain_error("A lattice spec is required (--spec or --spec-json)")
    with open(path, "r", encoding="utf-8") as f:
        return LatticeSpec.from_json(f.read())
