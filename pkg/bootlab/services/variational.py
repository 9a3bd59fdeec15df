"""
Variational cost of growing a droplet: w_f along staircase paths and its
minimum W_f over monotone paths between two corner vectors.
"""

import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy import integrate

from bootlab.core.errors import domain_error
from bootlab.services.special import g

logger = logging.getLogger("Bootlab.Variational")

FaceCost = Callable[[float], float]


def _constant(c: float, x: float) -> float:
    return c


def face_cost(name: str) -> FaceCost:
    """Parse 'g:k' (g_k) or 'const:c' into a picklable integrand."""
    kind, _, arg = name.strip().partition(":")
    try:
        if kind == "g":
            k = int(arg)
            if k < 1:
                raise ValueError
            return partial(g, k)
        if kind == "const":
            c = float(arg)
            if c <= 0:
                raise ValueError
            return partial(_constant, c)
    except ValueError:
        pass
    raise domain_error(f"Unknown face cost '{name}' (expected g:K or const:C)")


@dataclass(frozen=True)
class PathPoly:
    """Staircase path: start point plus axis-parallel increments (axis, length), axes 1-based."""

    start: Tuple[float, ...]
    steps: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(x) for x in self.start))
        object.__setattr__(self, "steps", tuple((int(j), float(h)) for j, h in self.steps))
        if not self.start or any(x <= 0 for x in self.start):
            raise domain_error(f"Path start {self.start} must be positive")
        for j, h in self.steps:
            if not 1 <= j <= len(self.start):
                raise domain_error(f"Step axis {j} not in [1, {len(self.start)}]")
            if h <= 0:
                raise domain_error(f"Step lengths must be positive, got {h}")

    @classmethod
    def through(cls, points: Sequence[Sequence[float]]) -> "PathPoly":
        """Staircase visiting the given coordinate-wise nondecreasing points, axes in order."""
        pts = [tuple(float(x) for x in p) for p in points]
        steps: List[Tuple[int, float]] = []
        for here, there in zip(pts, pts[1:]):
            if any(b < a for a, b in zip(here, there)):
                raise domain_error(f"Path must be nondecreasing: {here} -> {there}")
            steps.extend((j, b - a) for j, (a, b) in enumerate(zip(here, there), start=1) if b > a)
        return cls(pts[0], tuple(steps))

    @property
    def d(self) -> int:
        return len(self.start)

    @property
    def end(self) -> Tuple[float, ...]:
        x = list(self.start)
        for j, h in self.steps:
            x[j - 1] += h
        return tuple(x)


def w_path(f: FaceCost, path: PathPoly) -> float:
    """Line integral of sum_j f(prod_{i != j} x_i) dx_j along the path.

    Along a step in direction j the other coordinates are frozen, so the
    integrand is constant and each step costs length * f(face product).
    """
    x = list(path.start)
    total = 0.0
    for j, h in path.steps:
        face = math.prod(v for i, v in enumerate(x, start=1) if i != j)
        total += h * f(face)
        x[j - 1] += h
    return total


@dataclass(frozen=True)
class VariationalResult:
    value: float
    # w_min at grid minus w_min at 2 * grid, nonnegative since the grids nest
    slack: float
    grid: int

    def to_dict(self) -> dict:
        return {"value": self.value, "slack": self.slack, "grid": self.grid}


def _check_endpoints(a: Sequence[float], b: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise domain_error(f"Endpoints {a.tolist()} and {b.tolist()} must be vectors of equal length")
    if np.any(a <= 0):
        raise domain_error(f"Start {a.tolist()} must be positive")
    if np.any(a > b):
        raise domain_error(f"Need a <= b coordinate-wise, got {a.tolist()} and {b.tolist()}")
    return a, b


def axis_grid(lo: float, hi: float, grid: int) -> np.ndarray:
    if lo == hi:
        return np.array([lo])
    if hi / lo > 10:
        return np.geomspace(lo, hi, grid + 1)
    return np.linspace(lo, hi, grid + 1)


def _values(f: FaceCost, xs: np.ndarray) -> np.ndarray:
    return np.fromiter((f(float(x)) for x in xs), dtype=float, count=len(xs))


def _grid_min(f: FaceCost, a: np.ndarray, b: np.ndarray, grid: int) -> float:
    axes = [axis_grid(lo, hi, grid) for lo, hi in zip(a, b)]
    d = len(axes)
    shape = tuple(len(x) for x in axes)
    last = axes[-1]
    steps_last = np.diff(last)
    best = np.full(shape, np.inf)
    for prefix in np.ndindex(shape[:-1]):
        coords = [axes[i][t] for i, t in enumerate(prefix)]
        # arrive from a predecessor along one of the first d - 1 axes
        arrivals = np.full(len(last), np.inf)
        if not any(prefix):
            arrivals[0] = 0.0
        for j, t in enumerate(prefix):
            if t == 0:
                continue
            back = list(prefix)
            back[j] -= 1
            others = math.prod(c for i, c in enumerate(coords) if i != j)
            cost = (axes[j][t] - axes[j][t - 1]) * _values(f, others * last)
            arrivals = np.minimum(arrivals, best[tuple(back)] + cost)
        # then run along the last axis: best[t] = P_t + min_{s <= t} (arrivals_s - P_s)
        rate = f(math.prod(coords))
        climb = np.concatenate(([0.0], np.cumsum(rate * steps_last)))
        best[prefix] = climb + np.minimum.accumulate(arrivals - climb)
    return float(best[(-1,) * d])


def w_min(f: FaceCost, a: Sequence[float], b: Sequence[float], grid: int = 64) -> VariationalResult:
    """Minimum of w_f over monotone staircases on the grid between a and b.

    Axis grids are geometric when b_j / a_j > 10 and uniform otherwise.
    """
    a, b = _check_endpoints(a, b)
    if grid < 2:
        raise domain_error(f"grid must be at least 2, got {grid}")
    if np.array_equal(a, b):
        return VariationalResult(0.0, 0.0, grid)
    coarse = _grid_min(f, a, b, grid)
    fine = _grid_min(f, a, b, 2 * grid)
    logger.debug(f"W_f({a.tolist()}, {b.tolist()}) grid {grid}: {coarse:.6g}, refined {fine:.6g}")
    return VariationalResult(coarse, max(0.0, coarse - fine), grid)


def straight_path_upper_bound(f: FaceCost, a: Sequence[float], b: Sequence[float]) -> float:
    """sum_j (b_j - a_j) f(prod_{i != j} a_i); bounds W_f(a, b) above for decreasing f."""
    a, b = _check_endpoints(a, b)
    return float(
        sum((b[j] - a[j]) * f(math.prod(np.delete(a, j).tolist())) for j in range(len(a)))
    )


def minw_lower_bound(f: FaceCost, a: Sequence[float], b: Sequence[float]) -> float:
    """d int_{max a}^{max b} f(z^{d-1}) dz - d max(b) f(b_2 ... b_d), b sorted ascending."""
    a, b = _check_endpoints(a, b)
    d = len(a)
    lo, hi = float(a.max()), float(b.max())
    area = 0.0
    if hi > lo:
        area = integrate.quad(lambda z: f(z ** (d - 1)), lo, hi, limit=200)[0]
    tail = math.prod(np.sort(b)[1:].tolist())
    return d * area - d * hi * f(tail)


def wswitch_sides(f: FaceCost, a: Sequence[float], b: float) -> Tuple[float, float]:
    """Costs of a -> a+b e_1 -> a+b(e_1+e_2) and of a -> a+b e_2 -> a+b(e_1+e_2).

    For convex f and a_1 <= a_2 the first never exceeds the second.
    """
    a, _ = _check_endpoints(a, a)
    if len(a) < 2:
        raise domain_error("The exchange needs at least two axes")
    if b <= 0:
        raise domain_error(f"Step length must be positive, got {b}")
    first = w_path(f, PathPoly(tuple(a), ((1, b), (2, b))))
    second = w_path(f, PathPoly(tuple(a), ((2, b), (1, b))))
    return first, second


def u_cost(
    f: FaceCost, dims_small: Sequence[float], dims_large: Sequence[float], p: float, grid: int = 64
) -> VariationalResult:
    """U_f(R, R') = W_f(p^{1/(d-1)} dim R, p^{1/(d-1)} dim R')."""
    d = len(dims_small)
    if d < 2:
        raise domain_error("U_f needs at least two dimensions")
    if not 0.0 < p < 1.0:
        raise domain_error(f"p must lie in (0, 1), got {p}")
    scale = p ** (1.0 / (d - 1))
    return w_min(
        f,
        [scale * x for x in dims_small],
        [scale * x for x in dims_large],
        grid,
    )
