"""Exact dyadic geometry on the upper half-plane.

Intervals live on the binary subdivision tree of a base interval with
dyadic-rational endpoints, represented as (depth, index) over the base so
that subdivision, tiling and measure queries are exact at any depth
(``fractions.Fraction`` arithmetic, no floating endpoints).  Carleson
squares, interval unions and sawtooth regions are thin wrappers around
that tree.  The only approximate object in this module is the grid-graph
intrinsic metric.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DepthExceeded, EmptyCoreSet, ResolutionTooCoarse

#: Hard cap on subdivision depth; 2^-60 is far below any sampling floor used here.
MAX_DEPTH_DEFAULT = 60

SQRT2 = math.sqrt(2.0)


def as_fraction(x) -> Fraction:
    """Coerce ints, floats (exact binary value), strings like '-1/2', Fractions."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to Fraction")


@dataclass(frozen=True)
class DyadicInterval:
    """Node of the binary subdivision tree of [base_left, base_left+base_length].

    ``depth`` counts subdivisions from the base, ``index`` enumerates the
    2^depth nodes of that depth left to right.
    """

    base_left: Fraction
    base_length: Fraction
    depth: int
    index: int

    def __post_init__(self):
        if self.base_length <= 0:
            raise ValueError("base_length must be positive")
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if not (0 <= self.index < 2 ** self.depth):
            raise ValueError(f"index {self.index} out of range at depth {self.depth}")

    @classmethod
    def root(cls, left="-1/2", length=1) -> "DyadicInterval":
        return cls(as_fraction(left), as_fraction(length), 0, 0)

    @property
    def length(self) -> Fraction:
        return self.base_length / (2 ** self.depth)

    @property
    def left(self) -> Fraction:
        return self.base_left + self.index * self.length

    @property
    def right(self) -> Fraction:
        return self.left + self.length

    @property
    def center(self) -> Fraction:
        return self.left + self.length / 2

    @property
    def anchor(self) -> complex:
        """The point (center, length) in the upper half-plane."""
        return complex(float(self.center), float(self.length))

    def children(self, max_depth: int = MAX_DEPTH_DEFAULT):
        """Left and right halves; left child carries the even sub-index."""
        if self.depth + 1 > max_depth:
            raise DepthExceeded(f"subdivision beyond depth {max_depth}")
        d, i = self.depth + 1, 2 * self.index
        left = DyadicInterval(self.base_left, self.base_length, d, i)
        right = DyadicInterval(self.base_left, self.base_length, d, i + 1)
        return left, right

    def child(self, bit: int, max_depth: int = MAX_DEPTH_DEFAULT) -> "DyadicInterval":
        return self.children(max_depth)[bit]

    def parent(self) -> "DyadicInterval":
        if self.depth == 0:
            raise ValueError("root has no parent")
        return DyadicInterval(self.base_left, self.base_length, self.depth - 1, self.index // 2)

    def descendant(self, rel_depth: int, rel_index: int,
                   max_depth: int = MAX_DEPTH_DEFAULT) -> "DyadicInterval":
        if rel_depth < 0 or not (0 <= rel_index < 2 ** rel_depth):
            raise ValueError("bad relative address")
        if self.depth + rel_depth > max_depth:
            raise DepthExceeded(f"subdivision beyond depth {max_depth}")
        return DyadicInterval(self.base_left, self.base_length,
                              self.depth + rel_depth,
                              self.index * 2 ** rel_depth + rel_index)

    def contains_x(self, x) -> bool:
        x = as_fraction(x)
        return self.left <= x <= self.right

    def contains(self, other: "DyadicInterval") -> bool:
        if (self.base_left, self.base_length) != (other.base_left, other.base_length):
            return other.left >= self.left and other.right <= self.right
        if other.depth < self.depth:
            return False
        return other.index >> (other.depth - self.depth) == self.index

    def relative_address(self, descendant: "DyadicInterval") -> tuple[int, ...]:
        """Bit path from self down to descendant (0 = left child)."""
        if not self.contains(descendant):
            raise ValueError("not a descendant")
        k = descendant.depth - self.depth
        rel = descendant.index - (self.index << k)
        return tuple((rel >> (k - 1 - j)) & 1 for j in range(k))

    def to_json_obj(self) -> dict:
        return {
            "base_left": str(self.base_left),
            "base_length": str(self.base_length),
            "depth": self.depth,
            "index": self.index,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "DyadicInterval":
        return cls(Fraction(obj["base_left"]), Fraction(obj["base_length"]),
                   int(obj["depth"]), int(obj["index"]))


@dataclass(frozen=True)
class CarlesonSquare:
    """The axis-aligned square above an interval with side equal to its length."""

    interval: DyadicInterval

    @property
    def side(self) -> Fraction:
        return self.interval.length

    def contains_point(self, p: complex) -> bool:
        x, y = p.real, p.imag
        return (float(self.interval.left) <= x <= float(self.interval.right)
                and 0.0 < y < float(self.side))


def anchor(interval: DyadicInterval) -> complex:
    """The point (center, |I|) in the upper half-plane."""
    return interval.anchor


class IntervalUnion:
    """Ordered union of disjoint closed intervals with exact endpoints.

    Components are normalized on construction: sorted, overlapping or
    touching intervals merged, so that a_i <= b_i < a_{i+1} holds.
    """

    __slots__ = ("components", "_lefts", "_rights")

    def __init__(self, pairs: Iterable[tuple]):
        comps = sorted((as_fraction(a), as_fraction(b)) for a, b in pairs)
        merged: list[tuple[Fraction, Fraction]] = []
        for a, b in comps:
            if b < a:
                raise ValueError("component with negative length")
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        self.components: tuple[tuple[Fraction, Fraction], ...] = tuple(merged)
        self._lefts = np.array([float(a) for a, _ in merged])
        self._rights = np.array([float(b) for _, b in merged])

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(())

    @classmethod
    def from_interval(cls, iv: DyadicInterval) -> "IntervalUnion":
        return cls([(iv.left, iv.right)])

    def __len__(self) -> int:
        return len(self.components)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalUnion) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self) -> str:
        return f"IntervalUnion({[(str(a), str(b)) for a, b in self.components]})"

    @property
    def is_empty(self) -> bool:
        return not self.components

    @property
    def total_length(self) -> Fraction:
        return sum((b - a for a, b in self.components), Fraction(0))

    @property
    def bounds(self) -> tuple[Fraction, Fraction]:
        if self.is_empty:
            raise EmptyCoreSet("empty union has no bounds")
        return self.components[0][0], self.components[-1][1]

    def contains_x(self, x) -> bool:
        x = as_fraction(x)
        for a, b in self.components:
            if a <= x <= b:
                return True
            if a > x:
                break
        return False

    def distance(self, x: float) -> float:
        """Exact Euclidean distance from x to the union (inf for empty)."""
        if self.is_empty:
            raise EmptyCoreSet("distance to empty core set")
        return float(self.distance_array(np.array([x]))[0])

    def distance_array(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized distance; zero inside components."""
        if self.is_empty:
            raise EmptyCoreSet("distance to empty core set")
        xs = np.asarray(xs, dtype=float)
        idx = np.searchsorted(self._lefts, xs)  # first left > x is idx
        d_right = np.full(xs.shape, np.inf)
        has_next = idx < len(self._lefts)
        d_right[has_next] = self._lefts[idx[has_next]] - xs[has_next]
        d_left = np.full(xs.shape, np.inf)
        has_prev = idx > 0
        d_left[has_prev] = xs[has_prev] - self._rights[idx[has_prev] - 1]
        return np.maximum(np.minimum(d_left, d_right), 0.0)

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion(list(self.components) + list(other.components))

    def intersect(self, lo, hi) -> "IntervalUnion":
        lo, hi = as_fraction(lo), as_fraction(hi)
        out = []
        for a, b in self.components:
            a2, b2 = max(a, lo), min(b, hi)
            if a2 <= b2:
                out.append((a2, b2))
        return IntervalUnion(out)

    def complement_within(self, lo, hi) -> "IntervalUnion":
        """Closure of [lo,hi] minus the union."""
        lo, hi = as_fraction(lo), as_fraction(hi)
        out = []
        cursor = lo
        for a, b in self.components:
            if b < lo:
                continue
            if a > hi:
                break
            if a > cursor:
                out.append((cursor, min(a, hi)))
            cursor = max(cursor, b)
        if cursor < hi:
            out.append((cursor, hi))
        return IntervalUnion(out)

    def overlap_length(self, lo, hi) -> Fraction:
        """Exact length of the union restricted to [lo, hi]."""
        lo, hi = as_fraction(lo), as_fraction(hi)
        total = Fraction(0)
        for a, b in self.components:
            a2, b2 = max(a, lo), min(b, hi)
            if a2 < b2:
                total += b2 - a2
        return total

    def to_csv_rows(self) -> list[str]:
        return [f"{a},{b}" for a, b in self.components]

    @classmethod
    def from_csv_rows(cls, rows: Sequence[str]) -> "IntervalUnion":
        pairs = []
        for row in rows:
            row = row.strip()
            if not row:
                continue
            a, b = row.split(",")
            pairs.append((Fraction(a), Fraction(b)))
        return cls(pairs)

    def to_json_obj(self) -> list:
        return [[str(a), str(b)] for a, b in self.components]

    @classmethod
    def from_json_obj(cls, obj: list) -> "IntervalUnion":
        return cls([(Fraction(a), Fraction(b)) for a, b in obj])


@dataclass(frozen=True)
class SawtoothRegion:
    """Points above the base whose height dominates the distance to the core set.

    Membership: x in base, d(x, core) <= y < y0.  Core components are taken
    closed; the measure-zero boundary choice does not affect any reported
    quantity.
    """

    base: DyadicInterval
    core: IntervalUnion
    y0: Fraction

    def __post_init__(self):
        if self.y0 <= 0:
            raise ValueError("y0 must be positive")

    @classmethod
    def over(cls, base: DyadicInterval, core: IntervalUnion) -> "SawtoothRegion":
        return cls(base, core, base.length)

    def distance(self, x: float) -> float:
        return self.core.distance(x)

    def membership(self, p: complex) -> tuple[float, bool]:
        """Returns (d(x, core), member flag) for p = x + iy."""
        d = self.core.distance(p.real)
        x_ok = float(self.base.left) <= p.real <= float(self.base.right)
        return d, bool(x_ok and d <= p.imag < float(self.y0))

    def membership_closed(self, p: complex) -> bool:
        """Closed-top variant used for curves and grid graphs."""
        d = self.core.distance(p.real)
        x_ok = float(self.base.left) <= p.real <= float(self.base.right)
        return bool(x_ok and d <= p.imag <= float(self.y0))

    def lower_boundary_vertices(self) -> list[tuple[float, float]]:
        """Vertices of the piecewise-linear graph x -> min(d(x, core), y0).

        The distance to a closed interval union is piecewise linear with
        slopes in {-1, 0, +1} and breakpoints at component endpoints and
        gap midpoints, so the graph is exact.
        """
        if self.core.is_empty:
            raise EmptyCoreSet("sawtooth over empty core set")
        bl, br = float(self.base.left), float(self.base.right)
        y0 = float(self.y0)
        comps = [(float(a), float(b)) for a, b in self.core.components]
        pts: list[tuple[float, float]] = []

        def clip_append(x, y):
            pts.append((x, min(y, y0)))

        first_a = comps[0][0]
        if bl < first_a:
            clip_append(bl, first_a - bl)
        for i, (a, b) in enumerate(comps):
            clip_append(a, 0.0)
            if a != b:
                clip_append(b, 0.0)
            if i + 1 < len(comps):
                na = comps[i + 1][0]
                mid = 0.5 * (b + na)
                clip_append(mid, mid - b)
        last_b = comps[-1][1]
        if br > last_b:
            clip_append(br, br - last_b)
        # Deduplicate consecutive identical vertices.
        dedup = [pts[0]]
        for q in pts[1:]:
            if q != dedup[-1]:
                dedup.append(q)
        return dedup

    def boundary_polygon(self) -> list[tuple[float, float]]:
        """Closed boundary polyline: lower sawtooth graph, side walls, top edge."""
        lower = self.lower_boundary_vertices()
        bl, br = float(self.base.left), float(self.base.right)
        y0 = float(self.y0)
        poly = [(bl, y0)]
        if lower[0] != (bl, y0):
            poly.append(lower[0])
        poly.extend(lower[1:])
        if poly[-1] != (br, y0):
            poly.append((br, y0))
        poly.append((bl, y0))
        return poly

    def to_json_obj(self) -> dict:
        return {
            "base": self.base.to_json_obj(),
            "components": self.core.to_json_obj(),
            "y0": str(self.y0),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SawtoothRegion":
        return cls(DyadicInterval.from_json_obj(obj["base"]),
                   IntervalUnion.from_json_obj(obj["components"]),
                   Fraction(obj["y0"]))


def sawtooth_distance(region: SawtoothRegion, p: complex) -> tuple[float, bool]:
    """Distance d(x, core) and membership flag for p = x + iy."""
    return region.membership(p)


def _grid_mask(region: SawtoothRegion, resolution: float):
    bl, br = float(region.base.left), float(region.base.right)
    y0 = float(region.y0)
    nx = max(2, int(math.ceil((br - bl) / resolution)))
    ny = max(2, int(math.ceil(y0 / resolution)))
    xs = bl + (np.arange(nx) + 0.5) * (br - bl) / nx
    ys = (np.arange(ny) + 0.5) * y0 / ny
    dx = region.core.distance_array(xs)
    # Closed-top membership so the ceiling row stays usable for paths.
    mask = ys[None, :] >= dx[:, None]
    return xs, ys, mask


def _snap(xs, ys, mask, p: complex):
    i = int(np.clip(np.searchsorted(xs, p.real), 0, len(xs) - 1))
    if i > 0 and abs(xs[i - 1] - p.real) < abs(xs[i] - p.real):
        i -= 1
    j = int(np.clip(np.searchsorted(ys, p.imag), 0, len(ys) - 1))
    if j > 0 and abs(ys[j - 1] - p.imag) < abs(ys[j] - p.imag):
        j -= 1
    if not mask[i, j]:
        # climb straight up to the nearest member node in the column
        above = np.nonzero(mask[i, j:])[0]
        if len(above) == 0:
            raise ResolutionTooCoarse("query point column empty at this resolution")
        j += int(above[0])
    return i, j


def _shortcut_length(region: SawtoothRegion, path: list[complex], resolution: float) -> float:
    """Greedy line-of-sight smoothing; keeps the path inside the closed region."""

    def segment_inside(a: complex, b: complex) -> bool:
        n = max(2, int(abs(b - a) / (0.25 * resolution)) + 1)
        for t in np.linspace(0.0, 1.0, n):
            q = a + t * (b - a)
            if not region.membership_closed(q):
                return False
        return True

    smoothed = [path[0]]
    i = 0
    while i < len(path) - 1:
        j = len(path) - 1
        while j > i + 1 and not segment_inside(path[i], path[j]):
            j -= 1
        smoothed.append(path[j])
        i = j
    return float(sum(abs(smoothed[k + 1] - smoothed[k]) for k in range(len(smoothed) - 1)))


#: Documented constant in the approximation guarantee of intrinsic_distance:
#: the returned length is within (1 + APPROX_C * resolution / min(d(p), d(q)))
#: of the true intrinsic distance for points at graph distance >= resolution
#: from the boundary.
APPROX_C = 8.0


def intrinsic_distance(region: SawtoothRegion, p: complex, q: complex,
                       resolution: float) -> float:
    """Shortest-path length between p and q inside the region.

    Dijkstra on an 8-neighbor grid graph at the given resolution followed by
    line-of-sight smoothing.  The value is always >= |p - q| and within a
    factor (1 + APPROX_C * resolution / min(d(p), d(q))) of the intrinsic
    distance.  Raises ResolutionTooCoarse when the discretization
    disconnects the endpoints.
    """
    if region.core.is_empty:
        raise EmptyCoreSet("intrinsic distance in a sawtooth over empty core")
    if p == q:
        return 0.0
    dp, mp = region.membership(p)
    dq, mq = region.membership(q)
    if not (mp or region.membership_closed(p)) or not (mq or region.membership_closed(q)):
        raise ValueError("endpoints must belong to the region")
    xs, ys, mask = _grid_mask(region, resolution)
    hx = xs[1] - xs[0] if len(xs) > 1 else resolution
    hy = ys[1] - ys[0] if len(ys) > 1 else resolution
    start = _snap(xs, ys, mask, p)
    goal = _snap(xs, ys, mask, q)

    nx, ny = mask.shape
    steps = [(-1, 0, hx), (1, 0, hx), (0, -1, hy), (0, 1, hy),
             (-1, -1, math.hypot(hx, hy)), (-1, 1, math.hypot(hx, hy)),
             (1, -1, math.hypot(hx, hy)), (1, 1, math.hypot(hx, hy))]
    dist = {start: 0.0}
    prev: dict[tuple[int, int], tuple[int, int]] = {}
    heap = [(0.0, start)]
    while heap:
        d, node = heapq.heappop(heap)
        if node == goal:
            break
        if d > dist.get(node, math.inf):
            continue
        i, j = node
        for di, dj, w in steps:
            ii, jj = i + di, j + dj
            if 0 <= ii < nx and 0 <= jj < ny and mask[ii, jj]:
                nd = d + w
                if nd < dist.get((ii, jj), math.inf):
                    dist[(ii, jj)] = nd
                    prev[(ii, jj)] = node
                    heapq.heappush(heap, (nd, (ii, jj)))
    if goal not in dist:
        raise ResolutionTooCoarse("grid graph disconnected at this resolution")

    path = [complex(xs[goal[0]], ys[goal[1]])]
    node = goal
    while node != start:
        node = prev[node]
        path.append(complex(xs[node[0]], ys[node[1]]))
    path.reverse()
    path = [p] + path + [q]
    length = _shortcut_length(region, path, resolution)
    return max(length, abs(p - q))
