"""Independent Hausdorff-content estimators.

``content_1d`` is an exact oracle: for a finite union of closed intervals
the optimal countable cover in the content functional can be replaced by a
finite cover whose elements are hulls of consecutive components (moving a
cover element's endpoint to the nearest component endpoint it covers never
increases its diameter, and elements covering non-adjacent component
groups can be split without increasing cost because t -> t^alpha is
subadditive).  Dynamic programming over consecutive groupings is therefore
exact.

The planar estimators are labeled: dyadic-square covers give upper bounds,
the measure push-forward gives a sampled lower estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import SingularPoint
from .geometry import IntervalUnion


@dataclass(frozen=True)
class CoverSolution:
    """A witness cover together with its content value."""

    alpha: float
    value: float
    cover: tuple
    exact: bool

    def to_json_obj(self) -> dict:
        return {"alpha": self.alpha, "value": self.value, "exact": self.exact,
                "cover": [list(map(float, c)) for c in self.cover]}


def content_1d(union: IntervalUnion, alpha: float) -> CoverSolution:
    """Exact alpha-content of a finite interval union by grouping DP."""
    if union.is_empty:
        raise ValueError("content of an empty set")
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    comps = [(float(a), float(b)) for a, b in union.components]
    k = len(comps)
    # dp[j] = optimal value covering components 0..j-1
    dp = [0.0] + [math.inf] * k
    cut = [0] * (k + 1)
    for j in range(1, k + 1):
        right = comps[j - 1][1]
        for i in range(j):
            span = right - comps[i][0]
            cost = dp[i] + (span ** alpha if span > 0 else 0.0)
            if cost < dp[j]:
                dp[j] = cost
                cut[j] = i
    cover = []
    j = k
    while j > 0:
        i = cut[j]
        cover.append((comps[i][0], comps[j - 1][1]))
        j = i
    cover.reverse()
    return CoverSolution(alpha=alpha, value=dp[k], cover=tuple(cover), exact=True)


def content_1d_bruteforce(union: IntervalUnion, alpha: float) -> float:
    """Exhaustive enumeration over all partitions into consecutive groups.

    Exponential; the independent oracle for small component counts.
    """
    comps = [(float(a), float(b)) for a, b in union.components]
    k = len(comps)
    best = math.inf
    for mask in range(1 << max(k - 1, 0)):
        # bit i set = cut between component i and i+1
        value = 0.0
        start = 0
        for i in range(k):
            if i == k - 1 or (mask >> i) & 1:
                span = comps[i][1] - comps[start][0]
                value += span ** alpha if span > 0 else 0.0
                start = i + 1
        best = min(best, value)
    return best


def content_upper_2d(points: np.ndarray, radius: float, alpha: float,
                     scales: Sequence[float]) -> CoverSolution:
    """Upper bound for the content of the radius-neighborhood core of a point set.

    For each scale s the points are binned into axis-aligned squares of side
    s, each inflated by the sample radius; the reported value is the best
    over scales.  Any set within ``radius`` of the samples is covered by the
    inflated squares, so the value dominates its true content.
    """
    pts = np.asarray(points)
    if pts.size == 0:
        raise ValueError("content of an empty point set")
    if pts.dtype != complex:
        pts = pts[..., 0] + 1j * pts[..., 1]
    best_value = math.inf
    best_cover: tuple = ()
    best_scale = None
    for s in scales:
        ix = np.floor(np.real(pts) / s).astype(np.int64)
        iy = np.floor(np.imag(pts) / s).astype(np.int64)
        cells = set(zip(ix.tolist(), iy.tolist()))
        diam = math.sqrt(2.0) * (s + 2.0 * radius)
        value = len(cells) * diam ** alpha
        if value < best_value:
            best_value = value
            best_scale = s
            best_cover = tuple(sorted((cx * s - radius, cy * s - radius,
                                       s + 2 * radius) for cx, cy in cells))
    return CoverSolution(alpha=alpha, value=best_value, cover=best_cover,
                         exact=False)


@dataclass(frozen=True)
class PushforwardEstimate:
    """Sampled lower estimate for the content of a boundary image set."""

    alpha: float
    lower: float
    sup_ratio: float
    total_mass: float
    certified: bool = False

    def to_json_obj(self) -> dict:
        return {"alpha": self.alpha, "lower": self.lower,
                "sup_ratio": self.sup_ratio, "total_mass": self.total_mass,
                "certified": self.certified}


def pushforward_lower_2d(measure, entry, alpha: float,
                         ball_samples: int = 256, atoms: int = 2048,
                         seed: int = 7) -> PushforwardEstimate:
    """Mass-distribution lower estimate for the image of the measure's support.

    The measure is discretized into atoms along its carriers, pushed through
    the entry's boundary trace, and the growth ratio nu(B)/diam(B)^alpha is
    maximized over sampled disks centered at atoms with nearest-neighbor
    radii.  The returned lower bound is total/sup; disk sampling makes it an
    estimate, flagged non-certified.
    """
    carriers = measure.carriers
    total_len = float(sum(float(hi - lo) for lo, hi, _ in carriers))
    if total_len <= 0:
        raise ValueError("measure with zero-length support")
    positions = []
    masses = []
    for lo, hi, density in carriers:
        lo_f, hi_f, d_f = float(lo), float(hi), float(density)
        n = max(1, int(round(atoms * (hi_f - lo_f) / total_len)))
        xs = lo_f + (np.arange(n) + 0.5) * (hi_f - lo_f) / n
        positions.append(xs)
        masses.append(np.full(n, d_f * (hi_f - lo_f) / n))
    xs = np.concatenate(positions)
    ms = np.concatenate(masses)
    singular = np.array(entry.singular_for("f"), dtype=float)
    if singular.size and np.min(np.abs(xs[:, None] - singular[None, :])) == 0.0:
        raise SingularPoint("measure support touches a singular boundary point")
    ws = np.asarray(entry.boundary_trace(xs), dtype=complex)

    rng = np.random.default_rng(seed)
    centers_idx = rng.choice(len(ws), size=min(ball_samples, len(ws)),
                             replace=False)
    total = float(np.sum(ms))
    sup_ratio = 0.0
    order_cache = None
    for ci in centers_idx:
        dist = np.abs(ws - ws[ci])
        order = np.argsort(dist, kind="stable")
        cum = np.cumsum(ms[order])
        radii = dist[order]
        good = radii > 0
        ratios = cum[good] / (2.0 * radii[good]) ** alpha
        if ratios.size:
            sup_ratio = max(sup_ratio, float(np.max(ratios)))
    if sup_ratio == 0.0:
        return PushforwardEstimate(alpha=alpha, lower=0.0, sup_ratio=0.0,
                                   total_mass=total)
    return PushforwardEstimate(alpha=alpha, lower=total / sup_ratio,
                               sup_ratio=sup_ratio, total_mass=total)
