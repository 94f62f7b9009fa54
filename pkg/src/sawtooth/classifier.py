"""Good-set computation, good/bad classification and maximal families.

For a source u with certified gradient bound A and a working threshold m,
the good set of an interval I collects the columns x whose vertical
oscillation sup |u(x+iy) - u(z_I)| over y in [y_floor, |I|] stays within
m + A*sqrt(2).  Analytic sources get a two-sided bracket from log-spaced
samples plus Lipschitz slack; martingale models admit an exact evaluation
because column suprema are maxima of node values along the address chain.

An interval is good when at least 1/100 of its length is certified good;
indeterminate brackets classify bad (only certified-good columns may enter
the core set).  Maximal families collect the maximal dyadic descendants
whose anchor value deviates by at least m with the prescribed sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (CertificateViolation, DegenerateRange, UnsupportedSource)
from .geometry import SQRT2, DyadicInterval, IntervalUnion
from .sources import (ConformalEntry, HarmonicSource, LacunarySeries,
                      MartingaleModel)

#: An interval is good when its good set fills at least this fraction of it.
GOOD_FRACTION = Fraction(1, 100)

#: Complete families carry at least this fraction of the parent's length.
FAMILY_FRACTION = Fraction(1, 4)


@dataclass(frozen=True)
class ClassifierParams:
    """Sampling knobs shared by the classifier operations."""

    x_cells: int = 256           # power of two; analytic-bracket x resolution
    y_ratio: float = 2 ** 0.25   # log-spacing ratio of vertical samples
    y_floor_exp: int = 10        # y_floor = |I| * 2^-y_floor_exp
    max_family_depth: int = 12   # family search cap relative to the parent
    m0_factor: float = 100.0     # heuristic threshold floor M0 = factor * A
    m0_override: float | None = None  # e.g. 0 for balanced martingale models

    def __post_init__(self):
        if self.x_cells & (self.x_cells - 1) or self.x_cells <= 0:
            raise ValueError("x_cells must be a power of two")
        if self.y_ratio <= 1.0:
            raise ValueError("y_ratio must exceed 1")
        if self.y_floor_exp < 1:
            raise DegenerateRange("y_floor must lie strictly below |I|")

    def m0(self, certified_a: float) -> float:
        if self.m0_override is not None:
            return self.m0_override
        return self.m0_factor * certified_a


@dataclass(frozen=True)
class GoodSetEstimate:
    """Two-sided bracket of the good set restricted to y >= y_floor."""

    interval: DyadicInterval
    inner: IntervalUnion
    outer: IntervalUnion
    y_floor: Fraction
    threshold: float
    local_m: float
    exact: bool

    def to_json_obj(self) -> dict:
        return {"interval": self.interval.to_json_obj(),
                "inner": self.inner.to_json_obj(),
                "outer": self.outer.to_json_obj(),
                "y_floor": str(self.y_floor),
                "threshold": self.threshold,
                "local_m": self.local_m,
                "exact": self.exact}


@dataclass(frozen=True)
class ClassificationResult:
    status: str  # "good" | "bad"
    indeterminate: bool
    estimate: GoodSetEstimate

    @property
    def is_good(self) -> bool:
        return self.status == "good"


@dataclass(frozen=True)
class MaximalFamily:
    """Maximal dyadic descendants with anchor deviation >= m of one sign."""

    parent: DyadicInterval
    sign: int
    members: tuple[DyadicInterval, ...]
    deltas: tuple[float, ...]
    truncated: bool
    incomplete: bool
    parent_value: float

    @property
    def total_length(self) -> Fraction:
        return sum((m.length for m in self.members), Fraction(0))

    def to_json_obj(self) -> dict:
        return {"parent": self.parent.to_json_obj(),
                "sign": self.sign,
                "members": [m.to_json_obj() for m in self.members],
                "deltas": list(self.deltas),
                "truncated": self.truncated,
                "incomplete": self.incomplete}


def _source_u(src: HarmonicSource):
    if isinstance(src, MartingaleModel):
        return lambda z: src.u(z)
    return lambda z: src.u(z)


def _anchor_values(src: HarmonicSource, nodes: list[DyadicInterval]) -> np.ndarray:
    if isinstance(src, MartingaleModel):
        return np.array([src.anchor_value(n) for n in nodes])
    anchors = np.array([n.anchor for n in nodes])
    return np.asarray(src.u(anchors), dtype=float)


def _good_set_martingale(interval: DyadicInterval, model: MartingaleModel,
                         local_m: float, params: ClassifierParams) -> GoodSetEstimate:
    """Exact good set: column suprema are maxima of chain node values."""
    a = model.certified_A
    thr = local_m + a * SQRT2
    depth_cap = params.y_floor_exp
    y_floor = interval.length / 2 ** depth_cap
    v_ref = model.anchor_value(interval)
    step = model.step_bound
    cells: list[tuple[Fraction, Fraction]] = []

    def visit(node: DyadicInterval, value: float, dev: float, rel: int):
        if dev > thr:
            return  # every deeper column supremum already exceeds the threshold
        if rel == depth_cap or model.subtree_flat(node):
            cells.append((node.left, node.right))
            return
        if dev + step * (depth_cap - rel) <= thr:
            cells.append((node.left, node.right))  # cannot exit before the floor
            return
        for child in node.children():
            v = value + model.rule.increment(child.depth, child.index)
            visit(child, v, max(dev, abs(v - v_ref)), rel + 1)

    visit(interval, v_ref, 0.0, 0)
    union = IntervalUnion(cells)
    return GoodSetEstimate(interval=interval, inner=union, outer=union,
                           y_floor=y_floor, threshold=thr, local_m=local_m,
                           exact=True)


def _good_set_analytic(interval: DyadicInterval, src: HarmonicSource,
                       local_m: float, params: ClassifierParams) -> GoodSetEstimate:
    a = src.certified_A
    thr = local_m + a * SQRT2
    length = float(interval.length)
    y_floor_frac = interval.length / 2 ** params.y_floor_exp
    y_floor = float(y_floor_frac)
    if y_floor >= length:
        raise DegenerateRange("y_floor at or above |I|")
    n_samples = int(math.ceil(math.log(length / y_floor)
                              / math.log(params.y_ratio))) + 1
    ys = np.geomspace(length, y_floor, n_samples + 1)
    h = length / params.x_cells
    xs = float(interval.left) + (np.arange(params.x_cells) + 0.5) * h
    z_ref = interval.anchor
    grid = xs[:, None] + 1j * ys[None, :]
    dev = np.abs(np.asarray(src.u(grid)) - float(src.u(z_ref)))

    # Bracket per band [ys[j+1], ys[j]]: samples at both ends, Lipschitz slack
    # A * (h/2 / y_low + log(ratio)/2) for interior points of the cell column.
    log_ratio = np.log(ys[:-1] / ys[1:])
    slack = a * (0.5 * h / ys[1:] + 0.5 * log_ratio)
    band_dev = np.maximum(dev[:, :-1], dev[:, 1:])
    upper = np.max(band_dev + slack[None, :], axis=1)
    lower = np.max(dev, axis=1)

    h_frac = interval.length / params.x_cells
    inner_cells = []
    outer_cells = []
    for i in range(params.x_cells):
        lo = interval.left + i * h_frac
        hi = lo + h_frac
        if upper[i] <= thr:
            inner_cells.append((lo, hi))
        if lower[i] <= thr:
            outer_cells.append((lo, hi))
    return GoodSetEstimate(interval=interval,
                           inner=IntervalUnion(inner_cells),
                           outer=IntervalUnion(outer_cells),
                           y_floor=y_floor_frac, threshold=thr, local_m=local_m,
                           exact=False)


def good_set(interval: DyadicInterval, src: HarmonicSource, local_m: float,
             params: ClassifierParams = ClassifierParams()) -> GoodSetEstimate:
    """Bracket (exact for martingale models) of the good set of the interval."""
    if local_m <= 0:
        raise ValueError("threshold must be positive")
    if isinstance(src, MartingaleModel):
        return _good_set_martingale(interval, src, local_m, params)
    return _good_set_analytic(interval, src, local_m, params)


def classify(interval: DyadicInterval, src: HarmonicSource, local_m: float,
             params: ClassifierParams = ClassifierParams()) -> ClassificationResult:
    """Good iff the certified-good columns fill >= |I|/100 (boundary inclusive)."""
    est = good_set(interval, src, local_m, params)
    quota = interval.length * GOOD_FRACTION
    if est.inner.total_length >= quota:
        return ClassificationResult("good", False, est)
    if est.outer.total_length < quota:
        return ClassificationResult("bad", False, est)
    return ClassificationResult("bad", True, est)


def maximal_family(interval: DyadicInterval, src: HarmonicSource, local_m: float,
                   sign: int,
                   params: ClassifierParams = ClassifierParams()) -> MaximalFamily:
    """Breadth-first selection of maximal descendants with signed deviation >= m.

    An interval enters the family when sign*(u(z_J) - u(z_I)) >= m and no
    strict ancestor below I did; the search truncates at the configured
    relative depth.  Members are checked against the deviation band
    [m, m + A*sqrt(2)] and the exact scale bound |J| <= 2^(-m/(A sqrt 2))|I|.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    a = src.certified_A
    v_ref = float(_anchor_values(src, [interval])[0])
    members: list[DyadicInterval] = []
    deltas: list[float] = []
    truncated = False
    frontier = list(interval.children())
    rel = 1
    while frontier:
        values = _anchor_values(src, frontier)
        next_frontier: list[DyadicInterval] = []
        for node, v in zip(frontier, values):
            delta = float(v) - v_ref
            if sign * delta >= local_m:
                members.append(node)
                deltas.append(delta)
            elif rel < params.max_family_depth:
                next_frontier.extend(node.children())
            else:
                truncated = True
        frontier = next_frontier
        rel += 1

    band_hi = local_m + a * SQRT2
    tol = 1e-9 * max(1.0, band_hi)
    min_rel_depth = local_m / (a * SQRT2)
    for node, delta in zip(members, deltas):
        if abs(delta) > band_hi + tol:
            raise CertificateViolation(
                f"family member deviation {delta} outside [{local_m}, {band_hi}]")
        if (node.depth - interval.depth) < min_rel_depth:
            raise CertificateViolation(
                f"member at relative depth {node.depth - interval.depth} violates "
                f"the scale bound 2^(-m/(A sqrt 2)) = 2^-{min_rel_depth:.3f}")

    total = sum((m.length for m in members), Fraction(0))
    incomplete = truncated and total < interval.length * FAMILY_FRACTION
    return MaximalFamily(parent=interval, sign=sign, members=tuple(members),
                         deltas=tuple(deltas), truncated=truncated,
                         incomplete=incomplete, parent_value=v_ref)


@dataclass(frozen=True)
class GreenResidual:
    """Defect of the discrete mean-value identity at one interval."""

    delta: float
    quadrature_error: float
    tolerance: float

    @property
    def within_tolerance(self) -> bool:
        return abs(self.delta) <= self.tolerance


#: The identity's defect is bounded by a constant multiple of A; twice the
#: flux bound absorbs the bounded-oscillation correction on the cut edges.
GREEN_TOLERANCE_FACTOR = 20.0


def _composite_simpson(f, lo: float, hi: float, cells: int) -> float:
    cells = max(2, cells + (cells % 2))
    xs = np.linspace(lo, hi, cells + 1)
    w = np.ones(cells + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((hi - lo) / (3 * cells) * np.sum(w * f(xs)))


def green_residual(interval: DyadicInterval, members, src: HarmonicSource,
                   quadrature_cells: int = 512,
                   y_floor_exp: int = 20) -> GreenResidual:
    """delta = u(z_I) - sum u(z_J)|J|/|I| - (1/|I|) int_{I minus union} u(x + i floor).

    The boundary integral runs at height |I| * 2^-y_floor_exp by composite
    Simpson quadrature; the attached error estimate is the difference
    against half resolution.  Martingale sources are rejected.
    """
    if isinstance(src, MartingaleModel):
        raise UnsupportedSource("green residual requires an analytic source")
    a = src.certified_A
    y_floor = float(interval.length) * 2.0 ** (-y_floor_exp)
    member_list = list(members)
    covered = IntervalUnion([(m.left, m.right) for m in member_list])
    complement = covered.complement_within(interval.left, interval.right)
    total_len = float(interval.length)

    def trace(xs: np.ndarray) -> np.ndarray:
        return np.asarray(src.u(xs + 1j * y_floor), dtype=float)

    integral = 0.0
    integral_half = 0.0
    comp_total = float(complement.total_length)
    for lo, hi in complement.components:
        lo_f, hi_f = float(lo), float(hi)
        if hi_f <= lo_f:
            continue
        cells = max(4, int(quadrature_cells * (hi_f - lo_f) / max(comp_total, 1e-300)))
        integral += _composite_simpson(trace, lo_f, hi_f, cells)
        integral_half += _composite_simpson(trace, lo_f, hi_f, max(2, cells // 2))
    quad_err = abs(integral - integral_half)

    u_ref = float(src.u(interval.anchor))
    member_term = 0.0
    if member_list:
        anchors = np.array([m.anchor for m in member_list])
        vals = np.asarray(src.u(anchors), dtype=float)
        weights = np.array([float(m.length) for m in member_list]) / total_len
        member_term = float(np.sum(vals * weights))
    delta = u_ref - member_term - integral / total_len
    return GreenResidual(delta=delta, quadrature_error=quad_err,
                         tolerance=GREEN_TOLERANCE_FACTOR * a)
