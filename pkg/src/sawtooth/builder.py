"""Recursive generation construction over a base interval.

Starting from the base, each bad interval is refined through the maximal
family of the sign prescribed by its level parity: ascending deviations at
even levels, descending at odd ones, so consecutive steps cancel.  From
the second level on, the working threshold is recalibrated inside
[M - 6 sqrt 2, M + 6 sqrt 2] so that anchor values keep returning to the
root reference instead of accumulating drift.  Good intervals freeze their
certified good columns as terminal core pieces.

The core set at stage n collects all frozen good sets of levels <= n
together with the level-n bad intervals (the outer approximation of the
infinite intersection); the sawtooth region sits above it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .classifier import (FAMILY_FRACTION, ClassifierParams, GoodSetEstimate,
                         MaximalFamily, classify, maximal_family)
from .errors import (CalibrationOutOfRange, CertificateViolation, InvalidConfig,
                     ScaleUnderflow)
from .geometry import SQRT2, DyadicInterval, IntervalUnion, SawtoothRegion
from .sources import HarmonicSource, MartingaleModel

#: Calibration window half-width; also the even-level drift unit (x2).
CALIBRATION_HALF_WIDTH = 6.0 * SQRT2

#: Every refined generation retains at least 1/400 of its parent's length.
GENERATION_FRACTION = Fraction(1, 400)

#: Even-level anchor drift stays within twice the calibration half-width.
EVEN_DRIFT_CAP = 12.0 * SQRT2

_CAL_TOL = 1e-9


def minimum_threshold(alpha: float) -> float:
    """Smallest admissible M for a target content exponent alpha in (0,1)."""
    if not (0 < alpha < 1):
        raise InvalidConfig("alpha", "must lie in (0, 1)")
    return CALIBRATION_HALF_WIDTH * math.log2(400.0) / (1.0 - alpha)


def recalibrate_threshold(level: int, u_node: float, u_root: float,
                          base_m: float) -> float:
    """Local threshold solving the calibration identity for the node's parity.

    Even levels (next step ascends): u(z_I) + M' = u(z_root) + M.
    Odd levels (next step descends): u(z_I) - M' = u(z_root).
    Levels 0 and 1 use M unchanged.  Raises CalibrationOutOfRange when the
    solution leaves [M - 6 sqrt 2, M + 6 sqrt 2], which indicates the drift
    invariant failed upstream.
    """
    if level < 2:
        return base_m
    if level % 2 == 0:
        m_prime = base_m + u_root - u_node
    else:
        m_prime = u_node - u_root
    if not (base_m - CALIBRATION_HALF_WIDTH - _CAL_TOL
            <= m_prime <= base_m + CALIBRATION_HALF_WIDTH + _CAL_TOL):
        raise CalibrationOutOfRange(
            f"recalibrated threshold {m_prime:.6g} outside "
            f"[{base_m - CALIBRATION_HALF_WIDTH:.6g}, "
            f"{base_m + CALIBRATION_HALF_WIDTH:.6g}] at level {level}")
    return m_prime


@dataclass(frozen=True)
class GenerationNode:
    """One examined interval: either a frozen good terminal or a refined bad node."""

    interval: DyadicInterval
    level: int
    local_m: float
    u_anchor: float
    status: str                      # "good" | "bad"
    good_inner: IntervalUnion | None
    children: tuple["GenerationNode", ...]
    sign_for_children: int | None
    indeterminate: bool
    family_truncated: bool
    family_incomplete: bool
    stop_reason: str | None          # None | "good" | "level_cap" | "empty_family"

    @property
    def is_good(self) -> bool:
        return self.status == "good"

    @property
    def is_refined(self) -> bool:
        return self.status == "bad" and bool(self.children)

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def to_json_obj(self) -> dict:
        return {
            "interval": self.interval.to_json_obj(),
            "level": self.level,
            "local_m": self.local_m,
            "u_anchor": self.u_anchor,
            "status": self.status,
            "good_inner": None if self.good_inner is None
            else self.good_inner.to_json_obj(),
            "sign_for_children": self.sign_for_children,
            "indeterminate": self.indeterminate,
            "family_truncated": self.family_truncated,
            "family_incomplete": self.family_incomplete,
            "stop_reason": self.stop_reason,
            "children": [c.to_json_obj() for c in self.children],
        }


@dataclass(frozen=True)
class LevelAggregate:
    level: int
    node_count: int
    good_length: Fraction
    bad_length: Fraction


@dataclass(frozen=True)
class GenerationTree:
    root: GenerationNode
    base: DyadicInterval
    base_m: float
    alpha: float
    n_max: int
    test_mode: bool
    u_root: float
    source_fingerprint: str
    max_even_drift: float
    warnings: tuple[str, ...]

    def nodes_at_level(self, level: int) -> list[GenerationNode]:
        return [n for n in self.root.walk() if n.level == level]

    def max_level(self) -> int:
        return max(n.level for n in self.root.walk())

    def level_aggregates(self) -> list[LevelAggregate]:
        out = []
        for lv in range(self.max_level() + 1):
            nodes = self.nodes_at_level(lv)
            good = sum((n.good_inner.total_length for n in nodes
                        if n.is_good and n.good_inner is not None), Fraction(0))
            bad = sum((n.interval.length for n in nodes if not n.is_good),
                      Fraction(0))
            out.append(LevelAggregate(lv, len(nodes), good, bad))
        return out

    def to_json_obj(self) -> dict:
        return {
            "base": self.base.to_json_obj(),
            "M": self.base_m,
            "alpha": self.alpha,
            "n_max": self.n_max,
            "test_mode": self.test_mode,
            "u_root": self.u_root,
            "source_fingerprint": self.source_fingerprint,
            "max_even_drift": self.max_even_drift,
            "warnings": list(self.warnings),
            "root": self.root.to_json_obj(),
        }


def _sign_for_level(level: int) -> int:
    """Ascending families at even levels, descending at odd ones."""
    return 1 if level % 2 == 0 else -1


def build(src: HarmonicSource, base: DyadicInterval, alpha: float, base_m: float,
          n_max: int, params: ClassifierParams = ClassifierParams(),
          test_mode: bool = False) -> GenerationTree:
    """Run the generation construction to level n_max.

    Rejects M below the alpha-dependent minimum unless test_mode permits
    small thresholds for combinatorial exercise (lemma preconditions are
    then only reported, not certified).
    """
    m_min = minimum_threshold(alpha)
    if base_m < m_min and not test_mode:
        raise InvalidConfig(
            "M", f"{base_m} below minimum {m_min:.3f} for alpha={alpha} "
            "(pass test_mode to exercise small thresholds)")
    if n_max < 0:
        raise InvalidConfig("n_max", "must be nonnegative")

    u_root = float(_anchor_value(src, base))
    warnings: list[str] = []
    max_even_drift = 0.0

    def construct(interval: DyadicInterval, level: int) -> GenerationNode:
        nonlocal max_even_drift
        if float(interval.length) <= 0.0:
            raise ScaleUnderflow(level)
        u_node = float(_anchor_value(src, interval))
        drift = u_node - u_root
        if level >= 2 and level % 2 == 0:
            max_even_drift = max(max_even_drift, abs(drift))
            if abs(drift) > EVEN_DRIFT_CAP + _CAL_TOL:
                raise CertificateViolation(
                    f"even-level anchor drift {drift:.6g} exceeds "
                    f"{EVEN_DRIFT_CAP:.6g} at level {level}")
        local_m = recalibrate_threshold(level, u_node, u_root, base_m)
        result = classify(interval, src, local_m, params)
        if result.is_good:
            return GenerationNode(
                interval=interval, level=level, local_m=local_m,
                u_anchor=u_node, status="good",
                good_inner=result.estimate.inner, children=(),
                sign_for_children=None, indeterminate=result.indeterminate,
                family_truncated=False, family_incomplete=False,
                stop_reason="good")
        if level == n_max:
            return GenerationNode(
                interval=interval, level=level, local_m=local_m,
                u_anchor=u_node, status="bad", good_inner=None, children=(),
                sign_for_children=None, indeterminate=result.indeterminate,
                family_truncated=False, family_incomplete=False,
                stop_reason="level_cap")
        sign = _sign_for_level(level)
        family = maximal_family(interval, src, local_m, sign, params)
        if not family.members:
            warnings.append(f"empty family under level-{level} interval "
                            f"[{interval.left},{interval.right}]")
            return GenerationNode(
                interval=interval, level=level, local_m=local_m,
                u_anchor=u_node, status="bad", good_inner=None, children=(),
                sign_for_children=sign, indeterminate=result.indeterminate,
                family_truncated=family.truncated,
                family_incomplete=True, stop_reason="empty_family")
        if family.incomplete:
            warnings.append(f"family below 1/4 mass under level-{level} interval "
                            f"[{interval.left},{interval.right}] (truncated)")
            return GenerationNode(
                interval=interval, level=level, local_m=local_m,
                u_anchor=u_node, status="bad", good_inner=None, children=(),
                sign_for_children=sign, indeterminate=result.indeterminate,
                family_truncated=True, family_incomplete=True,
                stop_reason="incomplete_family")
        children = tuple(construct(member, level + 1) for member in family.members)
        node = GenerationNode(
            interval=interval, level=level, local_m=local_m, u_anchor=u_node,
            status="bad", good_inner=None, children=children,
            sign_for_children=sign, indeterminate=result.indeterminate,
            family_truncated=family.truncated, family_incomplete=False,
            stop_reason=None)
        _check_generation_mass(node)
        return node

    root = construct(base, 0)
    fingerprint = json.dumps(src.to_json_obj(), sort_keys=True)
    return GenerationTree(root=root, base=base, base_m=base_m, alpha=alpha,
                          n_max=n_max, test_mode=test_mode, u_root=u_root,
                          source_fingerprint=fingerprint,
                          max_even_drift=max_even_drift,
                          warnings=tuple(warnings))


def _anchor_value(src: HarmonicSource, interval: DyadicInterval) -> float:
    if isinstance(src, MartingaleModel):
        return src.anchor_value(interval)
    return float(src.u(interval.anchor))


def _successor_length(child: GenerationNode) -> Fraction:
    if child.is_good and child.good_inner is not None:
        return child.good_inner.total_length
    return child.interval.length


def _check_generation_mass(node: GenerationNode) -> None:
    """Complete families keep at least 1/400 of the parent in the next generation."""
    total = sum((_successor_length(c) for c in node.children), Fraction(0))
    if total < node.interval.length * GENERATION_FRACTION:
        raise CertificateViolation(
            f"next-generation mass {float(total):.6g} below 1/400 of parent "
            f"{float(node.interval.length):.6g}")


def extract_core_set(tree: GenerationTree, n: int) -> IntervalUnion:
    """Core set at stage n: frozen good sets (levels <= n) plus level-n bad
    intervals, together with unrefined bad leaves above level n."""
    if n > tree.n_max:
        raise ValueError(f"stage {n} beyond built depth {tree.n_max}")
    pieces: list[tuple[Fraction, Fraction]] = []
    for node in tree.root.walk():
        if node.level > n:
            continue
        if node.is_good and node.level <= n and node.good_inner is not None:
            pieces.extend(node.good_inner.components)
        elif node.status == "bad":
            terminal = node.level == n or not node.children
            if terminal:
                pieces.append((node.interval.left, node.interval.right))
    return IntervalUnion(pieces)


def extract_sawtooth(tree: GenerationTree, n: int) -> SawtoothRegion:
    return SawtoothRegion.over(tree.base, extract_core_set(tree, n))


@dataclass(frozen=True)
class DistortionReport:
    measured_max: float
    bound: float
    slack: float
    sample_count: int

    @property
    def passed(self) -> bool:
        return self.measured_max <= self.bound + self.slack

    def to_json_obj(self) -> dict:
        return {"measured_max": self.measured_max, "bound": self.bound,
                "slack": self.slack, "passed": self.passed,
                "sample_count": self.sample_count}


def verify_distortion(tree: GenerationTree, src: HarmonicSource, n: int,
                      y_global_floor: float, x_samples: int = 512,
                      y_ratio: float = 2 ** 0.25) -> DistortionReport:
    """Max |u(w) - u(z_root)| over sampled sawtooth points with y >= floor.

    Passes when the measured maximum stays within 2M + 30 plus the sampling
    slack A*(h/(2 y_floor) + log(ratio)/2).
    """
    region = extract_sawtooth(tree, n)
    core = region.core
    y0 = float(region.y0)
    if y_global_floor <= 0 or y_global_floor >= y0:
        raise ValueError("y_global_floor must lie in (0, y0)")
    a = src.certified_A
    h = (float(tree.base.right) - float(tree.base.left)) / x_samples
    xs = float(tree.base.left) + (np.arange(x_samples) + 0.5) * h
    n_levels = int(math.ceil(math.log(y0 / y_global_floor) / math.log(y_ratio))) + 1
    ys = np.geomspace(y0, y_global_floor, n_levels)
    dist = core.distance_array(xs)
    grid = xs[:, None] + 1j * ys[None, :]
    mask = (ys[None, :] >= dist[:, None]) & (ys[None, :] < y0 + 1e-12)
    pts = grid[mask]
    vals = np.asarray(src.u(pts), dtype=float)
    measured = float(np.max(np.abs(vals - tree.u_root))) if len(vals) else 0.0
    slack = a * (0.5 * h / y_global_floor + 0.5 * math.log(y_ratio))
    bound = 2.0 * tree.base_m + 30.0
    return DistortionReport(measured_max=measured, bound=bound, slack=slack,
                            sample_count=int(mask.sum()))
