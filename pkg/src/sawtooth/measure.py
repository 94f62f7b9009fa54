"""Tree-indexed redistributed measure and its growth certificate.

The measure starts as normalized length on the base and is redistributed
level by level: each refined bad interval spreads its mass uniformly over
the next generation's carriers (frozen good sets of good members, full
intervals of bad members), multiplying densities by at most 400 per level.
All masses, lengths and densities are exact rationals, so conservation and
growth checks are certificates rather than samples wherever the query
interval is dyadic.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .builder import GenerationNode, GenerationTree
from .errors import CertificateViolation, DegenerateCarrier, GrowthViolation
from .geometry import SQRT2, IntervalUnion, as_fraction

#: Per-level density multiplier cap: carriers keep >= 1/400 of parent length.
DENSITY_BASE = 400

#: Growth bound constant from the covering argument (4 + 1 adjacent pieces).
GROWTH_CONSTANT = 5

#: Exponent scale in the band index: |J| in [2^(-M(j+1)/s), 2^(-Mj/s)], s = 6 sqrt 2.
BAND_SCALE = 6.0 * SQRT2


@dataclass(frozen=True)
class Carrier:
    lo: Fraction
    hi: Fraction
    density: Fraction
    level: int

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mass(self) -> Fraction:
        return self.density * self.length


class FrostmanMeasure:
    """Piecewise-constant-density measure supported on the stage-n core set."""

    def __init__(self, carriers: list[Carrier], base_length: Fraction,
                 level: int, base_m: float, warnings: tuple[str, ...] = ()):
        self._carriers = sorted(carriers, key=lambda c: c.lo)
        self._los = [c.lo for c in self._carriers]
        self._his = [c.hi for c in self._carriers]
        self.base_length = base_length
        self.level = level
        self.base_m = base_m
        self.warnings = warnings

    @property
    def carriers(self) -> list[tuple[Fraction, Fraction, Fraction]]:
        return [(c.lo, c.hi, c.density) for c in self._carriers]

    @property
    def carrier_records(self) -> list[Carrier]:
        return list(self._carriers)

    @property
    def total_mass(self) -> Fraction:
        return sum((c.mass for c in self._carriers), Fraction(0))

    @property
    def support(self) -> IntervalUnion:
        return IntervalUnion([(c.lo, c.hi) for c in self._carriers])

    @property
    def uniform_density(self) -> Fraction | None:
        densities = {c.density for c in self._carriers}
        return next(iter(densities)) if len(densities) == 1 else None

    def mass_of(self, lo, hi) -> Fraction:
        """Exact integral of the density over [lo, hi]."""
        lo, hi = as_fraction(lo), as_fraction(hi)
        if hi < lo:
            lo, hi = hi, lo
        i = bisect_left(self._his, lo)
        total = Fraction(0)
        while i < len(self._carriers) and self._los[i] < hi:
            c = self._carriers[i]
            a, b = max(c.lo, lo), min(c.hi, hi)
            if a < b:
                total += c.density * (b - a)
            i += 1
        return total

    def carriers_overlapping(self, lo: Fraction, hi: Fraction) -> list[Carrier]:
        i = bisect_left(self._his, lo)
        out = []
        while i < len(self._carriers) and self._los[i] < hi:
            c = self._carriers[i]
            if max(c.lo, lo) < min(c.hi, hi):
                out.append(c)
            i += 1
        return out

    def to_json_obj(self) -> dict:
        return {"level": self.level,
                "base_m": self.base_m,
                "base_length": str(self.base_length),
                "carriers": [[str(c.lo), str(c.hi), str(c.density), c.level]
                             for c in self._carriers],
                "warnings": list(self.warnings)}


def build_measure(tree: GenerationTree, n: int) -> FrostmanMeasure:
    """Redistribute unit mass down to stage n.

    Good children freeze their share at the level they appear; unrefined or
    incomplete bad nodes keep uniform density over their interval (matching
    the stage-n core set).  Mass is conserved exactly at every step and
    densities never exceed 400^level over the normalized base.
    """
    if n > tree.n_max:
        raise ValueError(f"stage {n} beyond built depth {tree.n_max}")
    base_len = tree.base.length
    carriers: list[Carrier] = []
    warnings: list[str] = list(tree.warnings)

    def spread(node: GenerationNode, mass: Fraction) -> None:
        density_cap = Fraction(DENSITY_BASE) ** node.level / base_len
        if node.is_good and node.good_inner is not None:
            glen = node.good_inner.total_length
            if glen == 0:
                raise DegenerateCarrier("good node with zero-length good set")
            density = mass / glen
            for lo, hi in node.good_inner.components:
                carriers.append(Carrier(lo, hi, density, node.level))
            return
        terminal = node.level == n or not node.children
        if terminal:
            density = mass / node.interval.length
            if node.level < n:
                warnings.append(
                    f"unrefined bad interval at level {node.level} kept as carrier")
            if density > density_cap:
                raise CertificateViolation(
                    f"density {float(density):.6g} exceeds 400^{node.level} "
                    "over the normalized base")
            carriers.append(Carrier(node.interval.left, node.interval.right,
                                    density, node.level))
            return
        lengths = []
        for child in node.children:
            if child.is_good and child.good_inner is not None:
                lengths.append(child.good_inner.total_length)
            else:
                lengths.append(child.interval.length)
        total = sum(lengths, Fraction(0))
        if total == 0:
            raise DegenerateCarrier("redistribution over zero-length carriers")
        for child, carrier_len in zip(node.children, lengths):
            spread(child, mass * carrier_len / total)

    spread(tree.root, Fraction(1))
    mu = FrostmanMeasure(carriers, base_len, n, tree.base_m, tuple(warnings))
    if mu.total_mass != 1:
        raise DegenerateCarrier("mass not conserved during redistribution")
    return mu


def mass_of(mu: FrostmanMeasure, lo, hi) -> Fraction:
    return mu.mass_of(lo, hi)


def band_index(length: float, threshold_m: float) -> int:
    """Band j with 2^(-M(j+1)/(6 sqrt 2)) <= |J| <= 2^(-M j /(6 sqrt 2))."""
    if length <= 0:
        raise ValueError("band of a degenerate interval")
    if length >= 1.0:
        return 0
    return max(0, int(math.floor(-math.log2(length) * BAND_SCALE / threshold_m)))


@dataclass(frozen=True)
class GrowthReport:
    max_ratio_linear: float      # max mu(J) / (400^j |J|); bound GROWTH_CONSTANT
    max_ratio_alpha: float       # max mu(J) / |J|^(1-kappa); bound GROWTH_CONSTANT
    kappa: float                 # 6 sqrt 2 log2(400) / M
    dyadic_checked: int
    random_checked: int
    sup_alpha_dyadic: float      # certified sup over dyadic J of mu(J)/|J|^alpha
    alpha: float

    def to_json_obj(self) -> dict:
        return {"max_ratio_linear": self.max_ratio_linear,
                "max_ratio_alpha": self.max_ratio_alpha,
                "kappa": self.kappa,
                "dyadic_checked": self.dyadic_checked,
                "random_checked": self.random_checked,
                "sup_alpha_dyadic": self.sup_alpha_dyadic,
                "alpha": self.alpha}


def _check_bounds(mass: Fraction, lo: Fraction, hi: Fraction, threshold_m: float,
                  kappa: float) -> tuple[float, float]:
    length = hi - lo
    len_f = float(length)
    j = band_index(len_f, threshold_m)
    bound_linear = Fraction(GROWTH_CONSTANT) * Fraction(DENSITY_BASE) ** j * length
    if mass > bound_linear:
        raise GrowthViolation(
            f"mu(J) = {float(mass):.6g} exceeds 5*400^{j}*|J|",
            (float(lo), float(hi)))
    mass_f = float(mass)
    ratio_linear = mass_f / (float(DENSITY_BASE) ** j * len_f)
    log_bound = (1.0 - kappa) * math.log(len_f)
    if mass_f > 0 and math.log(mass_f) > math.log(GROWTH_CONSTANT) + log_bound + 1e-12:
        raise GrowthViolation(
            f"mu(J) = {mass_f:.6g} exceeds 5|J|^(1-kappa)",
            (float(lo), float(hi)))
    ratio_alpha = mass_f / math.exp(log_bound) if mass_f > 0 else 0.0
    return ratio_linear, ratio_alpha


def verify_growth(mu: FrostmanMeasure, alpha: float, threshold_m: float,
                  sample_count: int = 10_000, seed: int = 515) -> GrowthReport:
    """Exhaustive dyadic check (with containment pruning) plus random intervals.

    The dyadic walk descends only while an interval meets more than one
    carrier: inside a single carrier the density is constant, so deeper
    dyadic descendants inherit the bound from their ancestor and the
    alpha-ratio only decreases.  This turns the dyadic claim into a
    certificate at every scale.  Violations raise GrowthViolation with the
    witness interval.
    """
    kappa = BAND_SCALE * math.log2(DENSITY_BASE) / threshold_m
    support = mu.support
    if support.is_empty:
        raise DegenerateCarrier("growth check on an empty measure")
    lo0, hi0 = mu._carriers[0].lo, mu._carriers[-1].hi
    base_lo, base_hi = lo0, hi0
    max_lin = 0.0
    max_alp = 0.0
    sup_alpha = 0.0
    dyadic_checked = 0
    stack = [(base_lo, base_hi)]
    while stack:
        lo, hi = stack.pop()
        overlapping = mu.carriers_overlapping(lo, hi)
        if not overlapping:
            continue
        mass = mu.mass_of(lo, hi)
        if mass == 0:
            continue
        dyadic_checked += 1
        rl, ra = _check_bounds(mass, lo, hi, threshold_m, kappa)
        max_lin, max_alp = max(max_lin, rl), max(max_alp, ra)
        sup_alpha = max(sup_alpha, float(mass) / float(hi - lo) ** alpha)
        single = (len(overlapping) == 1 and overlapping[0].lo <= lo
                  and overlapping[0].hi >= hi)
        if not single:
            mid = (lo + hi) / 2
            stack.append((lo, mid))
            stack.append((mid, hi))

    rng = np.random.default_rng(seed)
    span = float(base_hi - base_lo)
    min_len = min(float(c.length) for c in mu._carriers)
    random_checked = 0
    lengths = np.exp(rng.uniform(math.log(max(min_len, 1e-12)),
                                 math.log(span), sample_count))
    positions = rng.uniform(0.0, 1.0, sample_count)
    for ell, pos in zip(lengths, positions):
        lo = base_lo + as_fraction(float(pos)) * (base_hi - base_lo - as_fraction(float(ell)))
        hi = lo + as_fraction(float(ell))
        mass = mu.mass_of(lo, hi)
        if mass == 0:
            continue
        random_checked += 1
        rl, ra = _check_bounds(mass, lo, hi, threshold_m, kappa)
        max_lin, max_alp = max(max_lin, rl), max(max_alp, ra)
    return GrowthReport(max_ratio_linear=max_lin, max_ratio_alpha=max_alp,
                        kappa=kappa, dyadic_checked=dyadic_checked,
                        random_checked=random_checked,
                        sup_alpha_dyadic=sup_alpha, alpha=alpha)


@dataclass(frozen=True)
class ContentLowerBound:
    """Certified content lower bound through the mass distribution principle."""

    alpha: float
    lower: float
    c_certified: float
    c_dyadic: float
    c_uniform_exact: float | None
    y0: float
    c_of_alpha: float       # paper-form constant: lower = y0^alpha / c_of_alpha

    def to_json_obj(self) -> dict:
        return {"alpha": self.alpha, "lower": self.lower,
                "c_certified": self.c_certified, "c_dyadic": self.c_dyadic,
                "c_uniform_exact": self.c_uniform_exact,
                "y0": self.y0, "c_of_alpha": self.c_of_alpha}


def _uniform_exact_sup(mu: FrostmanMeasure, alpha: float) -> float | None:
    """Exact sup of mu(J)/|J|^alpha for a single-density measure.

    Candidate maximizers are hulls of consecutive support components:
    extending an endpoint across covered length increases the ratio, so an
    optimal J snaps to component endpoints.
    """
    d = mu.uniform_density
    if d is None:
        return None
    comps = mu.support.components
    best = 0.0
    for i in range(len(comps)):
        covered = Fraction(0)
        for j in range(i, len(comps)):
            covered += comps[j][1] - comps[j][0]
            span = float(comps[j][1] - comps[i][0])
            if span > 0:
                best = max(best, float(d * covered) / span ** alpha)
    return best


def content_lower_bound(mu: FrostmanMeasure, alpha: float,
                        growth: GrowthReport) -> ContentLowerBound:
    """1/c where c certifies mu(J) <= c |J|^alpha for every interval J.

    The dyadic sup from the exhaustive walk extends to arbitrary intervals
    through the two-adjacent-dyadic cover (factor 2^(1+alpha)); for
    uniform-density measures the exact endpoint-snapped sup is used instead.
    """
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0,1)")
    c_dyadic = growth.sup_alpha_dyadic
    c_cert = 2.0 ** (1.0 + alpha) * c_dyadic
    c_exact = _uniform_exact_sup(mu, alpha)
    if c_exact is not None:
        c_cert = min(c_cert, c_exact)
    if growth.kappa <= 1.0 - alpha:
        # certified envelope: mu(J) <= 5 |J|^(1-kappa) <= 5 |J|^alpha on |J| <= 1
        c_cert = min(c_cert, float(GROWTH_CONSTANT))
    y0 = float(mu.base_length)
    lower = 1.0 / c_cert
    return ContentLowerBound(alpha=alpha, lower=lower, c_certified=c_cert,
                             c_dyadic=c_dyadic, c_uniform_exact=c_exact,
                             y0=y0, c_of_alpha=c_cert * y0 ** alpha)
