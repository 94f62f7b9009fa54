"""Numerical verification of weighted pointwise and integral Hardy inequalities.

The pointwise form bounds |u(x)| by d(x)^(1-beta/p) times the supremum
over r < 2 d(x) of averaged |grad u|^q with weight d^(q beta / p) over
B(x,r) intersected with the domain; the integral form compares
int |u|^p d^(beta-p) against int |grad u|^p d^beta.  Test functions are
Lipschitz surrogates with closed-form gradients (collar, radial and
product bumps); kinks carry measure zero and cell-center quadrature avoids
them.  The distance weight comes from a DomainApprox boundary polyline and
is inflated by one pitch on the right-hand side (conservative direction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (InequalityViolation, InvalidConfig,
                     NonIntegrableConfiguration, OutOfDomain)
from .transfer import DomainApprox


@dataclass(frozen=True)
class HardyConfig:
    p: float = 2.0
    beta: float = 0.0
    q: float | None = None        # defaults to (1 + p)/2
    radius_levels: int = 6        # dyadic radius grid r = 2 d(x) 2^-k
    radius_refine: int = 1        # log-subdivisions per dyadic step
    ball_cells: int = 12          # quadrature cells across a ball radius

    def __post_init__(self):
        if not (1.0 < self.p):
            raise InvalidConfig("p", "requires p > 1")
        if self.beta >= self.p - 1.0:
            raise InvalidConfig("beta", "requires beta < p - 1")
        q = self.q_value
        if not (1.0 < q < self.p):
            raise InvalidConfig("q", f"requires 1 < q < p, got {q}")

    @property
    def q_value(self) -> float:
        return (1.0 + self.p) / 2.0 if self.q is None else self.q

    def radius_grid(self, d_x: float) -> np.ndarray:
        """Nested geometric grid below 2 d(x); refining keeps earlier points."""
        m = self.radius_refine
        ks = np.arange(self.radius_levels * m + 1)
        return 2.0 * d_x * 2.0 ** (-ks / m) * (1.0 - 1e-9)


class TestFunction:
    """Lipschitz test function with closed-form modulus of gradient."""

    label = ""

    def value(self, pts: np.ndarray, domain: DomainApprox) -> np.ndarray:
        raise NotImplementedError

    def grad_abs(self, pts: np.ndarray, domain: DomainApprox) -> np.ndarray:
        raise NotImplementedError

    def validate(self, domain: DomainApprox) -> None:
        """Raise NonIntegrableConfiguration when not compactly supported."""


class CollarBump(TestFunction):
    """u = min(1, d(x)/eps): ramps from the boundary over a collar of width eps."""

    def __init__(self, eps: float):
        if eps <= 0:
            raise ValueError("collar width must be positive")
        self.eps = float(eps)
        self.label = f"collar({eps:g})"

    def value(self, pts, domain):
        return np.minimum(1.0, domain.distance(pts) / self.eps)

    def grad_abs(self, pts, domain):
        return np.where(domain.distance(pts) < self.eps, 1.0 / self.eps, 0.0)


class RadialBump(TestFunction):
    """u = max(0, 1 - |w - c|/rho), a cone supported on a disk inside the domain."""

    def __init__(self, center: complex, rho: float):
        if rho <= 0:
            raise ValueError("bump radius must be positive")
        self.center = complex(center)
        self.rho = float(rho)
        self.label = f"radial({self.center:g},{rho:g})"

    def validate(self, domain):
        d = float(domain.distance(self.center)[0])
        if d < self.rho:
            raise NonIntegrableConfiguration(
                f"radial bump support B({self.center}, {self.rho}) leaves the domain")

    def value(self, pts, domain):
        return np.maximum(0.0, 1.0 - np.abs(pts - self.center) / self.rho)

    def grad_abs(self, pts, domain):
        return np.where(np.abs(pts - self.center) < self.rho, 1.0 / self.rho, 0.0)


class ProductBump(TestFunction):
    """Product of coordinate tents supported on an axis-aligned rectangle."""

    def __init__(self, x0: float, x1: float, y0: float, y1: float):
        if not (x0 < x1 and y0 < y1):
            raise ValueError("degenerate rectangle")
        self.x0, self.x1, self.y0, self.y1 = map(float, (x0, x1, y0, y1))
        self.label = f"product({x0:g},{x1:g},{y0:g},{y1:g})"

    def validate(self, domain):
        corners = [complex(self.x0, self.y0), complex(self.x0, self.y1),
                   complex(self.x1, self.y0), complex(self.x1, self.y1)]
        for c in corners:
            if not domain.contains(c):
                raise NonIntegrableConfiguration(
                    f"product bump corner {c} outside the domain")

    def _tents(self, pts):
        x, y = np.real(pts), np.imag(pts)
        cx, hx = 0.5 * (self.x0 + self.x1), 0.5 * (self.x1 - self.x0)
        cy, hy = 0.5 * (self.y0 + self.y1), 0.5 * (self.y1 - self.y0)
        tx = np.maximum(0.0, 1.0 - np.abs(x - cx) / hx)
        ty = np.maximum(0.0, 1.0 - np.abs(y - cy) / hy)
        return tx, ty, hx, hy

    def value(self, pts, domain):
        tx, ty, _, _ = self._tents(pts)
        return tx * ty

    def grad_abs(self, pts, domain):
        tx, ty, hx, hy = self._tents(pts)
        inside = (tx > 0) & (ty > 0)
        gx = np.where(inside, ty / hx, 0.0)
        gy = np.where(inside, tx / hy, 0.0)
        return np.hypot(gx, gy)


def _contains_mask(domain: DomainApprox, pts: np.ndarray) -> np.ndarray:
    """Vectorized ray-casting parity test."""
    x, y = np.real(pts)[:, None], np.imag(pts)[:, None]
    ax, ay = np.real(domain._seg_a)[None, :], np.imag(domain._seg_a)[None, :]
    bx, by = np.real(domain._seg_b)[None, :], np.imag(domain._seg_b)[None, :]
    cond = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = ax + (y - ay) * (bx - ax) / (by - ay)
    crossings = np.sum(cond & (xs > x), axis=1)
    return (crossings % 2).astype(bool)


def pointwise_rhs(domain: DomainApprox, x: complex, cfg: HardyConfig,
                  tf: TestFunction) -> float:
    """d(x)^(1-beta/p) * sup_r (avg over B(x,r) cap Omega of |grad u|^q d^(q beta/p))^(1/q).

    Midpoint quadrature over square cells of side r / ball_cells; the
    distance weight is inflated by one boundary pitch (conservative).
    """
    if not domain.contains(x):
        raise OutOfDomain(f"sample point {x} outside the domain")
    d_x = float(domain.distance(x)[0])
    if d_x <= 0:
        raise OutOfDomain(f"sample point {x} on the boundary")
    q = cfg.q_value
    w_exp = q * cfg.beta / cfg.p
    sup_avg = 0.0
    for r in cfg.radius_grid(d_x):
        n = cfg.ball_cells
        h = 2.0 * r / n
        axis = -r + (np.arange(n) + 0.5) * h
        gx, gy = np.meshgrid(axis, axis)
        cells = (x + gx + 1j * gy).ravel()
        cells = cells[np.abs(cells - x) <= r]
        inside = _contains_mask(domain, cells)
        cells = cells[inside]
        if len(cells) == 0:
            continue
        dists = domain.distance(cells) + domain.pitch
        grad = tf.grad_abs(cells, domain)
        integrand = grad ** q * dists ** w_exp
        sup_avg = max(sup_avg, float(np.mean(integrand)))
    return d_x ** (1.0 - cfg.beta / cfg.p) * sup_avg ** (1.0 / q)


@dataclass(frozen=True)
class PointwiseReport:
    c_emp: float
    checked: int
    vacuous: int
    rows: tuple  # (x, y, |u|, rhs, ratio) per sampled point

    def to_json_obj(self) -> dict:
        return {"c_emp": self.c_emp, "checked": self.checked,
                "vacuous": self.vacuous}


def interior_samples(domain: DomainApprox, count: int, seed: int = 11,
                     margin: float = 1e-3) -> np.ndarray:
    """Deterministic interior sample points, away from the boundary."""
    rng = np.random.default_rng(seed)
    lo_x, hi_x = float(np.min(domain.boundary.real)), float(np.max(domain.boundary.real))
    lo_y, hi_y = float(np.min(domain.boundary.imag)), float(np.max(domain.boundary.imag))
    out: list[complex] = []
    while len(out) < count:
        pts = (rng.uniform(lo_x, hi_x, 4 * count)
               + 1j * rng.uniform(lo_y, hi_y, 4 * count))
        inside = _contains_mask(domain, pts)
        pts = pts[inside]
        pts = pts[domain.distance(pts) > margin]
        out.extend(pts.tolist())
    return np.array(out[:count])


def verify_pointwise(domain: DomainApprox, cfg: HardyConfig,
                     tf_suite: Sequence[TestFunction],
                     sample_points: np.ndarray) -> PointwiseReport:
    """Empirical constant max |u(x)| / RHS(x); vacuous pairs excluded.

    RHS = 0 with u(x) != 0 raises InequalityViolation (a discretization
    bug: the inequality forbids it).
    """
    c_emp = 0.0
    checked = 0
    vacuous = 0
    rows = []
    for tf in tf_suite:
        tf.validate(domain)
        for x in sample_points:
            lhs = float(abs(tf.value(np.array([x]), domain)[0]))
            rhs = pointwise_rhs(domain, complex(x), cfg, tf)
            if rhs == 0.0:
                if lhs > 1e-12:
                    raise InequalityViolation(
                        f"u({x}) = {lhs} with vanishing right-hand side")
                vacuous += 1
                rows.append((x.real, x.imag, lhs, rhs, 0.0))
                continue
            checked += 1
            ratio = lhs / rhs
            rows.append((x.real, x.imag, lhs, rhs, ratio))
            c_emp = max(c_emp, ratio)
    return PointwiseReport(c_emp=c_emp, checked=checked, vacuous=vacuous,
                           rows=tuple(rows))


@dataclass(frozen=True)
class IntegralReport:
    max_ratio: float
    per_function: tuple  # (label, lhs, rhs, ratio)

    def to_json_obj(self) -> dict:
        return {"max_ratio": self.max_ratio,
                "per_function": [[l, a, b, r] for l, a, b, r in self.per_function]}


def verify_integral(domain: DomainApprox, p: float, beta: float,
                    tf_suite: Sequence[TestFunction],
                    pitch: float = 1 / 64) -> IntegralReport:
    """Cell-quadrature ratio of int |u|^p d^(beta-p) to int |grad u|^p d^beta."""
    if beta >= p - 1:
        raise InvalidConfig("beta", "requires beta < p - 1")
    lo_x, hi_x = float(np.min(domain.boundary.real)), float(np.max(domain.boundary.real))
    lo_y, hi_y = float(np.min(domain.boundary.imag)), float(np.max(domain.boundary.imag))
    nx = max(4, int(math.ceil((hi_x - lo_x) / pitch)))
    ny = max(4, int(math.ceil((hi_y - lo_y) / pitch)))
    hx, hy = (hi_x - lo_x) / nx, (hi_y - lo_y) / ny
    gx = lo_x + (np.arange(nx) + 0.5) * hx
    gy = lo_y + (np.arange(ny) + 0.5) * hy
    cells = (gx[:, None] + 1j * gy[None, :]).ravel()
    inside = _contains_mask(domain, cells)
    cells = cells[inside]
    dists = domain.distance(cells)
    ok = dists > 0
    cells, dists = cells[ok], dists[ok]
    area = hx * hy
    per = []
    max_ratio = 0.0
    for tf in tf_suite:
        tf.validate(domain)
        vals = np.abs(tf.value(cells, domain))
        grads = tf.grad_abs(cells, domain)
        lhs = float(np.sum(vals ** p * dists ** (beta - p)) * area)
        rhs = float(np.sum(grads ** p * dists ** beta) * area)
        ratio = lhs / rhs if rhs > 0 else (math.inf if lhs > 0 else 0.0)
        per.append((tf.label, lhs, rhs, ratio))
        max_ratio = max(max_ratio, ratio)
    return IntegralReport(max_ratio=max_ratio, per_function=tuple(per))
