"""Harmonic functions on the upper half-plane with certified gradient bounds.

Three families of sources provide a function u with a proven constant A
such that sup Im(z) |grad u(z)| <= A:

* a closed-form conformal catalog (u = log|f'| for explicit univalent f,
  gradient through the analytic logarithmic derivative, per-entry sharp
  constants with the derivation recorded on the entry);
* finite lacunary series, analytic with an elementary closed-form bound;
* dyadic martingale models, piecewise interpolations of node values whose
  certificate is the discrete per-scale step bound.

Conformal entries additionally expose f, f' and the boundary trace.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .errors import (CertificateViolation, OutOfDomain, SingularPoint,
                     UnsupportedSource)
from .geometry import DyadicInterval, as_fraction

#: Certified constant reported for sources with identically vanishing gradient.
MIN_CERTIFIED_A = 1e-6

_AUDIT_POINTS = 10_000
_AUDIT_SLACK = 1e-9


def _asarray(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


class ConformalEntry:
    """Closed-form univalent map on the upper half-plane.

    Subclasses provide f, f', the analytic logarithmic derivative g' with
    g = log f', the singular real points per evaluator, and a proven
    gradient constant with its derivation string.
    """

    entry_id: str = ""
    kind = "conformal"
    certified_A: float = 0.0
    derivation: str = ""
    params: dict = {}

    # --- singular sets on the real line, per evaluator -------------------
    def singular_for(self, which: str) -> tuple[float, ...]:
        return ()

    def f(self, z):
        raise NotImplementedError

    def f_prime(self, z):
        raise NotImplementedError

    def g_prime(self, z):
        """(log f')' — gradient of u is (Re g', -Im g')."""
        raise NotImplementedError

    # --- generic evaluators ----------------------------------------------
    def u(self, z):
        arr, scalar = _asarray(z)
        self._check_domain(arr)
        val = np.log(np.abs(self.f_prime(arr)))
        return float(val) if scalar else val

    def grad_u(self, z):
        arr, scalar = _asarray(z)
        self._check_domain(arr)
        gp = self.g_prime(arr)
        gx, gy = np.real(gp), -np.imag(gp)
        if scalar:
            return float(gx), float(gy)
        return gx, gy

    def boundary_trace(self, x):
        arr = np.asarray(x, dtype=float)
        for s in self.singular_for("f"):
            if np.any(arr == s):
                raise SingularPoint(f"{self.entry_id}: boundary trace at x={s}")
        val = self.f(arr.astype(complex))
        return complex(val) if np.ndim(x) == 0 else val

    def _check_domain(self, arr):
        if np.any(np.imag(arr) <= 0):
            raise OutOfDomain("evaluation requires Im(z) > 0")

    def to_json_obj(self) -> dict:
        return {"kind": "conformal", "id": self.entry_id, "params": self.params}

    def __repr__(self):
        return f"<ConformalEntry {self.entry_id} {self.params} A={self.certified_A}>"


class MobiusToDisk(ConformalEntry):
    """f(z) = (z - i)/(z + i), the half-plane onto the unit disk.

    u = log 2 - 2 log|z + i| and |g'(z)| = 2/|z + i|, so
    Im(z)|grad u| = 2y/|z+i| <= 2y/(y+1) < 2: certified A = 2.
    """

    entry_id = "mobius_to_disk"
    certified_A = 2.0
    derivation = "Im(z)*2/|z+i| <= 2y/(y+1) < 2, sharp as y -> infinity"
    params: dict = {}

    def f(self, z):
        return (z - 1j) / (z + 1j)

    def f_prime(self, z):
        return 2j / (z + 1j) ** 2

    def g_prime(self, z):
        return -2.0 / (z + 1j)


class PowerSector(ConformalEntry):
    """f(z) = z^a (principal branch), half-plane onto a sector of angle a*pi.

    Univalent exactly for 0 < a <= 2.  u = log a + (a-1) log|z| and
    |g'| = |a-1|/|z| <= |a-1|/Im(z): certified A = |a-1| (sharp on the
    imaginary axis).
    """

    entry_id = "power_sector"

    def __init__(self, a: float):
        if not (0 < a <= 2):
            raise ValueError("power_sector requires 0 < a <= 2 for univalence")
        self.a = float(a)
        self.params = {"a": self.a}
        self.certified_A = max(abs(self.a - 1.0), MIN_CERTIFIED_A)
        self.derivation = "|g'| = |a-1|/|z| and |z| >= Im(z); identity case floored"

    def singular_for(self, which: str) -> tuple[float, ...]:
        if self.a == 1.0:
            return ()
        return (0.0,) if which in ("u", "f_prime") else ()

    def f(self, z):
        return np.power(z, self.a)

    def f_prime(self, z):
        return self.a * np.power(z, self.a - 1.0)

    def g_prime(self, z):
        return (self.a - 1.0) / z


class PolynomialPerturbation(ConformalEntry):
    """f(z) = z + c z^2 with real c; univalent on the half-plane for every real c.

    Injectivity: f(z1) = f(z2) forces z1 + z2 = -1/c, impossible for two
    points with positive imaginary part.  |g'| = 2|c|/|1 + 2cz| and
    |1 + 2cz| >= 2|c| Im(z), so certified A = 1 (any c != 0).
    """

    entry_id = "polynomial_perturbation"

    def __init__(self, c: float):
        self.c = float(c)
        self.params = {"c": self.c}
        self.certified_A = 1.0 if self.c != 0 else MIN_CERTIFIED_A
        self.derivation = "Im(z)*2|c|/|1+2cz| <= 2|c|y/(2|c|y) = 1"

    def singular_for(self, which: str) -> tuple[float, ...]:
        if self.c == 0 or which not in ("u",):
            return ()
        return (-1.0 / (2 * self.c),)

    def f(self, z):
        return z + self.c * z * z

    def f_prime(self, z):
        return 1.0 + 2.0 * self.c * z

    def g_prime(self, z):
        return 2.0 * self.c / (1.0 + 2.0 * self.c * z)


class SlitHalfplane(ConformalEntry):
    """f(z) = i sqrt(1 - z^2), half-plane onto the half-plane minus a vertical slit.

    The principal square root keeps 1 - z^2 off the cut for Im(z) > 0; the
    slit is the segment (0, i] and the finite boundary branch points are
    x = +-1.  g'(z) = 1/z + z/(1 - z^2); a four-region case analysis
    (near 0, near +-1, |z| >= 2, remainder) bounds Im(z)|g'| by 2.
    """

    entry_id = "slit_halfplane"
    certified_A = 2.0
    derivation = ("|g'| = 1/(|z||z-1||z+1|); split at |z+-1|<=1/2, |z|<=1/2, "
                  "|z|>=2 and the remainder; each region gives <= 2")
    params: dict = {}

    def singular_for(self, which: str) -> tuple[float, ...]:
        if which in ("f", "f_prime"):
            return (-1.0, 1.0)
        if which == "u":
            return (-1.0, 0.0, 1.0)
        return ()

    def f(self, z):
        return 1j * np.sqrt(1.0 - z * z)

    def f_prime(self, z):
        return -1j * z / np.sqrt(1.0 - z * z)

    def g_prime(self, z):
        return 1.0 / z + z / (1.0 - z * z)


class AffineMap(ConformalEntry):
    """f(z) = a z + b with real a > 0, real b: half-plane automorphism.

    u = log a is constant, so the certified constant is the configured floor.
    """

    entry_id = "affine"

    def __init__(self, a: float, b: float):
        if a <= 0:
            raise ValueError("affine requires a > 0")
        self.a, self.b = float(a), float(b)
        self.params = {"a": self.a, "b": self.b}
        self.certified_A = MIN_CERTIFIED_A
        self.derivation = "gradient of the constant log a vanishes identically"

    def f(self, z):
        return self.a * z + self.b

    def f_prime(self, z):
        return self.a * np.ones_like(np.asarray(z, dtype=complex))

    def g_prime(self, z):
        return np.zeros_like(np.asarray(z, dtype=complex))


class RebasedEntry(ConformalEntry):
    """Catalog entry precomposed with z -> x0 + y0 z.

    Normalizes an arbitrary anchor point to i: the rebased map has
    f~(i) = f(x0 + i y0) and u~(z) = u(x0 + y0 z) + log y0.  The gradient
    bound is invariant under half-plane affine automorphisms, so the
    certified constant carries over unchanged.
    """

    def __init__(self, inner: ConformalEntry, x0: float, y0: float):
        if y0 <= 0:
            raise ValueError("rebase requires y0 > 0")
        self.inner = inner
        self.x0, self.y0 = float(x0), float(y0)
        self.entry_id = f"rebased({inner.entry_id})"
        self.params = {"inner": inner.to_json_obj(), "x0": self.x0, "y0": self.y0}
        self.certified_A = inner.certified_A
        self.derivation = inner.derivation + "; invariant under affine rebase"

    def _pull(self, z):
        return self.x0 + self.y0 * np.asarray(z, dtype=complex)

    def singular_for(self, which: str) -> tuple[float, ...]:
        return tuple((s - self.x0) / self.y0 for s in self.inner.singular_for(which))

    def f(self, z):
        return self.inner.f(self._pull(z))

    def f_prime(self, z):
        return self.y0 * self.inner.f_prime(self._pull(z))

    def g_prime(self, z):
        return self.y0 * self.inner.g_prime(self._pull(z))

    def to_json_obj(self) -> dict:
        return {"kind": "conformal", "id": "rebased",
                "params": {"inner": self.inner.to_json_obj(),
                           "x0": self.x0, "y0": self.y0}}


class LacunarySeries:
    """u(z) = sum_k c_k exp(-2 pi 2^k y) cos(2 pi 2^k x), a finite analytic series.

    g(z) = sum_k c_k exp(2 pi i 2^k z) gives y|g'(z)| <= sum |c_k| * sup_t t e^-t
    = sum |c_k| / e, the certified constant (attained in the single-term case).
    """

    kind = "series"

    def __init__(self, coeffs: Iterable[float]):
        self.coeffs = tuple(float(c) for c in coeffs)
        total = sum(abs(c) for c in self.coeffs)
        self.certified_A = max(total / math.e, MIN_CERTIFIED_A)
        self.derivation = "sum |c_k| sup_y 2 pi 2^k y exp(-2 pi 2^k y) = sum|c_k|/e"
        self.params = {"coeffs": list(self.coeffs)}

    def _check_domain(self, arr):
        if np.any(np.imag(arr) <= 0):
            raise OutOfDomain("evaluation requires Im(z) > 0")

    def u(self, z):
        arr, scalar = _asarray(z)
        self._check_domain(arr)
        val = np.zeros(arr.shape, dtype=float)
        for k, c in enumerate(self.coeffs):
            w = 2.0 * math.pi * (2 ** k)
            val += c * np.exp(-w * np.imag(arr)) * np.cos(w * np.real(arr))
        return float(val) if scalar else val

    def grad_u(self, z):
        arr, scalar = _asarray(z)
        self._check_domain(arr)
        gp = np.zeros(arr.shape, dtype=complex)
        for k, c in enumerate(self.coeffs):
            w = 2.0 * math.pi * (2 ** k)
            gp += c * 1j * w * np.exp(1j * w * arr)
        gx, gy = np.real(gp), -np.imag(gp)
        if scalar:
            return float(gx), float(gy)
        return gx, gy

    def to_json_obj(self) -> dict:
        return {"kind": "series", "params": {"coeffs": list(self.coeffs)}}

    def __repr__(self):
        return f"<LacunarySeries {self.coeffs} A={self.certified_A}>"


# ---------------------------------------------------------------------------
# Martingale models
# ---------------------------------------------------------------------------


class IncrementRule:
    """Assignment of one increment to every dyadic node below the root."""

    rule_id = ""

    def increment(self, depth: int, index: int) -> float:
        raise NotImplementedError

    def subtree_flat(self, depth: int, index: int) -> bool:
        """True when every increment strictly below (depth, index) vanishes."""
        return False

    def max_magnitude(self) -> float:
        raise NotImplementedError

    def to_json_obj(self) -> dict:
        raise NotImplementedError


class ZeroRule(IncrementRule):
    rule_id = "zero"

    def increment(self, depth, index):
        return 0.0

    def subtree_flat(self, depth, index):
        return True

    def max_magnitude(self):
        return 0.0

    def to_json_obj(self):
        return {"rule": "zero"}


class ExplicitIncrements(IncrementRule):
    """Finite dictionary of (depth, index) -> increment; zero elsewhere."""

    rule_id = "explicit"

    def __init__(self, table: dict):
        self.table = {(int(d), int(i)): float(v) for (d, i), v in table.items()}
        self._max_depth = max((d for d, _ in self.table), default=0)

    def increment(self, depth, index):
        return self.table.get((depth, index), 0.0)

    def subtree_flat(self, depth, index):
        for (d, i), v in self.table.items():
            if v != 0.0 and d > depth and (i >> (d - depth)) == index:
                return False
        return True

    def max_magnitude(self):
        return max((abs(v) for v in self.table.values()), default=0.0)

    def to_json_obj(self):
        return {"rule": "explicit",
                "table": [[d, i, v] for (d, i), v in sorted(self.table.items())]}


class AlternatingRule(IncrementRule):
    """Even-index children get +step, odd-index children -step, at every depth.

    Balanced at every node, so node values equal the average of their
    children's values and anchor paths are plus/minus-step walks.
    """

    rule_id = "alternating"

    def __init__(self, step: float):
        self.step = float(step)

    def increment(self, depth, index):
        if depth == 0:
            return 0.0
        return self.step if index % 2 == 0 else -self.step

    def max_magnitude(self):
        return abs(self.step)

    def to_json_obj(self):
        return {"rule": "alternating", "step": self.step}


class AlternatingFlatRule(AlternatingRule):
    """Alternating rule with one all-zero subtree hanging at a fixed address.

    Columns through the flat subtree freeze, creating a genuine good set
    inside an otherwise oscillating model.
    """

    rule_id = "alternating_flat"

    def __init__(self, step: float, flat_prefix: tuple[int, ...]):
        super().__init__(step)
        self.flat_prefix = tuple(int(b) for b in flat_prefix)
        self._flat_depth = len(self.flat_prefix)
        self._flat_index = 0
        for b in self.flat_prefix:
            self._flat_index = (self._flat_index << 1) | b

    def _under_flat(self, depth, index) -> bool:
        return (depth > self._flat_depth
                and (index >> (depth - self._flat_depth)) == self._flat_index)

    def increment(self, depth, index):
        if self._under_flat(depth, index):
            return 0.0
        return super().increment(depth, index)

    def subtree_flat(self, depth, index):
        if depth < self._flat_depth:
            return False
        return (index >> (depth - self._flat_depth)) == self._flat_index

    def to_json_obj(self):
        return {"rule": "alternating_flat", "step": self.step,
                "flat_prefix": list(self.flat_prefix)}


class BalancedRandomRule(IncrementRule):
    """Seeded balanced signs: each sibling pair receives (+s, -s) or (-s, +s).

    The orientation comes from a stable hash of (seed, depth, parent index),
    so models are reproducible across platforms and runs.
    """

    rule_id = "balanced_random"

    def __init__(self, step: float, seed: int):
        self.step = float(step)
        self.seed = int(seed)

    def _orient(self, depth: int, parent_index: int) -> int:
        h = hashlib.blake2b(f"{self.seed}:{depth}:{parent_index}".encode(),
                            digest_size=8).digest()
        return 1 if h[0] % 2 == 0 else -1

    def increment(self, depth, index):
        if depth == 0:
            return 0.0
        sign = self._orient(depth, index // 2)
        return sign * self.step if index % 2 == 0 else -sign * self.step

    def max_magnitude(self):
        return abs(self.step)

    def to_json_obj(self):
        return {"rule": "balanced_random", "step": self.step, "seed": self.seed}


_RULES = {
    "zero": lambda obj: ZeroRule(),
    "explicit": lambda obj: ExplicitIncrements(
        {(d, i): v for d, i, v in obj["table"]}),
    "alternating": lambda obj: AlternatingRule(obj["step"]),
    "alternating_flat": lambda obj: AlternatingFlatRule(
        obj["step"], tuple(obj["flat_prefix"])),
    "balanced_random": lambda obj: BalancedRandomRule(obj["step"], obj["seed"]),
}


class MartingaleModel:
    """Dyadic martingale on Q(base): node values interpolated between scales.

    A node's value is the root value plus the increments along its address
    path.  For z = x + iy with |I_(k+1)| < y <= |I_k| the evaluation blends
    the chain values at depths k and k+1 linearly in log2(y), so u equals
    the node value exactly at every anchor.  The certified constant is the
    per-scale step bound.
    """

    kind = "martingale"

    def __init__(self, base: DyadicInterval, rule: IncrementRule,
                 step_bound: float, root_value: float = 0.0):
        mag = rule.max_magnitude()
        if mag > step_bound + 1e-15:
            raise ValueError("increment magnitude exceeds the declared step bound")
        self.base = base
        self.rule = rule
        self.step_bound = float(step_bound)
        self.root_value = float(root_value)
        self.certified_A = max(self.step_bound, MIN_CERTIFIED_A)
        self.derivation = "discrete certificate: every increment bounded by the step"
        self.params = {"rule": rule.to_json_obj(), "step_bound": self.step_bound}

    # --- node values -------------------------------------------------------
    def anchor_value(self, node: DyadicInterval) -> float:
        """Value at the node's anchor; node must sit in the base's tree."""
        if (node.base_left, node.base_length) != (self.base.base_left,
                                                  self.base.base_length):
            raise OutOfDomain("node is not on the base subdivision tree")
        v = self.root_value
        for d in range(1, node.depth + 1):
            v += self.rule.increment(d, node.index >> (node.depth - d))
        return v

    def _column_index(self, x: float, depth: int) -> int:
        rel = (x - float(self.base.left)) / float(self.base.length)
        idx = int(rel * (1 << depth))
        return min(max(idx, 0), (1 << depth) - 1)

    def subtree_flat(self, node: DyadicInterval) -> bool:
        return self.rule.subtree_flat(node.depth, node.index)

    def _band(self, y: float, L: float) -> int:
        """Band index k with L 2^-(k+1) < y <= L 2^-k."""
        k = int(math.floor(math.log2(L / y)))
        while k > 0 and y > L / 2 ** k:
            k -= 1
        while y <= L / 2 ** (k + 1):
            k += 1
        return k

    def _band_values(self, x: float, k: int) -> tuple[float, float]:
        """Chain values at depths k (upper) and k+1 (lower) over column x."""
        idx_deep = self._column_index(x, k + 1)
        v_deep = self.root_value
        for d in range(1, k + 2):
            v_deep += self.rule.increment(d, idx_deep >> (k + 1 - d))
        v_up = v_deep - self.rule.increment(k + 1, idx_deep)
        return v_up, v_deep

    # --- evaluation ---------------------------------------------------------
    def u(self, z):
        arr, scalar = _asarray(z)
        flat = np.ravel(arr)
        res = np.empty(flat.shape, dtype=float)
        L = float(self.base.length)
        bl, br = float(self.base.left), float(self.base.right)
        for n, zz in enumerate(flat):
            x, y = zz.real, zz.imag
            if not (bl <= x <= br) or y <= 0 or y > L:
                raise OutOfDomain(f"point {zz} outside Q(base)")
            if y == L:
                res[n] = self.root_value
                continue
            k = self._band(y, L)
            v_up, v_deep = self._band_values(x, k)
            t = math.log2(y / (L / 2 ** (k + 1)))  # 0 at lower scale, 1 at upper
            res[n] = v_deep + t * (v_up - v_deep)
        out = res.reshape(arr.shape) if arr.shape else res[0]
        return float(out) if scalar else out

    def grad_u(self, z):
        """Piecewise gradient: zero horizontally, scale blend vertically."""
        arr, scalar = _asarray(z)
        flat = np.ravel(arr)
        gx = np.zeros(flat.shape, dtype=float)
        gy = np.empty(flat.shape, dtype=float)
        L = float(self.base.length)
        for n, zz in enumerate(flat):
            x, y = zz.real, zz.imag
            if y <= 0 or y > L:
                raise OutOfDomain(f"point {zz} outside Q(base)")
            k = self._band(y, L) if y < L else 0
            v_up, v_deep = self._band_values(x, k)
            gy[n] = (v_up - v_deep) / (y * math.log(2.0))
        if scalar:
            return float(gx[0]), float(gy[0])
        return gx.reshape(arr.shape), gy.reshape(arr.shape)

    def to_json_obj(self) -> dict:
        return {"kind": "martingale",
                "base": self.base.to_json_obj(),
                "step_bound": self.step_bound,
                "root_value": self.root_value,
                "rule": self.rule.to_json_obj()}

    def __repr__(self):
        return f"<MartingaleModel {self.rule.to_json_obj()} B={self.step_bound}>"


HarmonicSource = ConformalEntry | LacunarySeries | MartingaleModel


# ---------------------------------------------------------------------------
# Catalog and free-function API
# ---------------------------------------------------------------------------


def catalog_entry(entry_id: str, **params) -> ConformalEntry:
    if entry_id == "mobius_to_disk":
        return MobiusToDisk()
    if entry_id == "power_sector":
        return PowerSector(params["a"])
    if entry_id == "polynomial_perturbation":
        return PolynomialPerturbation(params["c"])
    if entry_id == "slit_halfplane":
        return SlitHalfplane()
    if entry_id == "affine":
        return AffineMap(params["a"], params["b"])
    raise KeyError(f"unknown catalog entry '{entry_id}'")


CATALOG_IDS = ("mobius_to_disk", "power_sector", "polynomial_perturbation",
               "slit_halfplane", "affine")


def source_from_json_obj(obj: dict) -> HarmonicSource:
    kind = obj["kind"]
    if kind == "conformal":
        if obj["id"] == "rebased":
            inner = source_from_json_obj(obj["params"]["inner"])
            return RebasedEntry(inner, obj["params"]["x0"], obj["params"]["y0"])
        return catalog_entry(obj["id"], **obj.get("params", {}))
    if kind == "series":
        return LacunarySeries(obj["params"]["coeffs"])
    if kind == "martingale":
        base = DyadicInterval.from_json_obj(obj["base"])
        rule = _RULES[obj["rule"]["rule"]](obj["rule"])
        return MartingaleModel(base, rule, obj["step_bound"],
                               obj.get("root_value", 0.0))
    raise KeyError(f"unknown source kind '{kind}'")


def eval_u(src: HarmonicSource, z):
    """u(z); log|f'(z)| for conformal entries."""
    if isinstance(src, ConformalEntry):
        arr, _ = _asarray(z)
        for s in src.singular_for("u"):
            if np.any(arr == s):
                raise SingularPoint(f"{src.entry_id}: u singular at {s}")
    return src.u(z)


def eval_grad_u(src: HarmonicSource, z):
    """Gradient (u_x, u_y) at z."""
    if isinstance(src, ConformalEntry):
        arr, _ = _asarray(z)
        for s in src.singular_for("u"):
            if np.any(arr == s):
                raise SingularPoint(f"{src.entry_id}: grad u singular at {s}")
    return src.grad_u(z)


def eval_map(src: HarmonicSource, which: str, z):
    """f, f' or the boundary trace of a conformal entry."""
    if not isinstance(src, ConformalEntry):
        raise UnsupportedSource("eval_map requires a conformal catalog entry")
    if which == "boundary_trace":
        return src.boundary_trace(z)
    if which not in ("f", "f_prime"):
        raise ValueError(f"unknown evaluator '{which}'")
    arr, scalar = _asarray(z)
    for s in src.singular_for(which):
        if np.any(arr == s):
            raise SingularPoint(f"{src.entry_id}: {which} singular at {s}")
    val = src.f(arr) if which == "f" else src.f_prime(arr)
    return complex(val) if scalar else val


def martingale_extend(model: MartingaleModel, z):
    """Interpolated martingale value at z in Q(base)."""
    if not isinstance(model, MartingaleModel):
        raise UnsupportedSource("martingale_extend requires a MartingaleModel")
    return model.u(z)


def _audit_points(rng: np.random.Generator, count: int):
    x = rng.uniform(-20.0, 20.0, count)
    y = np.exp(rng.uniform(math.log(1e-6), math.log(1e3), count))
    return x + 1j * y


def certify_bloch_bound(src: HarmonicSource, audit_points: int = _AUDIT_POINTS,
                        seed: int = 20_24) -> float:
    """Certified A, audited.

    Analytic sources: the closed-form constant is checked against
    Im(z)|grad u| at quasi-random points.  Martingale models: the discrete
    certificate (per-scale increments within the step bound) is checked on
    sampled nodes.  Any failure raises CertificateViolation, which signals
    a bug rather than a data condition.
    """
    rng = np.random.default_rng(seed)
    A = src.certified_A
    if isinstance(src, MartingaleModel):
        depths = rng.integers(1, 24, audit_points)
        for d in np.unique(depths):
            count = int(np.sum(depths == d))
            idxs = rng.integers(0, 2 ** int(d), count)
            for i in idxs:
                inc = src.rule.increment(int(d), int(i))
                if abs(inc) > A * (1 + _AUDIT_SLACK):
                    raise CertificateViolation(
                        f"martingale increment {inc} exceeds {A} at ({d},{i})")
        return A
    z = _audit_points(rng, audit_points)
    if isinstance(src, ConformalEntry):
        for s in src.singular_for("u"):
            z = z[np.abs(z - s) > 1e-9]
    gx, gy = src.grad_u(z)
    lhs = np.imag(z) * np.hypot(gx, gy)
    if np.any(lhs > A * (1 + _AUDIT_SLACK)):
        worst = float(np.max(lhs))
        raise CertificateViolation(
            f"gradient audit failed: Im(z)|grad u| reached {worst} > {A}")
    return A
