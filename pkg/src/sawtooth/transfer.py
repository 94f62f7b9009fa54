"""Image-domain geometry: John constants, content transfer, end-to-end runs.

The sawtooth region maps to the image domain through a catalog entry; its
boundary polyline (exact on the pre-image side, densified and mapped on the
image side) backs a distance-to-boundary evaluator with pitch-bounded
error.  John constants are measured along canonical curves: the straight
segment to the center where it stays inside, otherwise the dyadic
staircase through anchor points.  For John purposes the ceiling of the
sawtooth is treated as interior (the region extends upward past the cap),
so the center anchor carries positive distance; side walls and the lower
sawtooth graph form the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .builder import (GenerationTree, build, extract_core_set, extract_sawtooth,
                      verify_distortion)
from .classifier import ClassifierParams
from .content import (CoverSolution, PushforwardEstimate, content_1d,
                      content_upper_2d, pushforward_lower_2d)
from .errors import CurveEscape, SingularPoint
from .geometry import DyadicInterval, IntervalUnion, SawtoothRegion
from .measure import (ContentLowerBound, FrostmanMeasure, build_measure,
                      content_lower_bound, verify_growth)
from .sources import ConformalEntry, RebasedEntry


def _segment_distances(points: np.ndarray, seg_a: np.ndarray,
                       seg_b: np.ndarray) -> np.ndarray:
    """Min distance from each point to a polyline given by segment endpoints."""
    p = points[:, None]
    a, b = seg_a[None, :], seg_b[None, :]
    ab = b - a
    denom = np.abs(ab) ** 2
    denom = np.where(denom == 0, 1.0, denom)
    t = np.clip(((p - a) * np.conj(ab)).real / denom, 0.0, 1.0)
    proj = a + t * ab
    return np.min(np.abs(p - proj), axis=1)


class DomainApprox:
    """Domain described by a boundary polyline with a distance evaluator.

    The evaluator error is bounded by the boundary sampling pitch, recorded
    on the instance.
    """

    def __init__(self, boundary: np.ndarray, pitch: float, closed: bool = True):
        boundary = np.asarray(boundary, dtype=complex)
        if closed and boundary[0] != boundary[-1]:
            boundary = np.append(boundary, boundary[0])
        self.boundary = boundary
        self.pitch = float(pitch)
        self._seg_a = boundary[:-1]
        self._seg_b = boundary[1:]

    @classmethod
    def disk(cls, center: complex = 0.0, radius: float = 1.0,
             vertices: int = 512) -> "DomainApprox":
        ang = np.linspace(0.0, 2.0 * math.pi, vertices + 1)
        boundary = center + radius * np.exp(1j * ang)
        pitch = 2.0 * math.pi * radius / vertices
        return cls(boundary, pitch)

    @classmethod
    def from_sawtooth(cls, region: SawtoothRegion, include_top: bool = True,
                      densify: float = 0.0) -> "DomainApprox":
        poly = region.boundary_polygon() if include_top \
            else region.lower_boundary_vertices()
        pts = np.array([complex(x, y) for x, y in poly])
        if densify > 0:
            pts = _densify_polyline(pts, densify)
        return cls(pts, pitch=0.0 if densify == 0 else densify,
                   closed=include_top)

    @classmethod
    def image_of_sawtooth(cls, entry: ConformalEntry, region: SawtoothRegion,
                          pitch: float = 1 / 256) -> "DomainApprox":
        poly = region.boundary_polygon()
        pre = _densify_polyline(np.array([complex(x, y) for x, y in poly]), pitch)
        pre = np.where(np.imag(pre) <= 0, pre + 1j * 1e-12, pre)
        img = np.asarray(entry.f(pre), dtype=complex)
        steps = np.abs(np.diff(img))
        image_pitch = float(np.max(steps)) if len(steps) else pitch
        return cls(img, pitch=image_pitch)

    def distance(self, points) -> np.ndarray:
        pts = np.atleast_1d(np.asarray(points, dtype=complex))
        return _segment_distances(pts, self._seg_a, self._seg_b)

    def contains(self, p: complex) -> bool:
        """Ray-casting parity test against the boundary polyline."""
        x, y = p.real, p.imag
        ax, ay = np.real(self._seg_a), np.imag(self._seg_a)
        bx, by = np.real(self._seg_b), np.imag(self._seg_b)
        cond = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = ax + (y - ay) * (bx - ax) / (by - ay)
        crossings = np.sum(cond & (xs > x))
        return bool(crossings % 2 == 1)


def _densify_polyline(pts: np.ndarray, pitch: float) -> np.ndarray:
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil(abs(b - a) / pitch)))
        for k in range(1, n + 1):
            out.append(a + (b - a) * k / n)
    return np.array(out)


@dataclass(frozen=True)
class JohnCurveSample:
    """Canonical curve from a region point to the John center, both sides."""

    start: complex
    polyline: tuple[complex, ...]
    image_polyline: tuple[complex, ...] | None
    length: float
    image_length: float | None


def _polyline_length(pts) -> float:
    arr = np.asarray(pts, dtype=complex)
    return float(np.sum(np.abs(np.diff(arr))))


def _sawtooth_wall_distance(region: SawtoothRegion, p: complex) -> float:
    """Distance to the John boundary: lower sawtooth graph and side walls.

    The ceiling is treated as interior (the sawtooth continues upward for
    John purposes); membership above the cap is still rejected elsewhere.
    """
    lower = region.lower_boundary_vertices()
    pts = np.array([p], dtype=complex)
    seg_a = np.array([complex(x, y) for x, y in lower[:-1]])
    seg_b = np.array([complex(x, y) for x, y in lower[1:]])
    d_low = _segment_distances(pts, seg_a, seg_b)[0] if len(lower) > 1 else math.inf
    bl, br = float(region.base.left), float(region.base.right)
    y_top = 2.0 * float(region.y0)  # walls extended past the cap
    d_walls = min(abs(p.real - bl), abs(br - p.real))
    if p.imag > y_top:
        d_walls = min(d_walls, abs(p.imag - y_top))
    return min(d_low, d_walls)


def _straight_inside(region: SawtoothRegion, a: complex, b: complex,
                     samples: int = 64) -> bool:
    for t in np.linspace(0.0, 1.0, samples):
        q = a + t * (b - a)
        if not region.membership_closed(q):
            return False
    return True


def canonical_curve(region: SawtoothRegion, z: complex,
                    center: complex | None = None) -> tuple[complex, ...]:
    """Vertical-then-horizontal staircase from z to the center anchor.

    Climbs through the anchors of the dyadic chain above z (each step one
    scale up, then horizontally to the parent's center), which keeps the
    curve inside the sawtooth; degenerates to the straight segment when
    that stays inside.
    """
    base = region.base
    if center is None:
        center = base.anchor
    if _straight_inside(region, z, center):
        return (z, center)
    length = float(base.length)
    rel = min(max((z.real - float(base.left)) / length, 0.0), 1.0 - 1e-12)
    # first chain depth whose scale covers the start height
    depth = max(0, int(math.floor(-math.log2(max(z.imag, 1e-300) / length))))
    pts = [z]
    x = z.real
    for d in range(depth, -1, -1):
        idx = min(int(rel * (1 << d)), (1 << d) - 1)
        node = base.descendant(d, idx)
        top = float(node.length)
        anchor = node.anchor
        pts.append(complex(x, top))
        pts.append(anchor)
        x = anchor.real
    if pts[-1] != center:
        pts.append(center)
    dedup = [pts[0]]
    for q in pts[1:]:
        if abs(q - dedup[-1]) > 0:
            dedup.append(q)
    for q in dedup:
        d, member = region.membership(q)
        if not (member or region.membership_closed(q)):
            raise CurveEscape(f"canonical curve left the region at {q}")
    return tuple(dedup)


@dataclass(frozen=True)
class JohnReport:
    constant: float
    sample_count: int
    resolution: float
    side: str                     # "preimage" | "image"

    def to_json_obj(self) -> dict:
        return {"constant": self.constant, "sample_count": self.sample_count,
                "resolution": self.resolution, "side": self.side}


def john_constant(region: SawtoothRegion, center: complex | None = None,
                  sample_count: int = 256, entry: ConformalEntry | None = None,
                  image_domain: DomainApprox | None = None,
                  resolution: float = 1 / 256, seed: int = 99) -> JohnReport:
    """Measured John constant along canonical curves.

    Pre-image side: max over sampled start points and curve vertices of
    remaining-length / wall-distance.  With an entry and image domain, the
    mapped curves and image distances are used instead.
    """
    if center is None:
        center = region.base.anchor
    rng = np.random.default_rng(seed)
    bl, br = float(region.base.left), float(region.base.right)
    y0 = float(region.y0)
    xs = rng.uniform(bl, br, sample_count * 4)
    ys = rng.uniform(0.0, y0, sample_count * 4)
    starts = []
    for x, y in zip(xs, ys):
        if region.membership(complex(x, y))[1]:
            starts.append(complex(x, y))
        if len(starts) >= sample_count:
            break
    worst = 0.0
    side = "preimage" if image_domain is None else "image"
    for z in starts:
        curve = canonical_curve(region, z, center)
        if image_domain is not None and entry is not None:
            pre = _densify_polyline(np.asarray(curve, dtype=complex), resolution)
            pre = np.where(np.imag(pre) <= 0, pre + 1j * 1e-12, pre)
            pts = np.asarray(entry.f(pre), dtype=complex)
            dists = image_domain.distance(pts)
        else:
            pts = _densify_polyline(np.asarray(curve, dtype=complex), resolution)
            dists = np.array([_sawtooth_wall_distance(region, q) for q in pts])
        seg = np.abs(np.diff(pts))
        # remaining length from each vertex back to the start z
        back = np.concatenate([[0.0], np.cumsum(seg)])
        good = dists > 1e-12
        if np.any(good):
            worst = max(worst, float(np.max(back[good] / dists[good])))
    return JohnReport(constant=worst, sample_count=len(starts),
                      resolution=resolution, side=side)


@dataclass(frozen=True)
class TransferReport:
    alpha: float
    content_preimage: float
    lower_image: float
    upper_image: float
    fprime_center: float
    transfer_ratio: float
    john_preimage: JohnReport
    john_image: JohnReport
    distortion_pass: bool
    distortion_max_log: float
    distortion_bound: float
    curve_length_ratio_max: float

    def to_json_obj(self) -> dict:
        return {"alpha": self.alpha,
                "content_preimage": self.content_preimage,
                "lower_image": self.lower_image,
                "upper_image": self.upper_image,
                "fprime_center": self.fprime_center,
                "transfer_ratio": self.transfer_ratio,
                "john_preimage": self.john_preimage.to_json_obj(),
                "john_image": self.john_image.to_json_obj(),
                "distortion_pass": self.distortion_pass,
                "distortion_max_log": self.distortion_max_log,
                "distortion_bound": self.distortion_bound,
                "curve_length_ratio_max": self.curve_length_ratio_max}


def verify_content_transfer(entry: ConformalEntry, tree: GenerationTree,
                            mu: FrostmanMeasure, alpha: float,
                            n: int | None = None,
                            scales=None, ball_samples: int = 256,
                            curve_samples: int = 32,
                            seed: int = 4242) -> TransferReport:
    """Content transfer and John geometry of the image sawtooth.

    Computes the push-forward lower estimate and dyadic-cover upper bound
    for the image of the core set, checks the sandwich, measures John
    constants on both sides and verifies the distortion bridge
    e^(-2M-30) <= |f'(w)|/|f'(z_root)| <= e^(2M+30) on sampled sawtooth
    points and along mapped canonical curves.
    """
    if n is None:
        n = tree.n_max
    core = extract_core_set(tree, n)
    region = extract_sawtooth(tree, n)
    pre_content = content_1d(core, alpha)
    push = pushforward_lower_2d(mu, entry, alpha, ball_samples=ball_samples)

    # image point cloud of the core set for the cover upper bound
    xs = []
    for lo, hi in core.components:
        lo_f, hi_f = float(lo), float(hi)
        k = max(2, int(2048 * (hi_f - lo_f) / float(core.total_length)))
        xs.append(np.linspace(lo_f, hi_f, k))
    xs = np.concatenate(xs)
    singular = np.asarray(entry.singular_for("f"), dtype=float)
    if singular.size:
        keep = np.ones(len(xs), dtype=bool)
        for s in singular:
            keep &= np.abs(xs - s) > 1e-12
        xs = xs[keep]
    img_pts = np.asarray(entry.boundary_trace(xs), dtype=complex)
    spread = float(np.max(np.abs(img_pts - img_pts.mean()))) if len(img_pts) else 1.0
    radius = max(spread, 1e-9) / 1024
    scale_list = scales if scales is not None else \
        [spread / 2 ** k for k in range(1, 9)]
    upper = content_upper_2d(img_pts, radius, alpha, scale_list)

    z0 = tree.base.anchor
    fp0 = abs(complex(np.asarray(entry.f_prime(np.array([z0])))[0]))
    denom = fp0 ** alpha * pre_content.value
    ratio = push.lower / denom if denom > 0 else math.inf

    john_pre = john_constant(region, sample_count=curve_samples, seed=seed)
    image_dom = DomainApprox.image_of_sawtooth(entry, region)
    john_img = john_constant(region, sample_count=curve_samples, entry=entry,
                             image_domain=image_dom, seed=seed)

    # distortion bridge on sampled sawtooth points
    rng = np.random.default_rng(seed)
    pts = []
    bl, br = float(region.base.left), float(region.base.right)
    y0 = float(region.y0)
    while len(pts) < 512:
        x = rng.uniform(bl, br)
        y = rng.uniform(1e-6, y0)
        if region.membership(complex(x, y))[1]:
            pts.append(complex(x, y))
    pts = np.array(pts)
    fp = np.abs(np.asarray(entry.f_prime(pts), dtype=complex))
    logs = np.abs(np.log(fp / fp0))
    bound = 2.0 * tree.base_m + 30.0
    distortion_pass = bool(np.max(logs) <= bound)

    # mapped canonical curves inherit the length bound
    ratio_max = 0.0
    for z in pts[:curve_samples]:
        curve = np.asarray(canonical_curve(region, complex(z)), dtype=complex)
        dense = _densify_polyline(curve, 1 / 512)
        dense = np.where(np.imag(dense) <= 0, dense + 1j * 1e-12, dense)
        img_curve = np.asarray(entry.f(dense), dtype=complex)
        pre_len = _polyline_length(dense)
        img_len = _polyline_length(img_curve)
        if pre_len > 0:
            ratio_max = max(ratio_max, img_len / (pre_len * fp0 * math.exp(bound)))
    return TransferReport(alpha=alpha,
                          content_preimage=pre_content.value,
                          lower_image=push.lower,
                          upper_image=upper.value,
                          fprime_center=fp0,
                          transfer_ratio=ratio,
                          john_preimage=john_pre,
                          john_image=john_img,
                          distortion_pass=distortion_pass,
                          distortion_max_log=float(np.max(logs)),
                          distortion_bound=bound,
                          curve_length_ratio_max=ratio_max)


@dataclass(frozen=True)
class EndToEndReport:
    alpha: float
    distance_to_boundary: float
    content_lower_image: float
    ratio_to_distance_power: float
    john_image_constant: float
    transfer: TransferReport

    def to_json_obj(self) -> dict:
        return {"alpha": self.alpha,
                "distance_to_boundary": self.distance_to_boundary,
                "content_lower_image": self.content_lower_image,
                "ratio_to_distance_power": self.ratio_to_distance_power,
                "john_image_constant": self.john_image_constant,
                "transfer": self.transfer.to_json_obj()}


def theorem_endtoend(entry: ConformalEntry, z0: complex, alpha: float,
                     base_m: float, n_max: int = 1,
                     params: ClassifierParams = ClassifierParams(),
                     test_mode: bool = True,
                     boundary_vertices: int = 4096) -> EndToEndReport:
    """Full pipeline at an interior point z = f(z0).

    The entry is precomposed with the affine normalization sending i to z0,
    the construction and measure run over the standard base, and the image
    content estimate is compared against the distance of z to the domain
    boundary raised to alpha.
    """
    rebased = RebasedEntry(entry, z0.real, z0.imag)
    base = DyadicInterval.root("-1/2", 1)
    tree = build(rebased, base, alpha, base_m, n_max, params, test_mode=test_mode)
    mu = build_measure(tree, tree.n_max)
    growth = verify_growth(mu, alpha, base_m, sample_count=512)
    transfer = verify_content_transfer(rebased, tree, mu, alpha)

    # distance of z = f(z0) to the boundary trace of the full domain
    ts = np.linspace(-64.0, 64.0, boundary_vertices)
    singular = np.asarray(entry.singular_for("f"), dtype=float)
    if singular.size:
        keep = np.ones(len(ts), dtype=bool)
        for s in singular:
            keep &= np.abs(ts - s) > 1e-9
        ts = ts[keep]
    trace = np.asarray(entry.boundary_trace(ts), dtype=complex)
    z_img = complex(np.asarray(entry.f(np.array([z0])))[0])
    d_omega = float(np.min(np.abs(trace - z_img)))
    ratio = transfer.lower_image / d_omega ** alpha if d_omega > 0 else math.inf
    return EndToEndReport(alpha=alpha,
                          distance_to_boundary=d_omega,
                          content_lower_image=transfer.lower_image,
                          ratio_to_distance_power=ratio,
                          john_image_constant=transfer.john_image.constant,
                          transfer=transfer)
