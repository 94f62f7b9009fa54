"""Run configuration: one structured JSON file per archival run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .builder import minimum_threshold
from .classifier import ClassifierParams
from .errors import InvalidConfig
from .geometry import DyadicInterval
from .sources import HarmonicSource, MartingaleModel, source_from_json_obj


@dataclass(frozen=True)
class HardySettings:
    enabled: bool = True
    domain: str = "disk"           # "disk" | "image"
    p: float = 2.0
    beta: float = 0.0
    q: float | None = None
    samples: int = 8
    pitch: float = 1 / 32
    collar_widths: tuple[float, ...] = (0.125, 0.25)

    @classmethod
    def from_obj(cls, obj: dict) -> "HardySettings":
        known = {"enabled", "domain", "p", "beta", "q", "samples", "pitch",
                 "collar_widths"}
        for key in obj:
            if key not in known:
                raise InvalidConfig(f"hardy.{key}", "unknown field")
        if obj.get("domain", "disk") not in ("disk", "image"):
            raise InvalidConfig("hardy.domain", "must be 'disk' or 'image'")
        return cls(enabled=bool(obj.get("enabled", True)),
                   domain=obj.get("domain", "disk"),
                   p=float(obj.get("p", 2.0)),
                   beta=float(obj.get("beta", 0.0)),
                   q=obj.get("q"),
                   samples=int(obj.get("samples", 8)),
                   pitch=float(obj.get("pitch", 1 / 32)),
                   collar_widths=tuple(obj.get("collar_widths", (0.125, 0.25))))


@dataclass(frozen=True)
class RunConfig:
    source_obj: dict
    base: DyadicInterval
    alpha: float
    threshold_m: float
    m_is_auto: bool
    n_max: int
    test_mode: bool
    seed: int
    classifier: ClassifierParams
    growth_samples: int
    distortion_floor: float
    hardy: HardySettings
    echo: dict

    @classmethod
    def from_json_obj(cls, obj: dict, test_mode_flag: bool = False) -> "RunConfig":
        known = {"source", "base", "alpha", "M", "n_max", "test_mode", "seed",
                 "classifier", "growth_samples", "distortion_floor", "hardy"}
        for key in obj:
            if key not in known:
                raise InvalidConfig(key, "unknown field")
        if "source" not in obj:
            raise InvalidConfig("source", "missing")
        base_obj = obj.get("base", {"left": "-1/2", "length": "1"})
        try:
            base = DyadicInterval.root(base_obj.get("left", "-1/2"),
                                       base_obj.get("length", "1"))
        except (ValueError, TypeError) as exc:
            raise InvalidConfig("base", str(exc))
        alpha = float(obj.get("alpha", 0.5))
        if not (0.0 < alpha < 1.0):
            raise InvalidConfig("alpha", "must lie in (0, 1)")
        n_max = int(obj.get("n_max", 1))
        if n_max < 0:
            raise InvalidConfig("n_max", "must be nonnegative")
        test_mode = bool(obj.get("test_mode", False)) or test_mode_flag
        m_raw = obj.get("M", "auto")
        m_is_auto = isinstance(m_raw, str)
        if m_is_auto:
            if m_raw != "auto":
                raise InvalidConfig("M", "must be a number or 'auto'")
            threshold_m = minimum_threshold(alpha)
        else:
            threshold_m = float(m_raw)
            if threshold_m <= 0:
                raise InvalidConfig("M", "must be positive")
            if threshold_m < minimum_threshold(alpha) and not test_mode:
                raise InvalidConfig(
                    "M", f"{threshold_m} below minimum "
                    f"{minimum_threshold(alpha):.3f} for alpha={alpha}; "
                    "set test_mode to permit")
        cls_obj = dict(obj.get("classifier", {}))
        try:
            params = ClassifierParams(**cls_obj)
        except (TypeError, ValueError) as exc:
            raise InvalidConfig("classifier", str(exc))
        seed = int(obj.get("seed", 515))
        growth_samples = int(obj.get("growth_samples", 2000))
        distortion_floor = float(obj.get("distortion_floor", 2 ** -12))
        hardy = HardySettings.from_obj(dict(obj.get("hardy", {})))
        echo = json.loads(json.dumps(obj, sort_keys=True))
        echo["test_mode"] = test_mode
        return cls(source_obj=obj["source"], base=base, alpha=alpha,
                   threshold_m=threshold_m, m_is_auto=m_is_auto, n_max=n_max,
                   test_mode=test_mode, seed=seed, classifier=params,
                   growth_samples=growth_samples,
                   distortion_floor=distortion_floor, hardy=hardy, echo=echo)

    @classmethod
    def load(cls, path: str | Path, test_mode_flag: bool = False) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InvalidConfig("config", f"cannot read {path}: {exc}")
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfig("config", f"line {exc.lineno}: {exc.msg}")
        if not isinstance(obj, dict):
            raise InvalidConfig("config", "top level must be an object")
        return cls.from_json_obj(obj, test_mode_flag)

    def make_source(self) -> HarmonicSource:
        obj = dict(self.source_obj)
        try:
            if obj.get("kind") == "martingale" and "base" not in obj:
                obj = dict(obj, base=self.base.to_json_obj())
            return source_from_json_obj(obj)
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidConfig("source", str(exc))
