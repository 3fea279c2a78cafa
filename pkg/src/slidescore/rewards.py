"""Shaped reward signals for the four layout metrics.

Aspect ratio uses a nominal-the-best asymmetric quadratic in log space with
an extra penalty for overlong (too-tall) slides.  The three monotone
metrics (whitespace ratio, collision score, imbalance distance, all
higher-is-worse) pass through a clipped smoothstep band.  Render failures
zero the whole vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import yaml

COMPONENTS = ("aspect", "whitespace", "collision", "imbalance")
TARGET_RATIO = 16.0 / 9.0


class InvalidRatioError(ValueError):
    pass


class BadThresholdsError(ValueError):
    pass


@dataclass(frozen=True)
class Band:
    """Smoothstep clip band on the raw (higher-is-worse) metric axis.

    ``complement=True`` feeds 1 - metric with the band reflected instead;
    for metrics bounded in [0, 1] the two parameterizations are equivalent.
    """

    lower: float
    upper: float
    complement: bool = False

    def __post_init__(self):
        if self.lower >= self.upper:
            raise BadThresholdsError(f"band lower {self.lower} must be < upper {self.upper}")


@dataclass(frozen=True)
class ShapingConfig:
    target: float = TARGET_RATIO
    alpha: float = 16.0
    beta: float = 64.0
    margin_m: float = 0.04
    whitespace_band: Band = field(default_factory=lambda: Band(0.8, 0.995))
    collision_band: Band = field(default_factory=lambda: Band(0.5, 0.998))
    imbalance_band: Band = field(default_factory=lambda: Band(0.1, 0.95))

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.margin_m < 0:
            raise ValueError("alpha, beta and margin must be >= 0")


@dataclass
class MetricReport:
    aspect_ratio: float | None = None
    whitespace_ratio: float | None = None
    collision_score: float | None = None
    imbalance_d: float | None = None
    render_error: str | None = None

    def to_dict(self) -> dict:
        return {
            "aspect_ratio": self.aspect_ratio,
            "whitespace_ratio": self.whitespace_ratio,
            "collision_score": self.collision_score,
            "imbalance_d": self.imbalance_d,
            "render_error": self.render_error,
        }


@dataclass(frozen=True)
class RewardVector:
    components: tuple[float, float, float, float]  # (aspect, whitespace, collision, imbalance)
    valid: bool

    def to_dict(self) -> dict:
        return {"components": dict(zip(COMPONENTS, self.components)), "valid": self.valid}


ZERO_REWARD = RewardVector((0.0, 0.0, 0.0, 0.0), valid=False)


def aspect_reward(x: float, config: ShapingConfig = ShapingConfig()) -> float:
    """exp(-alpha*log(x/t)^2 - beta*max(-log(x/t) - m, 0)^2); 1 at x = target."""
    if x is None or x <= 0:
        raise InvalidRatioError(f"aspect ratio must be positive, got {x}")
    dev = math.log(x / config.target)
    penalty = config.alpha * dev * dev
    overlong = max(-dev - config.margin_m, 0.0)
    penalty += config.beta * overlong * overlong
    return math.exp(-penalty)


def smoothstep_reward(x: float, lower: float, upper: float) -> float:
    """1 below the band, 0 above, cubic 3u^2 - 2u^3 in between."""
    if lower >= upper:
        raise BadThresholdsError(f"lower {lower} must be < upper {upper}")
    if x <= lower:
        return 1.0
    if x >= upper:
        return 0.0
    u = (upper - x) / (upper - lower)
    return 3.0 * u * u - 2.0 * u * u * u


def _band_reward(x: float, band: Band) -> float:
    if band.complement:
        # rising smoothstep on the content-goodness axis c = 1 - x;
        # algebraically identical to the raw form for x in [0, 1]
        c = 1.0 - x
        lo, hi = 1.0 - band.upper, 1.0 - band.lower
        if c <= lo:
            return 0.0
        if c >= hi:
            return 1.0
        u = (c - lo) / (hi - lo)
        return 3.0 * u * u - 2.0 * u * u * u
    return smoothstep_reward(x, band.lower, band.upper)


def compose_rewards(report: MetricReport,
                    config: ShapingConfig = ShapingConfig()) -> RewardVector:
    """Map a metric report to the 4-component reward vector.

    A render error (or any missing metric) invalidates the whole rollout:
    the reward is identically zero, making output validity the
    highest-priority requirement.
    """
    if report.render_error is not None:
        return ZERO_REWARD
    metrics = (report.aspect_ratio, report.whitespace_ratio,
               report.collision_score, report.imbalance_d)
    if any(m is None for m in metrics):
        return ZERO_REWARD
    return RewardVector((
        aspect_reward(report.aspect_ratio, config),
        _band_reward(report.whitespace_ratio, config.whitespace_band),
        _band_reward(report.collision_score, config.collision_band),
        _band_reward(report.imbalance_d, config.imbalance_band),
    ), valid=True)


def _band_from_obj(obj, default: Band) -> Band:
    if obj is None:
        return default
    if isinstance(obj, (list, tuple)):
        return Band(float(obj[0]), float(obj[1]))
    return Band(float(obj["lower"]), float(obj["upper"]),
                bool(obj.get("complement", False)))


def load_shaping_config(path) -> ShapingConfig:
    """Read a ShapingConfig from a YAML/JSON key-value file."""
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    base = ShapingConfig()
    return replace(
        base,
        target=float(data.get("target", base.target)),
        alpha=float(data.get("alpha", base.alpha)),
        beta=float(data.get("beta", base.beta)),
        margin_m=float(data.get("margin_m", base.margin_m)),
        whitespace_band=_band_from_obj(data.get("whitespace_band"), base.whitespace_band),
        collision_band=_band_from_obj(data.get("collision_band"), base.collision_band),
        imbalance_band=_band_from_obj(data.get("imbalance_band"), base.imbalance_band),
    )
