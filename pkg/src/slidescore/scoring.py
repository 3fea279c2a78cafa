"""End-to-end scoring: render -> four metrics -> shaped reward vector."""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .gateway import RenderGateway, RenderRequest
from .geometry import (
    GeometryConfig,
    NoContentError,
    collision_score,
    detect_collisions,
    extract_visual_units,
    imbalance_distance,
    visual_centroid,
)
from .imageops import WhitespaceConfig, crop_border, variance_map, whitespace_ratio
from .rewards import MetricReport, RewardVector, ShapingConfig, compose_rewards


@dataclass
class ScoreResult:
    metric_report: MetricReport
    reward_vector: RewardVector
    render_ms: float
    metric_ms: float
    total_ms: float
    overlay_png: bytes | None = None

    def to_dict(self) -> dict:
        return {
            "metric_report": self.metric_report.to_dict(),
            "reward_vector": self.reward_vector.to_dict(),
            "timings": {"render_ms": self.render_ms, "metric_ms": self.metric_ms,
                        "total_ms": self.total_ms},
        }


@dataclass
class ScoringConfig:
    shaping: ShapingConfig = field(default_factory=ShapingConfig)
    whitespace: WhitespaceConfig = field(default_factory=WhitespaceConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)


def score_html(gateway: RenderGateway, html: str,
               config: ScoringConfig | None = None,
               pipeline: str = "full",
               viewport_width_px: int = 1280,
               timeout_ms: int = 15000,
               return_overlay: bool = False) -> ScoreResult:
    """Run the scoring pipeline on one HTML document.

    Render failures yield a zero, invalid reward vector rather than raising.
    Partial pipelines fill only their metrics; the composed reward is valid
    only for the full pipeline.
    """
    config = config or ScoringConfig()
    t0 = time.monotonic()
    page = gateway.render_snapshot(RenderRequest(
        html=html, pipeline=pipeline,
        viewport_width_px=viewport_width_px, timeout_ms=timeout_ms))
    t1 = time.monotonic()

    overlay = None
    if page.render_error is not None:
        report = MetricReport(render_error=page.render_error)
    else:
        report = MetricReport(aspect_ratio=page.width_px / page.height_px)
        if pipeline in ("whitespace", "full"):
            report.whitespace_ratio = whitespace_ratio(page.screenshot, config.whitespace)
        if pipeline in ("geometry", "full"):
            units = extract_visual_units(page.snapshot, config.geometry)
            events = detect_collisions(units, page.width_px, page.height_px,
                                       config.geometry)
            report.collision_score = collision_score(events)
            try:
                centroid = visual_centroid(units, page.width_px, page.height_px)
                report.imbalance_d = imbalance_distance(
                    centroid, config.geometry.x_tol, config.geometry.y_tol)
            except NoContentError:
                # an empty layout is maximally imbalanced for reward purposes
                report.imbalance_d = math.inf
        if return_overlay and pipeline in ("whitespace", "full"):
            overlay = render_overlay_png(page.screenshot, config.whitespace)
    reward = compose_rewards(report, config.shaping)
    t2 = time.monotonic()
    return ScoreResult(
        metric_report=report, reward_vector=reward,
        render_ms=(t1 - t0) * 1000.0, metric_ms=(t2 - t1) * 1000.0,
        total_ms=(t2 - t0) * 1000.0, overlay_png=overlay)


def overlay_image(screenshot: np.ndarray, f_map: np.ndarray,
                  tau: float = 0.05, alpha: float = 0.45) -> np.ndarray:
    """Alpha-blend a red mask over low-variance (whitespace) pixels."""
    if f_map.shape != screenshot.shape[:2]:
        raise ValueError(
            f"map shape {f_map.shape} does not match image {screenshot.shape[:2]}")
    out = screenshot.astype(np.float64).copy()
    mask = f_map < tau
    red = np.array([255.0, 0.0, 0.0])
    out[mask] = (1 - alpha) * out[mask] + alpha * red
    return out.astype(np.uint8)


def render_overlay_png(screenshot: np.ndarray,
                       config: WhitespaceConfig = WhitespaceConfig()) -> bytes:
    """Whitespace-mask overlay (border-crop region only) encoded as PNG."""
    from PIL import Image

    f = variance_map(screenshot, config)
    cropped_shot = crop_border(screenshot, config.border_crop_frac)
    cropped_f = crop_border(f, config.border_crop_frac)
    blended = overlay_image(cropped_shot, cropped_f, config.tau)
    buf = io.BytesIO()
    Image.fromarray(blended).save(buf, format="PNG")
    return buf.getvalue()
