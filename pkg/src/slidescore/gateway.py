"""Render gateway: drives a pool of render sessions through the metric
pipelines.

A session backend exposes ``set_viewport`` / ``load_html`` /
``evaluate_probe`` / ``screenshot`` / ``close`` plus an ``alive`` flag.
Production uses a DevTools-protocol browser session (see ``cdp``); tests
and demos use the deterministic ``FixtureSession``.  The gateway owns
sanitizer dispatch, the dynamic aspect-ratio measurement (load at a tiny
viewport, read the content extent, reset the viewport, screenshot), and
session leasing with crash replacement.
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .sanitize import sanitize_for_aspect, sanitize_for_whitespace
from .snapshot import LayoutSnapshot, snapshot_from_probe

logger = logging.getLogger(__name__)

PIPELINES = ("aspect", "whitespace", "geometry", "full")
MEASURE_VIEWPORT = (1280, 10)
MIN_VIEWPORT_H = 10
MAX_VIEWPORT_H = 20000


class NavigationTimeout(TimeoutError):
    pass


class NavigationFailed(RuntimeError):
    pass


class ProbeFailed(RuntimeError):
    pass


class EmptyPageError(RuntimeError):
    pass


@dataclass(frozen=True)
class RenderRequest:
    html: str
    pipeline: str = "full"
    viewport_width_px: int = 1280
    timeout_ms: int = 15000

    def __post_init__(self):
        if not self.html:
            raise ValueError("html must be non-empty")
        if self.pipeline not in PIPELINES:
            raise ValueError(f"unknown pipeline {self.pipeline!r}")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")


@dataclass
class AspectMeasurement:
    width_px: int
    height_px: int
    ratio: float
    clamped: bool


@dataclass
class RenderedPage:
    screenshot: np.ndarray | None
    width_px: int
    height_px: int
    snapshot: LayoutSnapshot | None
    render_error: str | None = None

    def __post_init__(self):
        if self.render_error is None:
            assert self.screenshot is not None
            assert self.width_px > 0 and self.height_px > 0
            assert self.screenshot.shape[:2] == (self.height_px, self.width_px)


class SessionPool:
    """Fixed-size pool of exclusively leased sessions.

    A session that dies while leased is replaced from the factory, so a
    crash never shrinks the pool or fails queued requests.
    """

    def __init__(self, factory, size: int):
        if size < 1:
            raise ValueError("pool size must be >= 1")
        self._factory = factory
        self.size = size
        self._q: queue.Queue = queue.Queue()
        for _ in range(size):
            self._q.put(factory())
        self._lock = threading.Lock()
        self._leased = 0
        self.high_water = 0

    @contextmanager
    def lease(self, timeout: float | None = None):
        session = self._q.get(timeout=timeout)
        with self._lock:
            self._leased += 1
            self.high_water = max(self.high_water, self._leased)
        try:
            yield session
        finally:
            with self._lock:
                self._leased -= 1
            if not getattr(session, "alive", False):
                logger.warning("render session died; replacing it")
                try:
                    session.close()
                except Exception:
                    pass
                session = self._factory()
            self._q.put(session)

    @property
    def sessions_alive(self) -> int:
        return self.size

    def recycle(self):
        """Close and replace every currently idle session."""
        stale = []
        while True:
            try:
                stale.append(self._q.get_nowait())
            except queue.Empty:
                break
        for session in stale:
            try:
                session.close()
            except Exception:
                pass
            self._q.put(self._factory())

    def close(self):
        while True:
            try:
                self._q.get_nowait().close()
            except queue.Empty:
                return


class RenderGateway:
    def __init__(self, session_factory=None, pool_size: int = 2,
                 settle_ms: int = 0):
        if session_factory is None:
            from .fixture_renderer import FixtureSession
            session_factory = FixtureSession
        self.pool = SessionPool(session_factory, pool_size)
        self.settle_ms = settle_ms

    def close(self):
        self.pool.close()

    # -- aspect measurement ------------------------------------------------

    def _measure_with_session(self, session, html: str, viewport_w: int,
                              timeout_ms: int) -> AspectMeasurement:
        session.set_viewport(viewport_w, MEASURE_VIEWPORT[1])
        session.load_html(html, timeout_ms)
        self._settle()
        payload = session.evaluate_probe()
        if payload.get("error"):
            raise ProbeFailed(payload["error"])
        extent = int(payload["page_extent"]["content_height_px"])
        if extent <= 0:
            raise EmptyPageError("measured content height is zero")
        height = min(max(extent, MIN_VIEWPORT_H), MAX_VIEWPORT_H)
        session.set_viewport(viewport_w, height)
        shot = session.screenshot()
        h, w = shot.shape[:2]
        return AspectMeasurement(
            width_px=w, height_px=h, ratio=w / h,
            clamped=height != extent)

    def measure_aspect_ratio(self, html: str, viewport_w: int = 1280,
                             timeout_ms: int = 15000) -> AspectMeasurement:
        """Dynamic aspect measurement on aspect-sanitized HTML."""
        sanitized = sanitize_for_aspect(html)
        with self.pool.lease() as session:
            return self._measure_with_session(session, sanitized, viewport_w, timeout_ms)

    # -- full pipeline -----------------------------------------------------

    def render_snapshot(self, request: RenderRequest) -> RenderedPage:
        """Render per the requested pipeline; content failures come back as
        a RenderedPage with render_error set, never as an exception."""
        try:
            with self.pool.lease() as session:
                return self._render(session, request)
        except NavigationTimeout:
            return RenderedPage(None, 0, 0, None, render_error="timeout")
        except NavigationFailed:
            return RenderedPage(None, 0, 0, None, render_error="navigation_failed")
        except ProbeFailed:
            return RenderedPage(None, 0, 0, None, render_error="probe_failed")
        except EmptyPageError:
            return RenderedPage(None, 0, 0, None, render_error="empty_page")

    def _render(self, session, request: RenderRequest) -> RenderedPage:
        measure = self._measure_with_session(
            session, sanitize_for_aspect(request.html),
            request.viewport_width_px, request.timeout_ms)
        width, height = measure.width_px, measure.height_px

        screenshot = None
        snapshot = None
        if request.pipeline == "aspect":
            session.load_html(sanitize_for_aspect(request.html), request.timeout_ms)
            screenshot = session.screenshot()
        if request.pipeline in ("whitespace", "full"):
            cleaned = sanitize_for_whitespace(request.html, width, height)
            session.load_html(cleaned, request.timeout_ms)
            self._settle()
            screenshot = session.screenshot()
        if request.pipeline in ("geometry", "full"):
            session.load_html(request.html, request.timeout_ms)
            self._settle()
            try:
                payload = session.evaluate_probe()
            except Exception as exc:
                raise ProbeFailed(str(exc)) from exc
            if payload.get("error"):
                raise ProbeFailed(payload["error"])
            snapshot = snapshot_from_probe(payload, width, height)
            if screenshot is None:
                screenshot = session.screenshot()
        return RenderedPage(screenshot, width, height, snapshot)

    def _settle(self):
        if self.settle_ms:
            time.sleep(self.settle_ms / 1000.0)
