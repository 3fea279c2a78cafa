import threading

import pytest

from slidescore.fixture_renderer import FixtureRenderer, FixtureSession
from slidescore.gateway import (
    RenderGateway,
    RenderRequest,
    SessionPool,
)

FIXTURE_720 = """
<body style="margin:0">
  <div style="width:1280px;height:720px;background:#fafafa">
    <div style="width:600px;height:200px;margin:40px">Quarterly revenue summary
    and growth outlook for the next fiscal period.</div>
  </div>
</body>
"""

FIXTURE_1280 = """
<body style="margin:0"><div style="width:1280px;height:1280px;background:#eee">
<p>square deck</p></div></body>
"""

FIXTURE_2160 = """
<body style="margin:0">
  <div style="width:1280px;height:720px;background:#fff"><p>part one</p></div>
  <div style="width:1280px;height:720px;background:#f5f5f5"><p>part two</p></div>
  <div style="width:1280px;height:720px;background:#fff"><p>part three</p></div>
</body>
"""


@pytest.fixture
def gateway():
    gw = RenderGateway(pool_size=2)
    yield gw
    gw.close()


class TestFixtureRenderer:
    def test_fixed_height_extent(self):
        r = FixtureRenderer(FIXTURE_720, 1280, 10)
        assert r.content_height() == 720

    def test_stacked_sections_extent(self):
        r = FixtureRenderer(FIXTURE_2160, 1280, 10)
        assert r.content_height() == 2160

    def test_screenshot_dims_follow_viewport(self):
        r = FixtureRenderer(FIXTURE_720, 1280, 720)
        assert r.screenshot().shape == (720, 1280, 3)

    def test_deterministic_paint(self):
        a = FixtureRenderer(FIXTURE_720, 1280, 720).screenshot()
        b = FixtureRenderer(FIXTURE_720, 1280, 720).screenshot()
        assert (a == b).all()

    def test_probe_forest_is_valid(self):
        payload = FixtureRenderer(FIXTURE_2160, 1280, 720).probe_payload()
        for i, n in enumerate(payload["nodes"]):
            assert n["node_index"] == i
            assert n["parent_index"] is None or n["parent_index"] < i

    def test_plain_text_document(self):
        r = FixtureRenderer("just some words, no markup at all", 1280, 10)
        assert r.content_height() > 0


class TestAspectMeasurement:
    @pytest.mark.parametrize("html,expected", [
        (FIXTURE_720, 16 / 9),
        (FIXTURE_1280, 1.0),
        (FIXTURE_2160, 1280 / 2160),
    ])
    def test_fixture_ratios(self, gateway, html, expected):
        m = gateway.measure_aspect_ratio(html)
        assert m.ratio == pytest.approx(expected, rel=0.005)
        assert not m.clamped

    def test_deterministic_across_runs(self, gateway):
        ratios = {round(gateway.measure_aspect_ratio(FIXTURE_2160).ratio, 3)
                  for _ in range(3)}
        assert len(ratios) == 1

    def test_min_height_hack_neutralized(self, gateway):
        hack = ('<body style="margin:0"><div style="min-height:720px">'
                '<div style="height:200px;background:#ddd">x</div></div></body>')
        m = gateway.measure_aspect_ratio(hack)
        assert m.height_px < 300  # min-height stripped before measuring

    def test_overflow_hidden_hack_neutralized(self, gateway):
        hack = ('<body style="margin:0">'
                '<div style="height:720px;overflow:hidden">'
                '<div style="height:2160px;background:#ddd">tall</div></div></body>')
        m = gateway.measure_aspect_ratio(hack)
        assert m.height_px == 2160

    def test_viewport_clamp(self, gateway):
        giant = ('<body style="margin:0">'
                 '<div style="height:50000px;background:#eee">x</div></body>')
        m = gateway.measure_aspect_ratio(giant)
        assert m.height_px == 20000
        assert m.clamped


class TestRenderSnapshot:
    def test_full_pipeline_success(self, gateway):
        page = gateway.render_snapshot(RenderRequest(html=FIXTURE_720))
        assert page.render_error is None
        assert page.snapshot is not None and len(page.snapshot.nodes) > 0
        assert page.screenshot.shape == (page.height_px, page.width_px, 3)

    def test_hang_maps_to_timeout(self, gateway):
        page = gateway.render_snapshot(RenderRequest(
            html='<div data-render-hang>x</div>'))
        assert page.render_error == "timeout"
        assert page.screenshot is None

    def test_navigation_failure(self, gateway):
        page = gateway.render_snapshot(RenderRequest(
            html='<div data-render-fail>x</div>'))
        assert page.render_error == "navigation_failed"

    def test_empty_page(self, gateway):
        page = gateway.render_snapshot(RenderRequest(html="<body></body>"))
        assert page.render_error == "empty_page"

    def test_plain_text_still_renders(self, gateway):
        page = gateway.render_snapshot(RenderRequest(
            html="not html at all, just words " * 20, pipeline="aspect"))
        assert page.render_error is None

    def test_error_iff_no_screenshot(self, gateway):
        for html in (FIXTURE_720, '<div data-render-hang>x</div>', "<body></body>"):
            page = gateway.render_snapshot(RenderRequest(html=html))
            assert (page.render_error is None) == (page.screenshot is not None)

    def test_invalid_request(self):
        with pytest.raises(ValueError):
            RenderRequest(html="")
        with pytest.raises(ValueError):
            RenderRequest(html="x", pipeline="everything")


class TestSessionPool:
    def test_bounded_concurrency(self):
        pool = SessionPool(FixtureSession, size=3)
        barrier = threading.Barrier(6)

        def worker():
            with pool.lease():
                pass
            barrier.wait()

        threads = [threading.Thread(target=worker) for _ in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert pool.high_water <= 3
        pool.close()

    def test_crashed_session_replaced(self):
        pool = SessionPool(FixtureSession, size=1)
        with pool.lease() as s:
            s.alive = False
            dead = s
        with pool.lease() as s2:
            assert s2 is not dead
            assert s2.alive
        pool.close()

    def test_navigation_failure_recycles_session(self):
        gw = RenderGateway(pool_size=1)
        gw.render_snapshot(RenderRequest(html='<div data-render-fail>x</div>'))
        page = gw.render_snapshot(RenderRequest(html=FIXTURE_720))
        assert page.render_error is None
        gw.close()
