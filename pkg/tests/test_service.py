import base64
import json
import time

import pytest
from fastapi.testclient import TestClient

from slidescore.service import ServiceConfig, create_app, load_service_config

GOOD_SLIDE = """
<body style="margin:0">
  <div style="width:1280px;height:720px;background:#fafafa">
    <div style="width:560px;height:260px;margin:40px;background:#dce6f1">
      Quarterly revenue summary and growth outlook for the next fiscal
      period, with regional breakdowns and headline figures.
    </div>
    <div style="width:560px;height:260px;margin:40px 40px 40px 660px;background:#f1e6dc">
      Operating costs trended down across all three business units while
      headcount stayed flat year over year.
    </div>
  </div>
</body>
"""


@pytest.fixture(scope="module")
def client():
    app = create_app(ServiceConfig(pool_size=2, timeout_ms=500))
    with TestClient(app) as c:
        yield c


class TestScoreEndpoint:
    def test_good_slide(self, client):
        resp = client.post("/v1/score", json={"html": GOOD_SLIDE,
                                              "request_id": "r1"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["request_id"] == "r1"
        assert body["reward_vector"]["valid"]
        assert body["metric_report"]["aspect_ratio"] == pytest.approx(16 / 9, rel=0.005)

    def test_empty_html_is_400(self, client):
        assert client.post("/v1/score", json={"html": ""}).status_code == 400

    def test_unknown_pipeline_is_400(self, client):
        resp = client.post("/v1/score", json={"html": "<p>x</p>",
                                              "pipeline": "everything"})
        assert resp.status_code == 400

    def test_oversize_html_is_400(self):
        app = create_app(ServiceConfig(max_html_bytes=100))
        with TestClient(app) as c:
            resp = c.post("/v1/score", json={"html": "<p>" + "x" * 200 + "</p>"})
            assert resp.status_code == 400

    def test_hang_is_200_with_zero_rewards(self, client):
        resp = client.post("/v1/score", json={
            "html": '<div data-render-hang>x</div>', "request_id": "hang"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["metric_report"]["render_error"] == "timeout"
        assert not body["reward_vector"]["valid"]
        assert all(v == 0.0 for v in body["reward_vector"]["components"].values())

    def test_overlay_is_base64_png(self, client):
        resp = client.post("/v1/score", json={"html": GOOD_SLIDE,
                                              "return_overlay": True})
        raw = base64.b64decode(resp.json()["overlay_png"])
        assert raw[:8] == b"\x89PNG\r\n\x1a\n"

    def test_shaping_override(self, client):
        resp = client.post("/v1/score", json={
            "html": GOOD_SLIDE,
            "shaping": {"whitespace_band": [0.01, 0.02]}})
        assert resp.json()["reward_vector"]["components"]["whitespace"] == 0.0

    def test_bad_shaping_override_is_400(self, client):
        resp = client.post("/v1/score", json={
            "html": GOOD_SLIDE, "shaping": {"whitespace_band": [0.9, 0.1]}})
        assert resp.status_code == 400

    def test_idempotent_to_four_decimals(self, client):
        reports = []
        for _ in range(2):
            r = client.post("/v1/score", json={"html": GOOD_SLIDE}).json()
            reports.append({k: round(v, 4) for k, v in
                            r["metric_report"].items() if isinstance(v, float)})
        assert reports[0] == reports[1]

    def test_queue_bound_gives_503(self):
        app = create_app(ServiceConfig(pool_size=1, queue_bound=0))
        with TestClient(app) as c:
            assert c.post("/v1/score", json={"html": "<p>x</p>"}).status_code == 503


class TestBatchEndpoint:
    def test_accounting_and_determinism(self, client):
        lines = [json.dumps({"html": GOOD_SLIDE, "request_id": f"b{i}"})
                 for i in range(6)]
        resp = client.post("/v1/score/batch", content="\n".join(lines))
        assert resp.status_code == 200
        records = [json.loads(ln) for ln in resp.text.splitlines()]
        assert sorted(r["request_id"] for r in records) == sorted(
            f"b{i}" for i in range(6))
        vectors = {json.dumps(r["reward_vector"], sort_keys=True) for r in records}
        assert len(vectors) == 1

    def test_bad_record_does_not_abort_stream(self, client):
        lines = [json.dumps({"html": GOOD_SLIDE, "request_id": "ok1"}),
                 "this is not json",
                 json.dumps({"html": "", "request_id": "empty"}),
                 json.dumps({"html": GOOD_SLIDE, "request_id": "ok2"})]
        resp = client.post("/v1/score/batch", content="\n".join(lines))
        records = [json.loads(ln) for ln in resp.text.splitlines()]
        assert len(records) == 4
        by_id = {r["request_id"]: r for r in records}
        assert by_id["ok1"]["reward_vector"]["valid"]
        assert by_id["ok2"]["reward_vector"]["valid"]
        assert "error" in by_id["empty"]
        assert any("error" in r and r["request_id"] == "" for r in records)

    def test_bounded_concurrency(self):
        from slidescore.fixture_renderer import FixtureSession

        high_water = [0]
        active = [0]
        import threading
        lock = threading.Lock()

        class Counting(FixtureSession):
            def load_html(self, html, timeout_ms=15000):
                with lock:
                    active[0] += 1
                    high_water[0] = max(high_water[0], active[0])
                try:
                    time.sleep(0.002)
                    return super().load_html(html, timeout_ms)
                finally:
                    with lock:
                        active[0] -= 1

        app = create_app(ServiceConfig(pool_size=2), session_factory=Counting)
        with TestClient(app) as c:
            lines = [json.dumps({"html": GOOD_SLIDE, "request_id": f"c{i}"})
                     for i in range(12)]
            resp = c.post("/v1/score/batch", content="\n".join(lines))
            assert len(resp.text.splitlines()) == 12
        assert high_water[0] <= 2


class TestHealth:
    def test_reports_pool(self, client):
        body = client.get("/healthz").json()
        assert body["pool_size"] == 2
        assert body["sessions_alive"] == 2
        assert "version" in body

    def test_answers_quickly(self, client):
        t0 = time.monotonic()
        assert client.get("/healthz").status_code == 200
        assert time.monotonic() - t0 < 0.1


class TestSessionRecycling:
    def test_recycles_after_consecutive_failures(self):
        created = [0]
        from slidescore.fixture_renderer import FixtureSession

        def factory():
            created[0] += 1
            return FixtureSession()

        app = create_app(ServiceConfig(pool_size=1, timeout_ms=100),
                         session_factory=factory)
        with TestClient(app) as c:
            before = created[0]
            for _ in range(5):
                c.post("/v1/score", json={"html": '<div data-render-hang>x</div>'})
            assert created[0] > before  # pool was recycled
            # and the service still scores fine afterwards
            assert c.post("/v1/score",
                          json={"html": GOOD_SLIDE}).json()["reward_vector"]["valid"]


class TestConfig:
    def test_env_overrides(self, monkeypatch, tmp_path):
        cfg_file = tmp_path / "svc.yaml"
        cfg_file.write_text("pool_size: 7\naddr: 0.0.0.0:9000\n")
        monkeypatch.setenv("SLIDESCORE_CONFIG", str(cfg_file))
        monkeypatch.setenv("SLIDESCORE_POOL", "3")
        monkeypatch.setenv("SLIDESCORE_ADDR", "127.0.0.1:9999")
        cfg = load_service_config()
        assert cfg.pool_size == 3  # env beats file
        assert cfg.addr == "127.0.0.1:9999"

    def test_file_only(self, tmp_path, monkeypatch):
        monkeypatch.delenv("SLIDESCORE_ADDR", raising=False)
        monkeypatch.delenv("SLIDESCORE_POOL", raising=False)
        cfg_file = tmp_path / "svc.yaml"
        cfg_file.write_text("pool_size: 4\nqueue_bound: 99\n")
        cfg = load_service_config(str(cfg_file))
        assert cfg.pool_size == 4
        assert cfg.queue_bound == 99
