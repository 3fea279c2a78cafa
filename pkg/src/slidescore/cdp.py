"""Chrome DevTools Protocol render backend.

A minimal, dependency-free CDP client: raw RFC 6455 WebSocket over a
socket, JSON command/response correlation, and the handful of domains the
gateway needs (Page, Emulation, Runtime).  Pages are loaded through
base64 data: URLs so no web server is required.

Use ``chrome_session_factory(...)`` as the RenderGateway session factory
when a Chrome/Chromium binary is available.
"""

from __future__ import annotations

import base64
import io
import json
import logging
import os
import secrets
import shutil
import socket
import struct
import subprocess
import tempfile
import time
import urllib.request
from importlib import resources

import numpy as np

from .gateway import NavigationFailed, NavigationTimeout

logger = logging.getLogger(__name__)

CHROME_CANDIDATES = (
    "chromium", "chromium-browser", "google-chrome", "google-chrome-stable", "chrome",
)
_WS_MAGIC = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def probe_script(max_nodes: int = 5000) -> str:
    text = resources.files("slidescore").joinpath("assets/probe.js").read_text()
    return text.replace("__MAX_NODES__", str(int(max_nodes)))


def find_chrome() -> str | None:
    env = os.environ.get("SLIDESCORE_CHROME")
    if env:
        return env
    for name in CHROME_CANDIDATES:
        path = shutil.which(name)
        if path:
            return path
    return None


class WebSocketClient:
    """Client-side WebSocket: handshake, masked send, frame reassembly."""

    def __init__(self, url: str, timeout: float = 30.0):
        # ws://host:port/path
        rest = url.split("://", 1)[1]
        hostport, _, path = rest.partition("/")
        host, _, port = hostport.partition(":")
        self.sock = socket.create_connection((host, int(port or 80)), timeout=timeout)
        key = base64.b64encode(secrets.token_bytes(16)).decode()
        request = (
            f"GET /{path} HTTP/1.1\r\n"
            f"Host: {hostport}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n")
        self.sock.sendall(request.encode())
        response = self._read_until(b"\r\n\r\n")
        if b" 101 " not in response.split(b"\r\n", 1)[0]:
            raise NavigationFailed(f"websocket handshake rejected: {response[:120]!r}")
        self._buffer = b""

    def _read_until(self, marker: bytes) -> bytes:
        data = b""
        while marker not in data:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("socket closed during handshake")
            data += chunk
        return data

    def _read_exact(self, n: int) -> bytes:
        while len(self._buffer) < n:
            chunk = self.sock.recv(max(4096, n - len(self._buffer)))
            if not chunk:
                raise ConnectionError("socket closed")
            self._buffer += chunk
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def send_text(self, payload: str):
        data = payload.encode()
        mask = secrets.token_bytes(4)
        header = bytearray([0x81])  # FIN + text opcode
        n = len(data)
        if n < 126:
            header.append(0x80 | n)
        elif n < 1 << 16:
            header.append(0x80 | 126)
            header += struct.pack(">H", n)
        else:
            header.append(0x80 | 127)
            header += struct.pack(">Q", n)
        header += mask
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(data))
        self.sock.sendall(bytes(header) + masked)

    def recv_text(self, deadline: float) -> str:
        message = b""
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise NavigationTimeout("websocket receive deadline exceeded")
            self.sock.settimeout(remaining)
            try:
                b0, b1 = self._read_exact(2)
            except socket.timeout as exc:
                raise NavigationTimeout("websocket receive timed out") from exc
            opcode = b0 & 0x0F
            fin = b0 & 0x80
            length = b1 & 0x7F
            if length == 126:
                length = struct.unpack(">H", self._read_exact(2))[0]
            elif length == 127:
                length = struct.unpack(">Q", self._read_exact(8))[0]
            payload = self._read_exact(length)
            if opcode == 0x9:  # ping -> pong
                self._send_control(0xA, payload)
                continue
            if opcode == 0x8:
                raise ConnectionError("websocket closed by peer")
            if opcode in (0x1, 0x0):
                message += payload
                if fin:
                    return message.decode()

    def _send_control(self, opcode: int, payload: bytes):
        mask = secrets.token_bytes(4)
        header = bytes([0x80 | opcode, 0x80 | len(payload)]) + mask
        self.sock.sendall(header + bytes(b ^ mask[i % 4] for i, b in enumerate(payload)))

    def close(self):
        try:
            self._send_control(0x8, b"")
        except OSError:
            pass
        self.sock.close()


class ChromeProcess:
    """One headless browser process shared by its sessions (tabs)."""

    def __init__(self, binary: str | None = None, port: int = 0):
        binary = binary or find_chrome()
        if binary is None:
            raise RuntimeError(
                "no Chrome/Chromium binary found; set SLIDESCORE_CHROME")
        if port == 0:
            with socket.socket() as s:
                s.bind(("127.0.0.1", 0))
                port = s.getsockname()[1]
        self.port = port
        self.profile_dir = tempfile.mkdtemp(prefix="slidescore-chrome-")
        self.proc = subprocess.Popen(
            [binary, "--headless=new", "--no-sandbox", "--disable-gpu",
             "--hide-scrollbars", "--force-device-scale-factor=1",
             f"--remote-debugging-port={port}",
             f"--user-data-dir={self.profile_dir}", "about:blank"],
            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
        self._wait_ready()

    def _wait_ready(self, timeout: float = 20.0):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            try:
                self.endpoint_json("/json/version")
                return
            except OSError:
                time.sleep(0.1)
        raise RuntimeError("browser devtools endpoint never came up")

    def endpoint_json(self, path: str, method: str = "GET"):
        req = urllib.request.Request(
            f"http://127.0.0.1:{self.port}{path}", method=method)
        with urllib.request.urlopen(req, timeout=10) as resp:
            return json.loads(resp.read())

    def new_tab_ws_url(self) -> str:
        # newer Chrome requires PUT for /json/new
        try:
            info = self.endpoint_json("/json/new?about:blank", method="PUT")
        except OSError:
            info = self.endpoint_json("/json/new?about:blank")
        return info["webSocketDebuggerUrl"]

    def close(self):
        self.proc.terminate()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
        shutil.rmtree(self.profile_dir, ignore_errors=True)


class CdpSession:
    """Render-session backend over one browser tab."""

    def __init__(self, browser: ChromeProcess):
        self.browser = browser
        self.ws = WebSocketClient(browser.new_tab_ws_url())
        self.alive = True
        self._next_id = 1
        self._events: list[dict] = []
        self._viewport = (1280, 720)
        self.command("Page.enable")

    def command(self, method: str, params: dict | None = None,
                timeout_ms: int = 15000) -> dict:
        msg_id = self._next_id
        self._next_id += 1
        self.ws.send_text(json.dumps(
            {"id": msg_id, "method": method, "params": params or {}}))
        deadline = time.monotonic() + timeout_ms / 1000.0
        while True:
            obj = json.loads(self.ws.recv_text(deadline))
            if obj.get("id") == msg_id:
                if "error" in obj:
                    raise NavigationFailed(f"{method}: {obj['error']}")
                return obj.get("result", {})
            if "method" in obj:
                self._events.append(obj)

    def _wait_event(self, name: str, timeout_ms: int):
        for i, ev in enumerate(self._events):
            if ev["method"] == name:
                del self._events[i]
                return ev
        deadline = time.monotonic() + timeout_ms / 1000.0
        while True:
            obj = json.loads(self.ws.recv_text(deadline))
            if obj.get("method") == name:
                return obj
            if "method" in obj:
                self._events.append(obj)

    # -- backend protocol --------------------------------------------------

    def set_viewport(self, width: int, height: int):
        self._viewport = (int(width), int(height))
        self.command("Emulation.setDeviceMetricsOverride", {
            "width": int(width), "height": int(height),
            "deviceScaleFactor": 1, "mobile": False})

    def load_html(self, html: str, timeout_ms: int = 15000):
        url = "data:text/html;base64," + base64.b64encode(html.encode()).decode()
        try:
            self.command("Page.navigate", {"url": url}, timeout_ms)
            self._wait_event("Page.loadEventFired", timeout_ms)
        except NavigationTimeout:
            raise
        except (ConnectionError, OSError) as exc:
            self.alive = False
            raise NavigationFailed(str(exc)) from exc

    def evaluate_probe(self, max_nodes: int = 5000) -> dict:
        result = self.command("Runtime.evaluate", {
            "expression": probe_script(max_nodes), "returnByValue": True})
        value = result.get("result", {}).get("value")
        if not isinstance(value, dict):
            raise NavigationFailed(f"probe returned {result!r}")
        return value

    def screenshot(self) -> np.ndarray:
        from PIL import Image

        result = self.command("Page.captureScreenshot", {"format": "png"})
        raw = base64.b64decode(result["data"])
        img = Image.open(io.BytesIO(raw)).convert("RGB")
        return np.asarray(img)

    def close(self):
        self.alive = False
        try:
            self.ws.close()
        except OSError:
            pass


def chrome_session_factory(browser: ChromeProcess | None = None):
    """Returns a factory suitable for RenderGateway(session_factory=...)."""
    shared = browser or ChromeProcess()

    def factory():
        return CdpSession(shared)

    factory.browser = shared
    return factory
