"""Deterministic in-process renderer for a small HTML/CSS subset.

Implements the render-session contract (navigate / viewport / probe /
screenshot) without a browser, so pipelines, the session pool, and the
HTTP service can run end to end in environments with no headless browser
and in tests that need exact reproducibility.

Supported styling is intentionally narrow: inline styles only, px and %
lengths, block stacking, absolute/fixed positioning, background colors,
background-image (painted as texture), min-height, overflow:hidden
clipping, display/visibility/opacity.  Text and images paint as seeded
noise so content regions carry variance for the pixel metrics.

Test hooks: an element bearing ``data-render-hang`` simulates a navigation
timeout; ``data-render-fail`` simulates a navigation failure.
"""

from __future__ import annotations

import math
import re
import zlib
from dataclasses import dataclass, field
from html.parser import HTMLParser

import numpy as np

from .sanitize import split_declarations

DEFAULT_FONT_PX = 16.0
LINE_HEIGHT = 1.25
VOID_TAGS = {"img", "br", "hr", "meta", "link", "input", "source"}

NAMED_COLORS = {
    "white": (255, 255, 255), "black": (0, 0, 0), "red": (255, 0, 0),
    "green": (0, 128, 0), "blue": (0, 0, 255), "gray": (128, 128, 128),
    "grey": (128, 128, 128), "yellow": (255, 255, 0), "orange": (255, 165, 0),
    "transparent": None,
}


class RenderHang(Exception):
    """Simulated never-finishing navigation."""


class RenderNavigationFailure(Exception):
    """Simulated protocol-level navigation failure."""


@dataclass
class Element:
    tag: str
    attrs: dict
    children: list = field(default_factory=list)
    text: str = ""

    @property
    def style(self) -> dict:
        decls = split_declarations(self.attrs.get("style", ""))
        out = {}
        for d in decls:
            if ":" in d:
                prop, value = d.split(":", 1)
                out[prop.strip().lower()] = value.strip().lower()
        return out


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__()
        self.root = Element("html", {})
        self.body = None
        self.stack = [self.root]

    def handle_starttag(self, tag, attrs):
        el = Element(tag.lower(), dict(attrs))
        self.stack[-1].children.append(el)
        if tag.lower() == "body" and self.body is None:
            self.body = el
        if tag.lower() not in VOID_TAGS:
            self.stack.append(el)

    def handle_startendtag(self, tag, attrs):
        self.stack[-1].children.append(Element(tag.lower(), dict(attrs)))

    def handle_endtag(self, tag):
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag.lower():
                del self.stack[i:]
                break

    def handle_data(self, data):
        if data.strip():
            self.stack[-1].text += data


def parse_html(html: str) -> Element:
    """Parse to an element tree rooted at <body> (synthesized if absent)."""
    builder = _TreeBuilder()
    builder.feed(html)
    if builder.body is not None:
        return builder.body
    body = Element("body", {})
    body.children = builder.root.children
    # plain text with no markup becomes body text
    body.text = "".join(c.text for c in [builder.root])
    for el in list(body.children):
        if el.tag in ("html", "head"):
            body.children.remove(el)
            body.children.extend(el.children)
    return body


def _parse_len(value: str | None, relative_to: float) -> float | None:
    if not value:
        return None
    m = re.fullmatch(r"(-?[\d.]+)(px|%|vw|vh)?", value.strip())
    if not m:
        return None
    num = float(m.group(1))
    unit = m.group(2) or "px"
    if unit == "%":
        return num / 100.0 * relative_to
    if unit in ("vw", "vh"):
        return num / 100.0 * relative_to
    return num


@dataclass
class LayoutBox:
    element: Element
    x: float
    y: float
    w: float
    h: float
    visible: bool
    opacity: float
    clipped: bool  # inside an overflow:hidden ancestor
    children: list = field(default_factory=list)


class FixtureRenderer:
    """Layout + paint for one parsed document at a given viewport."""

    def __init__(self, html: str, viewport_w: int, viewport_h: int):
        if "data-render-hang" in html:
            raise RenderHang("fixture requested a hang")
        if "data-render-fail" in html:
            raise RenderNavigationFailure("fixture requested navigation failure")
        self.viewport_w = viewport_w
        self.viewport_h = viewport_h
        self.body = parse_html(html)
        self.root_box = self._layout(self.body, 0.0, 0.0, float(viewport_w), clipped=False)

    # -- layout ------------------------------------------------------------

    def _layout(self, el: Element, x: float, y: float, avail_w: float,
                clipped: bool) -> LayoutBox:
        style = el.style
        display_none = style.get("display") == "none"
        visible = not display_none and style.get("visibility") != "hidden"
        opacity = _parse_len(style.get("opacity"), 1.0)
        opacity = 1.0 if opacity is None else min(max(opacity, 0.0), 1.0)

        margin = _parse_len(style.get("margin"), avail_w) or 0.0
        padding = _parse_len(style.get("padding"), avail_w) or 0.0
        width = _parse_len(style.get("width"), avail_w)
        if width is None:
            width = max(avail_w - 2 * margin, 0.0)
        explicit_h = _parse_len(style.get("height"), float(self.viewport_h))
        min_h = _parse_len(style.get("min-height"), float(self.viewport_h))

        pos = style.get("position", "static")
        if pos in ("absolute", "fixed"):
            x = _parse_len(style.get("left"), float(self.viewport_w)) or 0.0
            y = _parse_len(style.get("top"), float(self.viewport_h)) or 0.0
        else:
            x += margin
            y += margin

        box = LayoutBox(el, x, y, width, 0.0, visible, opacity, clipped)
        clips = style.get("overflow") == "hidden" or style.get("overflow-y") == "hidden"

        content_w = max(width - 2 * padding, 1.0)
        cursor = y + padding
        content_bottom = cursor
        if el.text.strip():
            chars_per_line = max(1, int(content_w / (0.5 * DEFAULT_FONT_PX)))
            lines = math.ceil(len(el.text.strip()) / chars_per_line)
            content_bottom = cursor + lines * DEFAULT_FONT_PX * LINE_HEIGHT
            cursor = content_bottom
        if el.tag == "img" and explicit_h is None:
            explicit_h = 150.0  # browser default replaced-element size-ish
        for child in el.children:
            cstyle = child.style
            if cstyle.get("display") == "none":
                cbox = LayoutBox(child, x, cursor, 0.0, 0.0, False, 0.0,
                                 clipped or clips)
                box.children.append(cbox)
                continue
            child_clipped = clipped or clips
            if cstyle.get("position") in ("absolute", "fixed"):
                cbox = self._layout(child, 0.0, 0.0, float(self.viewport_w), child_clipped)
                box.children.append(cbox)
                continue
            cbox = self._layout(child, x + padding, cursor, content_w, child_clipped)
            cmargin = _parse_len(cstyle.get("margin"), content_w) or 0.0
            cursor = cbox.y + cbox.h + cmargin
            content_bottom = max(content_bottom, cursor)
            box.children.append(cbox)

        height = explicit_h if explicit_h is not None else content_bottom - y + padding
        if min_h is not None:
            height = max(height, min_h)
        box.h = max(height, 0.0)
        # clipping bounds descendants' painted/overflow extent to this box
        if clips:
            self._clip_descendants(box)
        return box

    def _clip_descendants(self, box: LayoutBox):
        for child in box.children:
            child.clipped = True
            self._clip_descendants(child)

    # -- extent ------------------------------------------------------------

    def content_height(self) -> int:
        bottom = 0.0

        def visit(box: LayoutBox):
            nonlocal bottom
            if box.visible and not box.clipped:
                bottom = max(bottom, box.y + box.h)
            for c in box.children:
                visit(c)

        visit(self.root_box)
        return int(math.ceil(bottom))

    # -- probe -------------------------------------------------------------

    def probe_payload(self, max_nodes: int = 5000) -> dict:
        nodes = []
        truncated = False

        def emit(box: LayoutBox, parent_index):
            nonlocal truncated
            if len(nodes) >= max_nodes:
                truncated = True
                return
            el = box.element
            style = el.style
            index = len(nodes)
            opacity = box.opacity
            visible = box.visible and opacity > 0 and style.get("display") != "none"
            bg = style.get("background") or style.get("background-color")
            nodes.append({
                "node_index": index,
                "parent_index": parent_index,
                "tag_name": el.tag,
                "bbox": {"x": box.x, "y": box.y, "w": box.w, "h": box.h},
                "visible": visible,
                "opacity": opacity,
                "position_mode": style.get("position", "static")
                if style.get("position") in ("static", "relative", "absolute", "fixed", "sticky")
                else "static",
                "z_index": int(style["z-index"]) if style.get("z-index", "auto").lstrip("-").isdigit() else "auto",
                "has_visible_text": bool(el.text.strip()),
                "is_image_like": el.tag in ("img", "picture", "canvas", "video"),
                "is_svg_primitive": False,
                "background_is_transparent": bg in (None, "transparent"),
                "class_hint": el.attrs.get("class", "")[:256],
            })
            for c in box.children:
                emit(c, index)

        emit(self.root_box, None)
        return {
            "page_extent": {
                "content_height_px": self.content_height(),
                "viewport_width_px": self.viewport_w,
            },
            "nodes": nodes,
            "truncated": truncated,
            "cross_origin_frames_skipped": 0,
            "shadow_dom_present": False,
            "error": None,
            "probe_version": "1.0.0",
        }

    # -- paint -------------------------------------------------------------

    def screenshot(self) -> np.ndarray:
        img = np.full((self.viewport_h, self.viewport_w, 3), 255, dtype=np.uint8)
        self._paint(self.root_box, img)
        return img

    def _paint(self, box: LayoutBox, img: np.ndarray):
        if not box.visible or box.opacity <= 0.02:
            return
        x0 = int(max(box.x, 0))
        y0 = int(max(box.y, 0))
        x1 = int(min(box.x + box.w, self.viewport_w))
        y1 = int(min(box.y + box.h, self.viewport_h))
        el = box.element
        style = el.style
        if x1 > x0 and y1 > y0:
            color = _parse_color(style.get("background-color") or style.get("background"))
            if color is not None:
                img[y0:y1, x0:x1] = color
            if "url(" in (style.get("background-image", "") + style.get("background", "")):
                _noise_fill(img, x0, y0, x1, y1, box, amplitude=90)
            if el.tag in ("img", "canvas", "video", "svg"):
                _noise_fill(img, x0, y0, x1, y1, box, amplitude=110)
            if el.text.strip():
                ty1 = min(y1, y0 + int(len(el.text.strip()) * 2 + DEFAULT_FONT_PX * LINE_HEIGHT))
                _text_fill(img, x0, y0, x1, ty1, box)
        for c in box.children:
            self._paint(c, img)


def _seed_for(box: LayoutBox) -> int:
    # crc32, not hash(): stable across processes so renders are reproducible
    key = f"{box.element.tag}:{round(box.x)}:{round(box.y)}:{round(box.w)}:{round(box.h)}"
    return zlib.crc32(key.encode())


def _noise_fill(img, x0, y0, x1, y1, box, amplitude):
    rng = np.random.default_rng(_seed_for(box))
    patch = rng.integers(128 - amplitude, 128 + amplitude,
                         (y1 - y0, x1 - x0, 3), dtype=np.int16)
    img[y0:y1, x0:x1] = np.clip(patch, 0, 255).astype(np.uint8)


def _text_fill(img, x0, y0, x1, y1, box):
    if x1 <= x0 or y1 <= y0:
        return
    rng = np.random.default_rng(_seed_for(box) ^ 0x5F5F)
    ink = rng.random((y1 - y0, x1 - x0)) < 0.35
    region = img[y0:y1, x0:x1]
    region[ink] = rng.integers(0, 80, (int(ink.sum()), 3), dtype=np.int16).astype(np.uint8)


def _parse_color(value: str | None):
    if not value:
        return None
    value = value.strip().lower()
    if value in NAMED_COLORS:
        return NAMED_COLORS[value]
    m = re.fullmatch(r"#([0-9a-f]{3})", value)
    if m:
        return tuple(int(c * 2, 16) for c in m.group(1))
    m = re.fullmatch(r"#([0-9a-f]{6})", value)
    if m:
        h = m.group(1)
        return tuple(int(h[i:i + 2], 16) for i in (0, 2, 4))
    m = re.fullmatch(r"rgb\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)", value)
    if m:
        return tuple(min(int(g), 255) for g in m.groups())
    return None


class FixtureSession:
    """Render-session backend over FixtureRenderer.

    One session renders one page at a time; the gateway pool leases it
    exclusively, matching the browser-session contract.
    """

    def __init__(self):
        self.alive = True
        self._renderer: FixtureRenderer | None = None
        self._viewport = (1280, 720)

    def set_viewport(self, width: int, height: int):
        self._viewport = (int(width), int(height))
        if self._renderer is not None:
            self._renderer = FixtureRenderer(self._html, *self._viewport)

    def load_html(self, html: str, timeout_ms: int = 15000):
        from .gateway import NavigationFailed, NavigationTimeout

        if not self.alive:
            raise RuntimeError("session is dead")
        try:
            renderer = FixtureRenderer(html, *self._viewport)
        except RenderHang as exc:
            raise NavigationTimeout(str(exc)) from exc
        except RenderNavigationFailure as exc:
            self.alive = False  # a hard navigation failure kills the session
            raise NavigationFailed(str(exc)) from exc
        self._html = html
        self._renderer = renderer

    def evaluate_probe(self, max_nodes: int = 5000) -> dict:
        if self._renderer is None:
            raise RuntimeError("no page loaded")
        return self._renderer.probe_payload(max_nodes)

    def screenshot(self) -> np.ndarray:
        if self._renderer is None:
            raise RuntimeError("no page loaded")
        return self._renderer.screenshot()

    def close(self):
        self.alive = False
