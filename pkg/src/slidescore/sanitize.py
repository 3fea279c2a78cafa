"""Reward-hacking countermeasures applied to HTML before rendering.

The aspect pipeline strips declarations that pin the page height
(min-height, overflow:hidden); the whitespace pipeline strips background
images and full-bleed background <img> elements.  Untouched regions pass
through byte-for-byte; an unparseable style block is left intact with a
warning rather than failing the render.
"""

from __future__ import annotations

import logging
import re

logger = logging.getLogger(__name__)

_STYLE_ATTR_RE = re.compile(
    r"""(<[a-zA-Z][^>]*?\bstyle\s*=\s*)("([^"]*)"|'([^']*)')""", re.S)
_STYLE_BLOCK_RE = re.compile(r"(<style\b[^>]*>)(.*?)(</style>)", re.S | re.I)
_IMG_TAG_RE = re.compile(r"<img\b[^>]*?/?>", re.S | re.I)


def split_declarations(text: str) -> list[str]:
    """Split a declaration list on top-level semicolons (url() and quote aware)."""
    parts = []
    depth = 0
    quote = None
    start = 0
    for i, ch in enumerate(text):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif ch == ";" and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def _declaration_parts(decl: str) -> tuple[str, str] | None:
    if ":" not in decl:
        return None
    prop, value = decl.split(":", 1)
    return prop.strip().lower(), value.strip().lower()


def _drops_for_aspect(decl: str) -> bool:
    parsed = _declaration_parts(decl)
    if parsed is None:
        return False
    prop, value = parsed
    if prop == "min-height":
        return True
    if prop in ("overflow", "overflow-y"):
        return "hidden" in value.split()
    return False


def _drops_for_whitespace(decl: str) -> bool:
    parsed = _declaration_parts(decl)
    if parsed is None:
        return False
    prop, value = parsed
    if prop == "background-image":
        return True
    # background shorthand smuggling an image in
    return prop == "background" and "url(" in value


def _filter_declarations(text: str, drop) -> str:
    decls = split_declarations(text)
    kept = [d for d in decls if not drop(d)]
    if len(kept) == len(decls):
        return text  # byte-for-byte when nothing matched
    return ";".join(d for d in kept if d.strip())


def _filter_stylesheet(css: str, drop) -> str:
    """Rewrite rule bodies of a style sheet; leave it intact if braces confuse us."""
    if css.count("{") != css.count("}"):
        logger.warning("unbalanced braces in style block; leaving it intact")
        return css
    out = []
    pos = 0
    while True:
        open_idx = css.find("{", pos)
        if open_idx == -1:
            out.append(css[pos:])
            break
        close_idx = css.find("}", open_idx)
        if close_idx == -1:
            logger.warning("unterminated rule body; leaving remainder intact")
            out.append(css[pos:])
            break
        nested = css.find("{", open_idx + 1)
        if nested != -1 and nested < close_idx:
            # at-rule (@media etc.): recurse into its body
            body_end = _matching_brace(css, open_idx)
            if body_end == -1:
                out.append(css[pos:])
                break
            out.append(css[pos:open_idx + 1])
            out.append(_filter_stylesheet(css[open_idx + 1:body_end], drop))
            out.append("}")
            pos = body_end + 1
            continue
        out.append(css[pos:open_idx + 1])
        out.append(_filter_declarations(css[open_idx + 1:close_idx], drop))
        out.append("}")
        pos = close_idx + 1
    return "".join(out)


def _matching_brace(css: str, open_idx: int) -> int:
    depth = 0
    for i in range(open_idx, len(css)):
        if css[i] == "{":
            depth += 1
        elif css[i] == "}":
            depth -= 1
            if depth == 0:
                return i
    return -1


def _sanitize(html: str, drop) -> str:
    def attr_sub(m):
        quoted = m.group(2)
        inner = m.group(3) if m.group(3) is not None else m.group(4)
        filtered = _filter_declarations(inner, drop)
        if filtered == inner:
            return m.group(0)
        return f"{m.group(1)}{quoted[0]}{filtered}{quoted[0]}"

    def block_sub(m):
        filtered = _filter_stylesheet(m.group(2), drop)
        if filtered == m.group(2):
            return m.group(0)
        return f"{m.group(1)}{filtered}{m.group(3)}"

    html = _STYLE_ATTR_RE.sub(attr_sub, html)
    return _STYLE_BLOCK_RE.sub(block_sub, html)


def sanitize_for_aspect(html: str) -> str:
    """Remove min-height and overflow(-y):hidden from inline and embedded CSS."""
    return _sanitize(html, _drops_for_aspect)


def _covers_fraction(value: str, canvas_px: float, frac: float = 0.95) -> bool:
    value = value.strip().lower()
    m = re.fullmatch(r"([\d.]+)(%|vw|vh|px)?", value)
    if not m:
        return False
    num = float(m.group(1))
    unit = m.group(2) or "px"
    if unit in ("%", "vw", "vh"):
        return num >= frac * 100
    return num >= frac * canvas_px


def _is_full_bleed_img(tag: str, canvas_w: float, canvas_h: float) -> bool:
    m = re.search(r"""\bstyle\s*=\s*("([^"]*)"|'([^']*)')""", tag, re.S)
    if not m:
        return False
    style = (m.group(2) or m.group(3) or "").lower()
    decls = dict(p for p in map(_declaration_parts, split_declarations(style)) if p)
    if decls.get("position") not in ("absolute", "fixed"):
        return False
    width_ok = _covers_fraction(decls.get("width", ""), canvas_w)
    height_ok = _covers_fraction(decls.get("height", ""), canvas_h)
    return width_ok and height_ok


def sanitize_for_whitespace(html: str, canvas_w: float = 1280.0,
                            canvas_h: float = 720.0) -> str:
    """Remove background-image CSS and full-bleed background <img> elements."""
    html = _sanitize(html, _drops_for_whitespace)
    return _IMG_TAG_RE.sub(
        lambda m: "" if _is_full_bleed_img(m.group(0), canvas_w, canvas_h) else m.group(0),
        html)
