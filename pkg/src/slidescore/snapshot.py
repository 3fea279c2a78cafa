"""Layout snapshot model: the probe's wire format parsed into Python objects.

The probe emits one JSON object per page:

    {"page_extent": {"content_height_px": int, "viewport_width_px": int},
     "nodes": [RawNode...], "probe_version": str, ...}

Field names below are part of the wire contract shared with the in-page
probe script and must not drift.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

POSITION_MODES = ("static", "relative", "absolute", "fixed", "sticky")


class SnapshotError(ValueError):
    pass


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in CSS pixels, document-origin coordinates."""

    x: float
    y: float
    w: float
    h: float

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def intersection_area(self, other: "BBox") -> float:
        iw = min(self.x2, other.x2) - max(self.x, other.x)
        ih = min(self.y2, other.y2) - max(self.y, other.y)
        return max(iw, 0.0) * max(ih, 0.0)

    def contains(self, other: "BBox", slack: float = 0.0) -> bool:
        return (other.x >= self.x - slack and other.y >= self.y - slack
                and other.x2 <= self.x2 + slack and other.y2 <= self.y2 + slack)


@dataclass
class RawNode:
    node_index: int
    parent_index: int | None
    tag_name: str
    bbox: BBox
    visible: bool = True
    opacity: float = 1.0
    position_mode: str = "static"
    z_index: int | None = None  # None encodes CSS "auto"
    has_visible_text: bool = False
    is_image_like: bool = False
    is_svg_primitive: bool = False
    background_is_transparent: bool = False
    class_hint: str = ""


@dataclass
class LayoutSnapshot:
    canvas_width_px: int
    canvas_height_px: int
    nodes: list[RawNode] = field(default_factory=list)
    truncated: bool = False

    def children_of(self, index: int | None) -> list[RawNode]:
        return [n for n in self.nodes if n.parent_index == index]

    def ancestors_of(self, index: int) -> list[int]:
        chain = []
        parent = self.nodes[index].parent_index
        while parent is not None:
            chain.append(parent)
            parent = self.nodes[parent].parent_index
        return chain


def _parse_bbox(obj) -> BBox:
    try:
        box = BBox(float(obj["x"]), float(obj["y"]), float(obj["w"]), float(obj["h"]))
    except (KeyError, TypeError) as exc:
        raise SnapshotError(f"malformed bbox: {obj!r}") from exc
    for v in (box.x, box.y, box.w, box.h):
        if not math.isfinite(v):
            raise SnapshotError(f"non-finite bbox coordinate in {obj!r}")
    if box.w < 0 or box.h < 0:
        raise SnapshotError(f"negative bbox extent in {obj!r}")
    return box


def parse_raw_node(obj: dict, position: int) -> RawNode:
    if obj.get("node_index") != position:
        raise SnapshotError(
            f"node_index {obj.get('node_index')} does not match list position {position}")
    parent = obj.get("parent_index")
    if parent is not None:
        parent = int(parent)
        if not 0 <= parent < position:
            raise SnapshotError(
                f"node {position}: parent_index {parent} must refer to an earlier node")
    mode = obj.get("position_mode", "static")
    if mode not in POSITION_MODES:
        raise SnapshotError(f"node {position}: unknown position_mode {mode!r}")
    opacity = float(obj.get("opacity", 1.0))
    if not 0.0 <= opacity <= 1.0:
        raise SnapshotError(f"node {position}: opacity {opacity} outside [0, 1]")
    z = obj.get("z_index")
    return RawNode(
        node_index=position,
        parent_index=parent,
        tag_name=str(obj.get("tag_name", "")).lower(),
        bbox=_parse_bbox(obj.get("bbox", {})),
        visible=bool(obj.get("visible", True)),
        opacity=opacity,
        position_mode=mode,
        z_index=None if z in (None, "auto") else int(z),
        has_visible_text=bool(obj.get("has_visible_text", False)),
        is_image_like=bool(obj.get("is_image_like", False)),
        is_svg_primitive=bool(obj.get("is_svg_primitive", False)),
        background_is_transparent=bool(obj.get("background_is_transparent", False)),
        class_hint=str(obj.get("class_hint", ""))[:256],
    )


def parse_probe_payload(payload: dict | str | bytes) -> dict:
    """Validate a raw probe payload; returns the parsed dict."""
    if isinstance(payload, (str, bytes)):
        payload = json.loads(payload)
    if not isinstance(payload, dict):
        raise SnapshotError("probe payload must be a JSON object")
    extent = payload.get("page_extent")
    if not isinstance(extent, dict):
        raise SnapshotError("probe payload missing page_extent")
    if int(extent.get("content_height_px", -1)) < 0:
        raise SnapshotError("content_height_px must be >= 0")
    if int(extent.get("viewport_width_px", 0)) <= 0:
        raise SnapshotError("viewport_width_px must be positive")
    if not isinstance(payload.get("nodes"), list):
        raise SnapshotError("probe payload missing nodes list")
    return payload


def snapshot_from_probe(payload: dict | str | bytes,
                        canvas_width_px: int,
                        canvas_height_px: int) -> LayoutSnapshot:
    """Build a LayoutSnapshot from a probe payload and final canvas size."""
    payload = parse_probe_payload(payload)
    nodes = [parse_raw_node(obj, i) for i, obj in enumerate(payload["nodes"])]
    return LayoutSnapshot(
        canvas_width_px=int(canvas_width_px),
        canvas_height_px=int(canvas_height_px),
        nodes=nodes,
        truncated=bool(payload.get("truncated", False)),
    )


def node_to_wire(node: RawNode) -> dict:
    obj = asdict(node)
    obj["bbox"] = {"x": node.bbox.x, "y": node.bbox.y, "w": node.bbox.w, "h": node.bbox.h}
    if node.z_index is None:
        obj["z_index"] = "auto"
    return obj


def snapshot_to_wire(snap: LayoutSnapshot) -> dict:
    return {
        "canvas": {"width_px": snap.canvas_width_px, "height_px": snap.canvas_height_px},
        "nodes": [node_to_wire(n) for n in snap.nodes],
        "truncated": snap.truncated,
    }
