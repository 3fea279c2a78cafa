"""Element-collision and visual-imbalance metrics over layout snapshots.

Works purely on bounding boxes and the node forest: visual-unit extraction,
three collision event classes (overlap / parent escape / canvas overflow),
a reweighted collision score, the area-weighted visual centroid, and the
ellipse-normalized imbalance distance.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .snapshot import BBox, LayoutSnapshot

NON_SEMANTIC_TAGS = {"script", "style", "meta", "link", "head", "title", "noscript", "template"}
CONTAINER_TAGS = {
    "body", "div", "section", "article", "main", "header", "footer",
    "aside", "nav", "ul", "ol", "table", "figure", "form",
}
EXEMPT_CLASS_PATTERN = re.compile(r"watermark|badge|annotation|ribbon|corner-label", re.I)

KIND_TEXT = "text"
KIND_IMAGE = "image"
KIND_CONTAINER = "container"
KIND_VECTOR = "vector"
KIND_OTHER = "other"


class NoContentError(ValueError):
    """Raised when a snapshot yields zero non-exempt visual units."""


@dataclass(frozen=True)
class GeometryConfig:
    min_unit_area_px2: float = 16.0
    min_opacity: float = 0.05
    overlap_min_area_px2: float = 64.0
    overlap_min_frac: float = 0.02
    escape_slack_px: float = 2.0
    overflow_slack_px: float = 2.0
    weight_overlap: float = 1.0
    weight_parent_escape: float = 0.5
    weight_canvas_overflow: float = 1.5
    # exemption heuristics, individually toggleable
    exempt_by_class_hint: bool = True
    exempt_weak_transparent: bool = True
    exempt_corner_badges: bool = True
    corner_area_frac: float = 0.002
    x_tol: float = 0.05
    y_tol: float = 0.15

    def weight_for(self, kind: str) -> float:
        return {"overlap": self.weight_overlap,
                "parent_escape": self.weight_parent_escape,
                "canvas_overflow": self.weight_canvas_overflow}[kind]


@dataclass
class VisualUnit:
    unit_id: int
    source_node: int
    bbox: BBox
    kind: str
    exempt: bool = False
    ancestors: frozenset = field(default_factory=frozenset)  # source-node indices

    @property
    def area_px2(self) -> float:
        return self.bbox.area


@dataclass
class CollisionEvent:
    kind: str  # overlap | parent_escape | canvas_overflow
    unit_a: int
    unit_b: int | None
    overlap_area_px2: float
    reference_area_px2: float
    severity_weight: float

    @property
    def ratio(self) -> float:
        return min(1.0, self.overlap_area_px2 / self.reference_area_px2)


def _in_corner(bbox: BBox, canvas_w: float, canvas_h: float) -> bool:
    cx, cy = bbox.x + bbox.w / 2, bbox.y + bbox.h / 2
    return (cx < canvas_w * 0.15 or cx > canvas_w * 0.85) and \
           (cy < canvas_h * 0.15 or cy > canvas_h * 0.85)


def _classify(node, has_children: bool) -> str:
    if node.tag_name == "svg":
        return KIND_VECTOR
    if node.is_image_like:
        return KIND_IMAGE
    if node.has_visible_text:
        return KIND_TEXT
    if node.tag_name in CONTAINER_TAGS or has_children:
        return KIND_CONTAINER
    return KIND_OTHER


def extract_visual_units(snapshot: LayoutSnapshot,
                         config: GeometryConfig = GeometryConfig()) -> list[VisualUnit]:
    """Reduce a node forest to perceptually meaningful units.

    Drops invisible / near-transparent nodes, non-semantic tags, and
    sub-16px2 fragments; collapses every SVG subtree into one unit at its
    root; flags watermark-like units as exempt.
    """
    canvas_area = snapshot.canvas_width_px * snapshot.canvas_height_px
    child_count = {}
    for n in snapshot.nodes:
        if n.parent_index is not None:
            child_count[n.parent_index] = child_count.get(n.parent_index, 0) + 1

    # nodes inside an <svg> subtree never become their own units
    svg_descendant = set()
    svg_roots = {n.node_index for n in snapshot.nodes if n.tag_name == "svg"}
    for n in snapshot.nodes:
        if n.parent_index in svg_roots or n.parent_index in svg_descendant:
            svg_descendant.add(n.node_index)

    units: list[VisualUnit] = []
    for n in snapshot.nodes:
        if n.node_index in svg_descendant or n.is_svg_primitive:
            continue
        if not n.visible or n.opacity < config.min_opacity:
            continue
        if n.tag_name in NON_SEMANTIC_TAGS:
            continue
        if n.bbox.area < config.min_unit_area_px2:
            continue
        exempt = False
        if config.exempt_by_class_hint and EXEMPT_CLASS_PATTERN.search(n.class_hint):
            exempt = True
        if config.exempt_weak_transparent and n.background_is_transparent and n.opacity < 0.2:
            exempt = True
        if (config.exempt_corner_badges and canvas_area > 0
                and n.bbox.area < config.corner_area_frac * canvas_area
                and _in_corner(n.bbox, snapshot.canvas_width_px, snapshot.canvas_height_px)):
            exempt = True
        units.append(VisualUnit(
            unit_id=len(units),
            source_node=n.node_index,
            bbox=n.bbox,
            kind=_classify(n, child_count.get(n.node_index, 0) > 0),
            exempt=exempt,
            ancestors=frozenset(snapshot.ancestors_of(n.node_index)),
        ))
    return units


def _related(a: VisualUnit, b: VisualUnit) -> bool:
    return a.source_node in b.ancestors or b.source_node in a.ancestors


def _overlap_suppressed(a: VisualUnit, b: VisualUnit) -> bool:
    if a.exempt and b.exempt:
        return True
    if a.exempt:  # exempt decorations only count when occluding main content
        return b.kind not in (KIND_TEXT, KIND_IMAGE)
    if b.exempt:
        return a.kind not in (KIND_TEXT, KIND_IMAGE)
    return False


def detect_collisions(units: list[VisualUnit],
                      canvas_w: float, canvas_h: float,
                      config: GeometryConfig = GeometryConfig()) -> list[CollisionEvent]:
    """Emit all three collision-event classes for a unit set.

    Events are canonically ordered: overlaps first (unit_a < unit_b), then
    escapes, then overflows, each by unit id.
    """
    if canvas_w <= 0 or canvas_h <= 0:
        raise ValueError("canvas dimensions must be positive")
    events: list[CollisionEvent] = []

    for i, a in enumerate(units):
        for b in units[i + 1:]:
            if _related(a, b) or _overlap_suppressed(a, b):
                continue
            inter = a.bbox.intersection_area(b.bbox)
            smaller = min(a.area_px2, b.area_px2)
            if inter > max(config.overlap_min_area_px2, config.overlap_min_frac * smaller):
                events.append(CollisionEvent(
                    "overlap", a.unit_id, b.unit_id, inter, smaller,
                    config.weight_overlap))

    by_source = {u.source_node: u for u in units}
    for u in units:
        if u.exempt:
            continue
        parent = _nearest_container_ancestor(u, by_source)
        if parent is not None and _escapes(u.bbox, parent.bbox, config.escape_slack_px):
            escaped = u.area_px2 - u.bbox.intersection_area(parent.bbox)
            if escaped > 0:
                events.append(CollisionEvent(
                    "parent_escape", u.unit_id, parent.unit_id,
                    escaped, u.area_px2, config.weight_parent_escape))

    canvas = BBox(0.0, 0.0, float(canvas_w), float(canvas_h))
    for u in units:
        if u.exempt:
            continue
        if _escapes(u.bbox, canvas, config.overflow_slack_px):
            off = u.area_px2 - u.bbox.intersection_area(canvas)
            if off > 0:
                events.append(CollisionEvent(
                    "canvas_overflow", u.unit_id, None,
                    off, u.area_px2, config.weight_canvas_overflow))
    return events


def _nearest_container_ancestor(u: VisualUnit, by_source: dict) -> VisualUnit | None:
    # ancestors are source-node indices; walk nearest-first
    for idx in sorted(u.ancestors, reverse=True):
        cand = by_source.get(idx)
        if cand is not None and cand.kind == KIND_CONTAINER:
            return cand
    return None


def _escapes(inner: BBox, outer: BBox, slack: float) -> bool:
    return (inner.x < outer.x - slack or inner.y < outer.y - slack
            or inner.x2 > outer.x2 + slack or inner.y2 > outer.y2 + slack)


def collision_score(events: list[CollisionEvent],
                    weights: dict[str, float] | None = None) -> float:
    """Severity-weighted sum of saturated event ratios; 0 iff no events."""
    total = 0.0
    for e in events:
        w = weights[e.kind] if weights is not None else e.severity_weight
        if w < 0:
            raise ValueError("event weights must be >= 0")
        total += w * e.ratio
    return total


def visual_centroid(units: list[VisualUnit],
                    canvas_w: float, canvas_h: float) -> tuple[float, float]:
    """Area-weighted centroid of non-exempt units, normalized to [0, 1]^2.

    Container units fully enclosing two or more other counted units are
    excluded so nested layouts are not double counted.
    """
    counted = [u for u in units if not u.exempt]
    if not counted:
        raise NoContentError("no non-exempt visual units")
    leafish = []
    for u in counted:
        if u.kind == KIND_CONTAINER:
            enclosed = sum(1 for v in counted
                           if v.unit_id != u.unit_id and u.bbox.contains(v.bbox))
            if enclosed >= 2:
                continue
        leafish.append(u)
    if not leafish:  # all containers enclose each other; fall back to all units
        leafish = counted
    total = sum(u.area_px2 for u in leafish)
    cx = sum((u.bbox.x + u.bbox.w / 2) * u.area_px2 for u in leafish) / total
    cy = sum((u.bbox.y + u.bbox.h / 2) * u.area_px2 for u in leafish) / total
    return cx / canvas_w, cy / canvas_h


def imbalance_distance(centroid: tuple[float, float],
                       x_tol: float = 0.05, y_tol: float = 0.15) -> float:
    """Ellipse-normalized distance from the canvas center (0.5, 0.5)."""
    if x_tol <= 0 or y_tol <= 0:
        raise ValueError("tolerances must be positive")
    x, y = centroid
    return math.sqrt(((x - 0.5) / x_tol) ** 2 + ((y - 0.5) / y_tol) ** 2)


TARGET_RATIO = 16.0 / 9.0


def aspect_compliance(width_px: float, height_px: float, tolerance: float) -> bool:
    """True iff width/height is within `tolerance` (relative) of 16:9."""
    if width_px <= 0 or height_px <= 0:
        raise ValueError("dimensions must be positive")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    return abs((width_px / height_px) / TARGET_RATIO - 1.0) <= tolerance


def geometry_report(snapshot: LayoutSnapshot,
                    config: GeometryConfig = GeometryConfig()) -> dict:
    """Collision + imbalance summary for one snapshot, JSON-ready."""
    units = extract_visual_units(snapshot, config)
    events = detect_collisions(units, snapshot.canvas_width_px,
                               snapshot.canvas_height_px, config)
    try:
        centroid = visual_centroid(units, snapshot.canvas_width_px,
                                   snapshot.canvas_height_px)
        imbalance = imbalance_distance(centroid, config.x_tol, config.y_tol)
    except NoContentError:
        centroid = None
        imbalance = None
    return {
        "collision_score": collision_score(events),
        "events": [{
            "kind": e.kind, "unit_a": e.unit_a, "unit_b": e.unit_b,
            "overlap_area_px2": e.overlap_area_px2,
            "severity_weight": e.severity_weight,
        } for e in events],
        "centroid": centroid,
        "imbalance_d": imbalance,
        "unit_count": len(units),
        "exempt_count": sum(1 for u in units if u.exempt),
    }
