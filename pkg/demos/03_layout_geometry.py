"""
Element collisions and visual balance
=====================================

Extracts "visual units" (perceptually meaningful elements) from a rendered
layout tree, then detects three kinds of geometric defects -- unit/unit
overlap, escape from the parent container, overflow off the canvas -- and
measures how far the area-weighted centroid drifts from center.
"""

from slidescore.fixture_renderer import FixtureRenderer
from slidescore.geometry import (
    GeometryConfig,
    collision_score,
    detect_collisions,
    extract_visual_units,
    imbalance_distance,
    visual_centroid,
)
from slidescore.snapshot import snapshot_from_probe

MESSY_SLIDE = """
<body style="margin:0">
  <div style="width:1280px;height:720px;background:#fdfdfd">
    <div style="position:absolute;left:100px;top:120px;width:500px;height:300px;
                background:#dce6f1">A paragraph of body text that takes up a
                good chunk of the left half of the slide.</div>
    <div style="position:absolute;left:380px;top:200px;width:500px;height:300px;
                background:#f1e6dc">A second paragraph dropped carelessly on
                top of the first one, overlapping it badly.</div>
    <div style="position:absolute;left:1150px;top:600px;width:300px;height:200px;
                background:#e6f1dc">This box runs off the bottom-right corner
                of the canvas entirely.</div>
  </div>
</body>
"""

cfg = GeometryConfig()
renderer = FixtureRenderer(MESSY_SLIDE, 1280, 720)
snapshot = snapshot_from_probe(renderer.probe_payload(), 1280, 720)

units = extract_visual_units(snapshot, cfg)
print(f"{len(snapshot.nodes)} DOM nodes -> {len(units)} visual units")
for u in units:
    print(f"  unit {u.unit_id}: {u.kind:<9} at ({u.bbox.x:.0f},{u.bbox.y:.0f}) "
          f"{u.bbox.w:.0f}x{u.bbox.h:.0f}")

# Each event is weighted by severity (overlap 1.0, parent escape 0.5,
# canvas overflow 1.5) and scaled by how much of the reference area is
# affected, saturating at 1 per event.
events = detect_collisions(units, 1280, 720, cfg)
print("\ncollision events:")
for e in events:
    print(f"  {e.kind:<16} units ({e.unit_a}, {e.unit_b}) "
          f"area {e.overlap_area_px2:,.0f} px^2  ratio {e.ratio:.3f}")
print(f"collision score = {collision_score(events):.3f}")

# Imbalance: distance of the area-weighted centroid from (0.5, 0.5),
# normalized by an ellipse that tolerates 3x more vertical drift than
# horizontal (x_tol 0.05 vs y_tol 0.15).
cx, cy = visual_centroid(units, 1280, 720)
d = imbalance_distance((cx, cy), cfg.x_tol, cfg.y_tol)
print(f"\ncentroid = ({cx:.3f}, {cy:.3f}), imbalance distance d = {d:.2f}")
print("(d <= 1 means the drift is inside the tolerance ellipse)")
