"""Brute-force collision oracle, written against the documented rules only.

Deliberately structured differently from slidescore.geometry: explicit
coordinate arithmetic, no BBox helpers, all pairs scanned with plain loops.
"""


def _inter(a, b):
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    return max(iw, 0.0) * max(ih, 0.0)


def brute_force_events(units, canvas_w, canvas_h, config):
    """Expected event set as tuples (kind, unit_a, unit_b, area, reference)."""
    out = []
    main_kinds = ("text", "image")
    for a in units:
        for b in units:
            if a.unit_id >= b.unit_id:
                continue
            if a.source_node in b.ancestors or b.source_node in a.ancestors:
                continue
            if a.exempt and b.exempt:
                continue
            if a.exempt and b.kind not in main_kinds:
                continue
            if b.exempt and a.kind not in main_kinds:
                continue
            ra = (a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h)
            rb = (b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h)
            area = _inter(ra, rb)
            smaller = min(a.bbox.w * a.bbox.h, b.bbox.w * b.bbox.h)
            if area > max(config.overlap_min_area_px2, config.overlap_min_frac * smaller):
                out.append(("overlap", a.unit_id, b.unit_id, area, smaller))

    for u in units:
        if u.exempt:
            continue
        parent = None
        best = -1
        for v in units:
            if v.kind == "container" and v.source_node in u.ancestors and v.source_node > best:
                parent, best = v, v.source_node
        if parent is None:
            continue
        s = config.escape_slack_px
        px, py = parent.bbox.x, parent.bbox.y
        px2, py2 = px + parent.bbox.w, py + parent.bbox.h
        ux, uy = u.bbox.x, u.bbox.y
        ux2, uy2 = ux + u.bbox.w, uy + u.bbox.h
        if ux < px - s or uy < py - s or ux2 > px2 + s or uy2 > py2 + s:
            escaped = u.bbox.w * u.bbox.h - _inter(
                (ux, uy, u.bbox.w, u.bbox.h), (px, py, parent.bbox.w, parent.bbox.h))
            if escaped > 0:
                out.append(("parent_escape", u.unit_id, parent.unit_id,
                            escaped, u.bbox.w * u.bbox.h))

    for u in units:
        if u.exempt:
            continue
        s = config.overflow_slack_px
        ux, uy = u.bbox.x, u.bbox.y
        ux2, uy2 = ux + u.bbox.w, uy + u.bbox.h
        if ux < -s or uy < -s or ux2 > canvas_w + s or uy2 > canvas_h + s:
            off = u.bbox.w * u.bbox.h - _inter(
                (ux, uy, u.bbox.w, u.bbox.h), (0.0, 0.0, canvas_w, canvas_h))
            if off > 0:
                out.append(("canvas_overflow", u.unit_id, None,
                            off, u.bbox.w * u.bbox.h))
    return out
