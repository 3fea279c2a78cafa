/* slidescore layout probe
 *
 * Runs inside the rendered page and returns one JSON-serializable object:
 * page extent plus a pre-order element tree with document-origin bounding
 * boxes. Field names are the wire contract with the Python side; keep them
 * in sync with snapshot.py.
 */
(function (maxNodes) {
  "use strict";
  var PROBE_VERSION = "1.0.0";
  maxNodes = maxNodes > 0 ? maxNodes : 5000;

  var payload = {
    page_extent: { content_height_px: 0, viewport_width_px: 0 },
    nodes: [],
    truncated: false,
    cross_origin_frames_skipped: 0,
    shadow_dom_present: false,
    error: null,
    probe_version: PROBE_VERSION,
  };

  var body = document.body;
  var html = document.documentElement;
  if (!body || !html) {
    payload.error = "missing_body";
    return payload;
  }

  payload.page_extent.content_height_px = Math.max(
    body.scrollHeight, body.offsetHeight,
    html.scrollHeight, html.offsetHeight, 0);
  payload.page_extent.viewport_width_px =
    window.innerWidth || html.clientWidth || 1;

  var SVG_NS = "http://www.w3.org/2000/svg";
  var IMAGE_TAGS = { img: 1, picture: 1, canvas: 1, video: 1 };

  function hasVisibleText(el) {
    for (var c = el.firstChild; c; c = c.nextSibling) {
      if (c.nodeType === 3 && /\S/.test(c.nodeValue)) return true;
    }
    return false;
  }

  function transparentBackground(style) {
    var bg = style.backgroundColor;
    var none = style.backgroundImage === "none";
    return none && (bg === "transparent" || /rgba\(.*,\s*0\)$/.test(bg));
  }

  function emit(el, parentIndex) {
    if (payload.nodes.length >= maxNodes) {
      payload.truncated = true;
      return;
    }
    if (el.shadowRoot) payload.shadow_dom_present = true;
    if (el.tagName === "IFRAME" || el.tagName === "FRAME") {
      try {
        void el.contentDocument; // throws or is null when cross-origin
        if (!el.contentDocument) {
          payload.cross_origin_frames_skipped += 1;
          return;
        }
      } catch (e) {
        payload.cross_origin_frames_skipped += 1;
        return;
      }
    }

    var style = window.getComputedStyle(el);
    var rect = el.getBoundingClientRect();
    var opacity = parseFloat(style.opacity);
    if (isNaN(opacity)) opacity = 1;
    var visible = style.display !== "none" &&
      style.visibility !== "hidden" && opacity > 0;
    var isSvg = el.namespaceURI === SVG_NS;
    var tag = (el.tagName || "").toLowerCase();
    var zRaw = style.zIndex;

    var index = payload.nodes.length;
    payload.nodes.push({
      node_index: index,
      parent_index: parentIndex,
      tag_name: tag,
      bbox: {
        x: rect.left + window.scrollX,
        y: rect.top + window.scrollY,
        w: rect.width,
        h: rect.height,
      },
      visible: visible,
      opacity: Math.min(Math.max(opacity, 0), 1),
      position_mode: style.position || "static",
      z_index: zRaw === "auto" ? "auto" : (parseInt(zRaw, 10) || 0),
      has_visible_text: hasVisibleText(el),
      is_image_like: !!IMAGE_TAGS[tag],
      is_svg_primitive: isSvg && tag !== "svg",
      background_is_transparent: transparentBackground(style),
      class_hint: String(el.getAttribute("class") || "").slice(0, 256),
    });

    for (var c = el.firstElementChild; c; c = c.nextElementSibling) {
      emit(c, index);
    }
  }

  emit(body, null);
  return payload;
})(__MAX_NODES__);
