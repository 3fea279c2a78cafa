/* Layout probe: runs inside a rendered slide page and serializes page
 * extent plus a pre-order element tree with document-origin bounding
 * boxes.
 *
 * Field names are the wire contract with the Python side (snapshot.py
 * and assets/probe.js); keep all three in sync.
 */

export const PROBE_VERSION = "1.0.0";
export const DEFAULT_MAX_NODES = 5000;
export const CLASS_HINT_MAX_CHARS = 256;

export type PositionMode = "static" | "relative" | "absolute" | "fixed" | "sticky";

export interface BBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface RawNode {
  node_index: number;
  parent_index: number | null;
  tag_name: string;
  bbox: BBox;
  visible: boolean;
  opacity: number;
  position_mode: PositionMode;
  z_index: number | "auto";
  has_visible_text: boolean;
  is_image_like: boolean;
  is_svg_primitive: boolean;
  background_is_transparent: boolean;
  class_hint: string;
}

export interface PageExtent {
  content_height_px: number;
  viewport_width_px: number;
}

export interface ProbePayload {
  page_extent: PageExtent;
  nodes: RawNode[];
  truncated: boolean;
  cross_origin_frames_skipped: number;
  shadow_dom_present: boolean;
  error: string | null;
  probe_version: string;
}

const SVG_NS = "http://www.w3.org/2000/svg";
const IMAGE_TAGS = new Set(["img", "picture", "canvas", "video"]);

function hasVisibleText(el: Element): boolean {
  for (let c = el.firstChild; c; c = c.nextSibling) {
    if (c.nodeType === 3 && /\S/.test(c.nodeValue ?? "")) return true;
  }
  return false;
}

function transparentBackground(style: CSSStyleDeclaration): boolean {
  const bg = style.backgroundColor;
  const none = style.backgroundImage === "none";
  return none && (bg === "transparent" || /rgba\(.*,\s*0\)$/.test(bg));
}

function isCrossOriginFrame(el: Element): boolean {
  if (el.tagName !== "IFRAME" && el.tagName !== "FRAME") return false;
  try {
    // accessing contentDocument throws or yields null when cross-origin
    return !(el as HTMLIFrameElement).contentDocument;
  } catch {
    return true;
  }
}

export function collectPageExtent(doc: Document, win: Window): PageExtent {
  const body = doc.body;
  const html = doc.documentElement;
  return {
    content_height_px: Math.max(
      body.scrollHeight, body.offsetHeight,
      html.scrollHeight, html.offsetHeight, 0),
    viewport_width_px: win.innerWidth || html.clientWidth || 1,
  };
}

export function collectProbePayload(
  doc: Document,
  win: Window,
  maxNodes: number = DEFAULT_MAX_NODES,
): ProbePayload {
  if (maxNodes <= 0) maxNodes = DEFAULT_MAX_NODES;

  const payload: ProbePayload = {
    page_extent: { content_height_px: 0, viewport_width_px: 0 },
    nodes: [],
    truncated: false,
    cross_origin_frames_skipped: 0,
    shadow_dom_present: false,
    error: null,
    probe_version: PROBE_VERSION,
  };

  if (!doc.body || !doc.documentElement) {
    payload.error = "missing_body";
    return payload;
  }
  payload.page_extent = collectPageExtent(doc, win);

  const emit = (el: Element, parentIndex: number | null): void => {
    if (payload.nodes.length >= maxNodes) {
      payload.truncated = true;
      return;
    }
    if (el.shadowRoot) payload.shadow_dom_present = true;
    if (isCrossOriginFrame(el)) {
      payload.cross_origin_frames_skipped += 1;
      return;
    }

    const style = win.getComputedStyle(el);
    const rect = el.getBoundingClientRect();
    let opacity = parseFloat(style.opacity);
    if (Number.isNaN(opacity)) opacity = 1;
    const tag = (el.tagName || "").toLowerCase();
    const zRaw = style.zIndex;
    const isSvg = el.namespaceURI === SVG_NS;

    const index = payload.nodes.length;
    payload.nodes.push({
      node_index: index,
      parent_index: parentIndex,
      tag_name: tag,
      bbox: {
        x: rect.left + win.scrollX,
        y: rect.top + win.scrollY,
        w: rect.width,
        h: rect.height,
      },
      visible: style.display !== "none" &&
        style.visibility !== "hidden" && opacity > 0,
      opacity: Math.min(Math.max(opacity, 0), 1),
      position_mode: (style.position || "static") as PositionMode,
      z_index: zRaw === "auto" || zRaw === "" ? "auto" : (parseInt(zRaw, 10) || 0),
      has_visible_text: hasVisibleText(el),
      is_image_like: IMAGE_TAGS.has(tag),
      is_svg_primitive: isSvg && tag !== "svg",
      background_is_transparent: transparentBackground(style),
      class_hint: String(el.getAttribute("class") ?? "").slice(0, CLASS_HINT_MAX_CHARS),
    });

    for (let c = el.firstElementChild; c; c = c.nextElementSibling) {
      emit(c, index);
    }
  };

  emit(doc.body, null);
  return payload;
}
