import type { Point } from "./types.js";

/** Canvas = image * zoom + pan, applied per axis. */
export interface ViewTransform {
  zoom: number;
  panX: number;
  panY: number;
}

export const IDENTITY: ViewTransform = { zoom: 1, panX: 0, panY: 0 };

/** Canvas position of the center of an image pixel. */
export function imageToCanvas(p: Point, t: ViewTransform): { x: number; y: number } {
  return { x: (p.x + 0.5) * t.zoom + t.panX, y: (p.y + 0.5) * t.zoom + t.panY };
}

/**
 * Integer image pixel under a canvas position, or null when the click lands
 * outside the image.
 */
export function canvasToImage(
  cx: number,
  cy: number,
  t: ViewTransform,
  width: number,
  height: number,
): Point | null {
  const x = Math.floor((cx - t.panX) / t.zoom);
  const y = Math.floor((cy - t.panY) / t.zoom);
  if (x < 0 || y < 0 || x >= width || y >= height) {
    return null;
  }
  return { x, y };
}

/** Zoom about a fixed canvas point so the pixel under the cursor stays put. */
export function zoomAround(t: ViewTransform, cx: number, cy: number, factor: number): ViewTransform {
  const zoom = Math.min(32, Math.max(0.25, t.zoom * factor));
  const scale = zoom / t.zoom;
  return {
    zoom,
    panX: cx - (cx - t.panX) * scale,
    panY: cy - (cy - t.panY) * scale,
  };
}

export function pan(t: ViewTransform, dx: number, dy: number): ViewTransform {
  return { zoom: t.zoom, panX: t.panX + dx, panY: t.panY + dy };
}
