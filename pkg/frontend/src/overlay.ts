import { LABEL_FG, LABEL_UNCERTAIN, type TrimapOverlay } from "./types.js";

// RGBA tints: foreground translucent green, uncertain translucent yellow,
// background untinted.
export const FG_TINT = [46, 204, 64, 110] as const;
export const UNCERTAIN_TINT = [255, 220, 0, 90] as const;
export const BG_TINT = [0, 0, 0, 0] as const;

/** RGBA pixel buffer for compositing the trimap over the image. */
export function overlayPixels(overlay: TrimapOverlay): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(overlay.width * overlay.height * 4);
  for (let i = 0; i < overlay.labels.length; i++) {
    const label = overlay.labels[i];
    const tint = label === LABEL_FG ? FG_TINT : label === LABEL_UNCERTAIN ? UNCERTAIN_TINT : BG_TINT;
    out[i * 4] = tint[0];
    out[i * 4 + 1] = tint[1];
    out[i * 4 + 2] = tint[2];
    out[i * 4 + 3] = tint[3];
  }
  return out;
}
