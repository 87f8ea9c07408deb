import type { TrimapOverlay } from "./types.js";

/**
 * Decodes the server's base64 PNG trimap into per-pixel label codes. The
 * browser implementation rasterizes losslessly through a canvas; tests
 * substitute a fake so the pipeline stays DOM-free.
 */
export interface TrimapDecoder {
  decode(base64Png: string, width: number, height: number): Promise<TrimapOverlay>;
}

export class CanvasTrimapDecoder implements TrimapDecoder {
  async decode(base64Png: string, width: number, height: number): Promise<TrimapOverlay> {
    const raw = atob(base64Png);
    const bytes = new Uint8Array(raw.length);
    for (let i = 0; i < raw.length; i++) {
      bytes[i] = raw.charCodeAt(i);
    }
    const bitmap = await createImageBitmap(new Blob([bytes], { type: "image/png" }));
    if (bitmap.width !== width || bitmap.height !== height) {
      throw new Error(
        `trimap is ${bitmap.width}x${bitmap.height}, expected ${width}x${height}`,
      );
    }
    const canvas = document.createElement("canvas");
    canvas.width = width;
    canvas.height = height;
    const ctx = canvas.getContext("2d", { willReadFrequently: true });
    if (!ctx) {
      throw new Error("2d canvas context unavailable");
    }
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(bitmap, 0, 0);
    const rgba = ctx.getImageData(0, 0, width, height).data;
    const labels = new Uint8Array(width * height);
    for (let i = 0; i < labels.length; i++) {
      labels[i] = rgba[i * 4]; // grayscale PNG: R carries the label code
    }
    return { width, height, labels };
  }
}
