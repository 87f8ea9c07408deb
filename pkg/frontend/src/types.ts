export interface Point {
  x: number;
  y: number;
}

export type ToolMode = "fg" | "bg";

export interface LabeledPoint extends Point {
  kind: ToolMode;
}

export interface ImageInfo {
  id: string;
  width: number;
  height: number;
  status: string;
}

export interface PreviewResponse {
  trimap: string; // base64 PNG, single channel, codes {0, 128, 255}
  radius: number;
  dropped_seeds: Point[];
}

export interface AnnotationState {
  foreground_points: Point[];
  background_point: Point | null;
  version: number;
  status: string;
}

/** Decoded trimap: one label byte per pixel, row-major. */
export interface TrimapOverlay {
  width: number;
  height: number;
  labels: Uint8Array;
}

export const LABEL_BG = 0;
export const LABEL_UNCERTAIN = 128;
export const LABEL_FG = 255;
