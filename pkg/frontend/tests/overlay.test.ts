import { describe, expect, it } from "vitest";

import { BG_TINT, FG_TINT, overlayPixels, UNCERTAIN_TINT } from "../src/overlay.js";
import { LABEL_BG, LABEL_FG, LABEL_UNCERTAIN } from "../src/types.js";

describe("overlayPixels", () => {
  it("tints FG green, UNCERTAIN yellow, and leaves BG transparent", () => {
    const overlay = {
      width: 3,
      height: 1,
      labels: new Uint8Array([LABEL_FG, LABEL_UNCERTAIN, LABEL_BG]),
    };
    const rgba = overlayPixels(overlay);
    expect([...rgba.slice(0, 4)]).toEqual([...FG_TINT]);
    expect([...rgba.slice(4, 8)]).toEqual([...UNCERTAIN_TINT]);
    expect([...rgba.slice(8, 12)]).toEqual([...BG_TINT]);
    expect(rgba[11]).toBe(0); // background alpha stays zero
  });

  it("covers every pixel exactly once", () => {
    const overlay = { width: 4, height: 5, labels: new Uint8Array(20).fill(LABEL_FG) };
    expect(overlayPixels(overlay)).toHaveLength(80);
  });
});
