import { ApiError, ConflictError, type ApiClient } from "./api.js";
import type { TrimapDecoder } from "./decoder.js";
import type {
  ImageInfo,
  LabeledPoint,
  Point,
  ToolMode,
  TrimapOverlay,
} from "./types.js";

export interface UiState {
  imageId: string | null;
  imageWidth: number;
  imageHeight: number;
  points: LabeledPoint[];
  mode: ToolMode;
  version: number;
  status: string;
  overlay: TrimapOverlay | null;
  radius: number | null;
  droppedSeeds: Point[];
  pendingPreview: boolean;
  message: string | null;
}

export interface ControllerOptions {
  debounceMs?: number;
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
}

/**
 * All UI behavior that does not touch the DOM: the local point list, the
 * debounced latest-wins preview loop, and optimistic save/advance. The view
 * layer subscribes and re-renders on every change.
 */
export class AnnotationController {
  readonly state: UiState = {
    imageId: null,
    imageWidth: 0,
    imageHeight: 0,
    points: [],
    mode: "fg",
    version: 0,
    status: "unlabeled",
    overlay: null,
    radius: null,
    droppedSeeds: [],
    pendingPreview: false,
    message: null,
  };

  images: ImageInfo[] = [];

  private listeners: Array<() => void> = [];
  private debounceMs: number;
  private schedule: (fn: () => void, ms: number) => unknown;
  private cancel: (handle: unknown) => void;
  private timer: unknown = null;
  private requestSeq = 0;
  /** Resolves when the most recently fired preview settles; test hook. */
  previewSettled: Promise<void> = Promise.resolve();

  constructor(
    private api: ApiClient,
    private decoder: TrimapDecoder,
    options: ControllerOptions = {},
  ) {
    this.debounceMs = options.debounceMs ?? 150;
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = options.cancel ?? ((handle) => clearTimeout(handle as number));
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  async init(): Promise<void> {
    this.images = await this.api.listImages();
    const first = this.images.find((im) => im.status === "unlabeled") ?? this.images[0];
    if (first) {
      await this.openImage(first.id);
    }
  }

  async openImage(id: string): Promise<void> {
    const info = this.images.find((im) => im.id === id);
    if (!info) {
      this.state.message = `unknown image ${id}`;
      this.emit();
      return;
    }
    const ann = await this.api.getAnnotation(id);
    this.state.imageId = id;
    this.state.imageWidth = info.width;
    this.state.imageHeight = info.height;
    this.state.points = [
      ...ann.foreground_points.map((p): LabeledPoint => ({ ...p, kind: "fg" })),
      ...(ann.background_point ? [{ ...ann.background_point, kind: "bg" as const }] : []),
    ];
    this.state.version = ann.version;
    this.state.status = ann.status;
    this.state.overlay = null;
    this.state.radius = null;
    this.state.droppedSeeds = [];
    this.state.message = null;
    this.emit();
    if (this.foregroundPoints().length > 0) {
      this.schedulePreview();
    }
  }

  foregroundPoints(): Point[] {
    return this.state.points.filter((p) => p.kind === "fg").map(({ x, y }) => ({ x, y }));
  }

  backgroundPoint(): Point | null {
    const bg = this.state.points.find((p) => p.kind === "bg");
    return bg ? { x: bg.x, y: bg.y } : null;
  }

  setMode(mode: ToolMode): void {
    this.state.mode = mode;
    this.emit();
  }

  /** Append a point (a background point replaces any existing one). */
  addPoint(point: Point, kind?: ToolMode): void {
    const resolved = kind ?? this.state.mode;
    if (resolved === "bg") {
      this.state.points = this.state.points.filter((p) => p.kind !== "bg");
    }
    this.state.points = [...this.state.points, { ...point, kind: resolved }];
    this.state.message = null;
    this.emit();
    this.schedulePreview();
  }

  /** Remove exactly the last point; schedules exactly one refresh. */
  undo(): void {
    if (this.state.points.length === 0) {
      return;
    }
    this.state.points = this.state.points.slice(0, -1);
    this.emit();
    this.schedulePreview();
  }

  /** Debounced: at most one request fires per quiet period of debounceMs. */
  schedulePreview(): void {
    if (this.timer !== null) {
      this.cancel(this.timer);
    }
    this.timer = this.schedule(() => {
      this.timer = null;
      this.previewSettled = this.firePreview();
    }, this.debounceMs);
  }

  private async firePreview(): Promise<void> {
    const imageId = this.state.imageId;
    const fg = this.foregroundPoints();
    if (!imageId) {
      return;
    }
    if (fg.length === 0) {
      this.state.overlay = null;
      this.state.radius = null;
      this.state.droppedSeeds = [];
      this.emit();
      return;
    }
    const seq = ++this.requestSeq;
    this.state.pendingPreview = true;
    this.emit();
    try {
      const resp = await this.api.preview(imageId, {
        foreground_points: fg,
        background_point: this.backgroundPoint(),
      });
      const overlay = await this.decoder.decode(
        resp.trimap,
        this.state.imageWidth,
        this.state.imageHeight,
      );
      if (seq !== this.requestSeq || this.state.imageId !== imageId) {
        return; // stale: a newer request or another image superseded this one
      }
      this.state.overlay = overlay;
      this.state.radius = resp.radius;
      this.state.droppedSeeds = resp.dropped_seeds;
    } catch (err) {
      if (seq !== this.requestSeq || this.state.imageId !== imageId) {
        return;
      }
      this.state.message = err instanceof ApiError ? err.message : String(err);
    } finally {
      if (seq === this.requestSeq && this.state.imageId === imageId) {
        this.state.pendingPreview = false;
        this.emit();
      }
    }
  }

  canSave(): boolean {
    return this.foregroundPoints().length > 0 && this.backgroundPoint() !== null;
  }

  /**
   * PUT with the mirrored version; on success advance to the next unlabeled
   * image, on conflict surface it and reload the server's state.
   */
  async saveAndNext(): Promise<void> {
    const imageId = this.state.imageId;
    if (!imageId) {
      return;
    }
    if (!this.canSave()) {
      this.state.message = "need at least one foreground point and a background point";
      this.emit();
      return;
    }
    try {
      const resp = await this.api.putAnnotation(imageId, {
        foreground_points: this.foregroundPoints(),
        background_point: this.backgroundPoint(),
        expected_version: this.state.version,
      });
      this.state.version = resp.version;
      this.state.status = "done";
      const info = this.images.find((im) => im.id === imageId);
      if (info) {
        info.status = "done";
      }
      this.emit();
      const next = this.nextUnlabeled(imageId);
      if (next) {
        await this.openImage(next);
      }
    } catch (err) {
      if (err instanceof ConflictError) {
        this.state.message = `save conflict: server is at version ${err.version}; reloaded`;
        this.emit();
        await this.openImage(imageId);
        this.state.message = `save conflict: server had newer points (version ${err.version})`;
        this.emit();
      } else {
        this.state.message = err instanceof ApiError ? err.message : String(err);
        this.emit();
      }
    }
  }

  /** Next unlabeled image after `current` in id order, wrapping around. */
  private nextUnlabeled(current: string): string | null {
    const ids = this.images.map((im) => im.id);
    const start = ids.indexOf(current);
    for (let step = 1; step <= ids.length; step++) {
      const candidate = this.images[(start + step) % ids.length];
      if (candidate.status === "unlabeled" || candidate.status === "in_progress") {
        return candidate.id;
      }
    }
    return null;
  }
}
