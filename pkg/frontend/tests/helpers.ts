import type {
  ApiClient,
  PreviewRequestBody,
  SaveRequestBody,
} from "../src/api.js";
import { ApiError, ConflictError } from "../src/api.js";
import type { TrimapDecoder } from "../src/decoder.js";
import type {
  AnnotationState,
  ImageInfo,
  PreviewResponse,
  TrimapOverlay,
} from "../src/types.js";

/** Deterministic scheduler: debounce timers fire only on explicit flush. */
export class ManualScheduler {
  private tasks = new Map<number, () => void>();
  private nextId = 1;

  schedule = (fn: () => void, _ms: number): unknown => {
    const id = this.nextId++;
    this.tasks.set(id, fn);
    return id;
  };

  cancel = (handle: unknown): void => {
    this.tasks.delete(handle as number);
  };

  get pending(): number {
    return this.tasks.size;
  }

  flush(): void {
    const fns = [...this.tasks.values()];
    this.tasks.clear();
    for (const fn of fns) {
      fn();
    }
  }
}

interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (err: unknown) => void;
}

function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

export interface PreviewCall {
  id: string;
  body: PreviewRequestBody;
  respond: (trimap: string, radius?: number) => void;
  fail: (status: number, detail: string) => void;
}

/** Scripted mock of the annotation service. */
export class MockApi implements ApiClient {
  images: ImageInfo[] = [];
  annotations = new Map<string, AnnotationState>();
  previewCalls: PreviewCall[] = [];
  putCalls: Array<{ id: string; body: SaveRequestBody }> = [];
  putResult: (body: SaveRequestBody) => { version: number } = (body) => ({
    version: body.expected_version + 1,
  });

  listImages(): Promise<ImageInfo[]> {
    return Promise.resolve(this.images.map((im) => ({ ...im })));
  }

  getAnnotation(id: string): Promise<AnnotationState> {
    const ann = this.annotations.get(id) ?? {
      foreground_points: [],
      background_point: null,
      version: 0,
      status: "unlabeled",
    };
    return Promise.resolve(JSON.parse(JSON.stringify(ann)));
  }

  putAnnotation(id: string, body: SaveRequestBody): Promise<{ version: number }> {
    this.putCalls.push({ id, body });
    const current = this.annotations.get(id)?.version ?? 0;
    if (body.expected_version !== current) {
      return Promise.reject(new ConflictError(current));
    }
    const result = this.putResult(body);
    this.annotations.set(id, {
      foreground_points: body.foreground_points,
      background_point: body.background_point,
      version: result.version,
      status: "done",
    });
    const info = this.images.find((im) => im.id === id);
    if (info) {
      info.status = "done";
    }
    return Promise.resolve(result);
  }

  preview(id: string, body: PreviewRequestBody): Promise<PreviewResponse> {
    const d = deferred<PreviewResponse>();
    this.previewCalls.push({
      id,
      body,
      respond: (trimap, radius = 12.8) =>
        d.resolve({ trimap, radius, dropped_seeds: [] }),
      fail: (status, detail) => d.reject(new ApiError(status, detail)),
    });
    return d.promise;
  }

  imageUrl(id: string): string {
    return `/api/images/${id}/file`;
  }
}

/** Maps each trimap token to a distinct, stable label buffer. */
export class FakeDecoder implements TrimapDecoder {
  decoded: string[] = [];

  labelsFor(token: string, width: number, height: number): Uint8Array {
    const labels = new Uint8Array(width * height);
    let hash = 0;
    for (const ch of token) {
      hash = (hash * 31 + ch.charCodeAt(0)) >>> 0;
    }
    const codes = [0, 128, 255];
    for (let i = 0; i < labels.length; i++) {
      labels[i] = codes[(hash + i) % 3];
    }
    return labels;
  }

  decode(base64Png: string, width: number, height: number): Promise<TrimapOverlay> {
    this.decoded.push(base64Png);
    return Promise.resolve({
      width,
      height,
      labels: this.labelsFor(base64Png, width, height),
    });
  }
}

export function settle(): Promise<void> {
  // Let chained promise reactions run.
  return new Promise((resolve) => setTimeout(resolve, 0));
}
