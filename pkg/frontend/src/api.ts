import type { AnnotationState, ImageInfo, Point, PreviewResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export class ConflictError extends ApiError {
  constructor(public version: number) {
    super(409, `annotation changed on the server (version ${version})`);
  }
}

export interface PreviewRequestBody {
  foreground_points: Point[];
  background_point?: Point | null;
  gamma?: number;
}

export interface SaveRequestBody {
  foreground_points: Point[];
  background_point: Point | null;
  expected_version: number;
}

/** The service surface the UI consumes; mocked wholesale in tests. */
export interface ApiClient {
  listImages(): Promise<ImageInfo[]>;
  getAnnotation(id: string): Promise<AnnotationState>;
  putAnnotation(id: string, body: SaveRequestBody): Promise<{ version: number }>;
  preview(id: string, body: PreviewRequestBody): Promise<PreviewResponse>;
  imageUrl(id: string): string;
}

function detailText(detail: unknown): string {
  if (typeof detail === "string") return detail;
  if (detail && typeof detail === "object" && "message" in detail) {
    return String((detail as { message: unknown }).message);
  }
  return JSON.stringify(detail);
}

export class HttpApiClient implements ApiClient {
  constructor(private base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.base + path, init);
    if (resp.ok) {
      return (await resp.json()) as T;
    }
    let detail: unknown = resp.statusText;
    try {
      detail = (await resp.json()).detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    if (resp.status === 409 && detail && typeof detail === "object" && "version" in detail) {
      throw new ConflictError(Number((detail as { version: unknown }).version));
    }
    throw new ApiError(resp.status, detailText(detail));
  }

  listImages(): Promise<ImageInfo[]> {
    return this.request("/api/images");
  }

  getAnnotation(id: string): Promise<AnnotationState> {
    return this.request(`/api/images/${encodeURIComponent(id)}/annotation`);
  }

  putAnnotation(id: string, body: SaveRequestBody): Promise<{ version: number }> {
    return this.request(`/api/images/${encodeURIComponent(id)}/annotation`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  preview(id: string, body: PreviewRequestBody): Promise<PreviewResponse> {
    return this.request(`/api/images/${encodeURIComponent(id)}/preview`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  imageUrl(id: string): string {
    return `${this.base}/api/images/${encodeURIComponent(id)}/file`;
  }
}
