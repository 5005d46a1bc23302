/**
 * Typed fetch client for the masking workbench API.
 *
 * All masking happens server-side; this client only ships parameters and
 * reads back reports, so the Python core stays the single source of truth.
 */

import type {
  ColumnSchema,
  DistanceQuantiles,
  FieldError,
  MaskParams,
  PredicateCondition,
  RunCard,
  SessionInfo,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly fieldErrors: FieldError[];

  constructor(status: number, detail: unknown) {
    const fields = Array.isArray(detail) ? (detail as FieldError[]) : [];
    const text = fields.length
      ? fields.map((f) => `${f.field}: ${f.message}`).join("; ")
      : String(detail);
    super(`HTTP ${status}: ${text}`);
    this.status = status;
    this.fieldErrors = fields;
  }
}

export interface RunRequest {
  params: MaskParams;
  regression?: { target: string; predictors: string[] };
  predicates?: PredicateCondition[][];
  presence?: { column: string; value: string; rarity_threshold?: number };
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/+$/, "")}${path}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.url(path), init);
    const body = await response.text();
    const parsed = body ? JSON.parse(body) : null;
    if (!response.ok) {
      throw new ApiError(response.status, parsed?.detail ?? body);
    }
    return parsed as T;
  }

  uploadDataset(csv: string, schema?: ColumnSchema[]): Promise<SessionInfo> {
    return this.request("/datasets", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(schema ? { csv, schema } : { csv }),
    });
  }

  session(sessionId: string): Promise<SessionInfo> {
    return this.request(`/sessions/${sessionId}`);
  }

  distanceQuantiles(
    sessionId: string,
    quantiles: number[],
    weights: Record<string, number>,
  ): Promise<DistanceQuantiles> {
    return this.request(`/sessions/${sessionId}/distance-quantiles`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ quantiles, weights }),
    });
  }

  createRun(sessionId: string, body: RunRequest): Promise<RunCard> {
    return this.request(`/sessions/${sessionId}/runs`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listRuns(sessionId: string): Promise<RunCard[]> {
    return this.request(`/sessions/${sessionId}/runs`);
  }

  runDetail(sessionId: string, runId: number): Promise<RunCard> {
    return this.request(`/sessions/${sessionId}/runs/${runId}`);
  }

  releaseUrl(sessionId: string, runId: number): string {
    return this.url(`/sessions/${sessionId}/runs/${runId}/release.csv`);
  }
}
