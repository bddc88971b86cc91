/** Thin typed client for the review service; all statistics arrive
 * precomputed from the server and are passed through untouched. */

import type { DecisionPayload, DecisionResult, ProgressPayload, QueueItem, Stage } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string | null,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private headers(json = false): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    if (this.token) headers["X-Auth-Token"] = this.token;
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async getQueue(stage: Stage, annotator: string, n: number): Promise<QueueItem[]> {
    const params = new URLSearchParams({ stage, annotator, n: String(n) });
    const body = await this.request<{ items: QueueItem[] }>(`/api/queue?${params}`, {
      headers: this.headers(),
    });
    return body.items;
  }

  async postDecision(payload: DecisionPayload): Promise<DecisionResult> {
    return this.request<DecisionResult>("/api/decision", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(payload),
    });
  }

  async getProgress(): Promise<ProgressPayload> {
    return this.request<ProgressPayload>("/api/progress", { headers: this.headers() });
  }
}

export function newRequestId(): string {
  const cryptoApi = globalThis.crypto as Crypto | undefined;
  if (cryptoApi?.randomUUID) return cryptoApi.randomUUID();
  return `req-${Date.now()}-${Math.random().toString(36).slice(2, 10)}`;
}
