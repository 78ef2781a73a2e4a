import type { BatchResponse, DocResult, RiskReport, Settings } from "./types.js";

export interface AuditEntry {
  method: string;
  path: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: string,
  ) {
    super(`HTTP ${status}: ${body}`);
  }
}

/** Typed client for the de-identification service. Every request lands in the
 * audit log; the console renders exclusively from server responses, so the
 * audit is the proof that no masking or span math happens client-side. */
export class ApiClient {
  readonly audit: AuditEntry[] = [];

  constructor(
    private readonly baseUrl: string,
    private readonly sessionId: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(method: string, path: string, init: RequestInit = {}): Promise<Response> {
    this.audit.push({ method, path });
    const headers = new Headers(init.headers);
    headers.set("X-Session-Id", this.sessionId);
    const response = await this.fetchImpl(this.baseUrl + path, { ...init, method, headers });
    if (response.status >= 400) {
      throw new ApiError(response.status, await response.text());
    }
    return response;
  }

  private async json<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = {};
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "Content-Type": "application/json" };
    }
    const response = await this.request(method, path, init);
    return (await response.json()) as T;
  }

  putSettings(settings: Settings): Promise<Settings> {
    return this.json("PUT", "/settings", settings);
  }

  getSettings(): Promise<Settings> {
    return this.json("GET", "/settings");
  }

  async uploadLetter(name: string, content: string): Promise<DocResult> {
    const form = new FormData();
    form.append("file", new Blob([content], { type: "text/plain" }), name);
    const response = await this.request("POST", "/letters", { body: form });
    return (await response.json()) as DocResult;
  }

  async uploadBatch(files: { name: string; content: string }[]): Promise<BatchResponse> {
    const form = new FormData();
    for (const file of files) {
      form.append("files", new Blob([file.content], { type: "text/plain" }), file.name);
    }
    const response = await this.request("POST", "/batch", { body: form });
    return (await response.json()) as BatchResponse;
  }

  getBatchPage(cursor: number): Promise<BatchResponse> {
    return this.json("GET", `/batch?cursor=${cursor}`);
  }

  markEntity(docId: string, etype: string, surface: string): Promise<DocResult> {
    return this.json("POST", "/entities/mark", { doc_id: docId, etype, surface });
  }

  removeEntity(
    docId: string,
    scope: "one" | "all",
    target: { start: number; end: number } | { surface: string; etype?: string },
  ): Promise<DocResult> {
    return this.json("POST", "/entities/remove", { doc_id: docId, scope, ...target });
  }

  async download(docId: string): Promise<string> {
    const response = await this.request("GET", `/results/${encodeURIComponent(docId)}/download`);
    return response.text();
  }

  /** null when the last run was redact-only (service answers 204). */
  async risk(): Promise<RiskReport | null> {
    const response = await this.request("GET", "/risk");
    if (response.status === 204) return null;
    return (await response.json()) as RiskReport;
  }
}
