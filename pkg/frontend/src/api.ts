// Typed client for the run service. All requests funnel through one place so
// the submission cache (content addressing) and the request log are
// observable -- revisiting a cached run spec must not issue a new POST.

import { RunSpecDoc, cacheKey } from "./runspec.js";
import { MaskPayload } from "./mask.js";

export interface JobRecord {
  run_id: string;
  state: "queued" | "running" | "done" | "failed";
  progress: { completed: number; total: number };
  error: string | null;
}

export interface ModelInfo {
  name: string;
  shape: { kind: "grid"; h: number; w: number } | { kind: "flat"; d: number };
  conditions: { id: string; components: number }[];
}

export interface RequestLogEntry {
  method: string;
  path: string;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

export class ApiClient {
  readonly requestLog: RequestLogEntry[] = [];
  private runCache = new Map<string, string>(); // canonical doc -> run_id

  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    this.requestLog.push({ method, path });
    const resp = await this.fetchImpl(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = `${resp.status}`;
      try {
        detail = ((await resp.json()) as { detail?: string }).detail ?? detail;
      } catch {
        // non-JSON error body
      }
      throw new ApiError(resp.status, detail);
    }
    return resp;
  }

  postCount(path: string): number {
    return this.requestLog.filter((e) => e.method === "POST" && e.path === path).length;
  }

  /** Submit a run spec; identical documents reuse the cached run id. */
  async submitRun(doc: RunSpecDoc): Promise<string> {
    const key = cacheKey(doc);
    const cached = this.runCache.get(key);
    if (cached !== undefined) return cached;
    const resp = await this.request("POST", "/runs", doc);
    const runId = ((await resp.json()) as { run_id: string }).run_id;
    this.runCache.set(key, runId);
    return runId;
  }

  async jobRecord(runId: string): Promise<JobRecord> {
    const resp = await this.request("GET", `/runs/${runId}`);
    return (await resp.json()) as JobRecord;
  }

  /** Poll at an interval until the job leaves the queue (done or failed). */
  async waitForRun(runId: string, pollMs = 1000, timeoutMs = 120000): Promise<JobRecord> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const record = await this.jobRecord(runId);
      if (record.state === "done" || record.state === "failed") return record;
      if (Date.now() > deadline) throw new Error(`run ${runId} timed out`);
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
  }

  async postMask(payload: MaskPayload): Promise<string> {
    const resp = await this.request("POST", "/masks", payload);
    return ((await resp.json()) as { mask_id: string }).mask_id;
  }

  async models(): Promise<string[]> {
    const resp = await this.request("GET", "/models");
    return ((await resp.json()) as { models: string[] }).models;
  }

  async modelInfo(name: string): Promise<ModelInfo> {
    const resp = await this.request("GET", `/models/${name}`);
    return (await resp.json()) as ModelInfo;
  }

  async sampleGraymap(runId: string, index: number): Promise<Uint8Array> {
    const resp = await this.request("GET", `/runs/${runId}/samples/${index}?format=pgm`);
    return new Uint8Array(await resp.arrayBuffer());
  }

  async normMapGraymap(runId: string, step: number): Promise<Uint8Array> {
    const resp = await this.request("GET", `/runs/${runId}/normmaps/${step}`);
    return new Uint8Array(await resp.arrayBuffer());
  }

  async metrics(runId: string): Promise<{ name: string; value: number; metadata: Record<string, unknown> }[]> {
    const resp = await this.request("GET", `/runs/${runId}/metrics`);
    return (await resp.json()) as { name: string; value: number; metadata: Record<string, unknown> }[];
  }
}
