/** Typed fetch client for the pipeline HTTP API. */

import type {
  CandidatesPayload,
  RunManifest,
  RunSummary,
  SelectionResponse,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(`API error ${status}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") {
      return body.detail;
    }
  } catch {
    // non-JSON error body; fall through to the status text
  }
  return response.statusText || `HTTP ${response.status}`;
}

export class PipelineClient {
  private baseUrl: string;
  private fetchImpl: typeof fetch;

  constructor(baseUrl = "", fetchImpl: typeof fetch = fetch) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }

  listRuns(): Promise<RunSummary[]> {
    return this.getJson<RunSummary[]>("/api/runs");
  }

  getRun(runId: string): Promise<RunManifest> {
    return this.getJson<RunManifest>(`/api/runs/${encodeURIComponent(runId)}`);
  }

  getCandidates(runId: string): Promise<CandidatesPayload> {
    return this.getJson<CandidatesPayload>(
      `/api/runs/${encodeURIComponent(runId)}/candidates`,
    );
  }

  async submitSelection(
    runId: string,
    candidateIds: string[],
  ): Promise<SelectionResponse> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/api/runs/${encodeURIComponent(runId)}/selection`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ candidate_ids: candidateIds }),
      },
    );
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as SelectionResponse;
  }

  imageUrl(path: string): string {
    return `${this.baseUrl}${path}`;
  }
}
