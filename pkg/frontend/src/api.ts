/**
 * Typed client for the review service's HTTP/JSON API.
 *
 * Every number shown in the UI comes through this client from the service;
 * the UI itself never aggregates or recomputes anything.
 */

export interface Meta {
  observations: number;
  runs: string[];
  splits: Record<string, number>;
}

export interface ObservationSummary {
  id: string;
  split: string;
  ground_truth: string;
  provenance: string;
  scenario_ref: string | null;
  frame_count: number;
}

export interface ObservationPage {
  items: ObservationSummary[];
  total: number;
  page: number;
  page_size: number;
}

export interface RunSummary {
  run_id: string;
  backend_id: string;
  prompt_id: string;
  split: string;
  mode: string;
  evaluated: number;
  excluded_count: number;
}

export interface VerdictRecord {
  observation_id: string;
  label: string;
  raw_text: string;
  conformant: boolean;
  latency_ms: number;
  backend_id: string;
  explanation: string | null;
  recommendation: string | null;
}

export interface RunVerdicts {
  run_id: string;
  split: string;
  mode: string;
  verdicts: VerdictRecord[];
  excluded: [string, string][];
}

export interface Aggregate {
  mean: number;
  per_criterion: {
    clarity: number;
    accuracy: number;
    practical_relevance: number;
  };
  n_scores: number;
  n_items: number;
  n_reviewers: number;
  run_id: string;
  target: string;
}

export interface LabelSubmission {
  annotator_id: string;
  observation_id: string;
  label: "yes" | "no";
  idempotency_key: string;
}

export interface ScoreSubmission {
  reviewer_id: string;
  run_id: string;
  observation_id: string;
  target: string;
  clarity: number;
  accuracy: number;
  practical_relevance: number;
  idempotency_key: string;
}

export interface Ack {
  ok: boolean;
  seq: number;
  kind: string;
  duplicate: boolean;
}

/** Error raised for any non-2xx response, carrying the service's error code. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    public readonly detail: string,
  ) {
    super(`${code} (${status}): ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export function newIdempotencyKey(): string {
  const c = globalThis.crypto;
  if (c && typeof c.randomUUID === "function") return c.randomUUID();
  return `key-${Date.now()}-${Math.random().toString(36).slice(2, 12)}`;
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    public readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(0, "NetworkFailure", err instanceof Error ? err.message : String(err));
    }
    if (!response.ok) {
      let code = `HTTP${response.status}`;
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { error?: string; detail?: string };
        if (body.error) code = body.error;
        if (body.detail) detail = body.detail;
      } catch {
        // Non-JSON error body; keep the status text.
      }
      throw new ApiError(response.status, code, detail);
    }
    return (await response.json()) as T;
  }

  meta(): Promise<Meta> {
    return this.request<Meta>("/api/meta");
  }

  observations(params: {
    split?: string;
    labeled?: boolean;
    page?: number;
    pageSize?: number;
  } = {}): Promise<ObservationPage> {
    const query = new URLSearchParams();
    if (params.split !== undefined) query.set("split", params.split);
    if (params.labeled !== undefined) query.set("labeled", String(params.labeled));
    if (params.page !== undefined) query.set("page", String(params.page));
    if (params.pageSize !== undefined) query.set("page_size", String(params.pageSize));
    const suffix = query.size > 0 ? `?${query.toString()}` : "";
    return this.request<ObservationPage>(`/api/observations${suffix}`);
  }

  /** URL of one frame image; used directly as an <img> src. */
  frameUrl(observationId: string, frameIndex: number): string {
    return `${this.baseUrl}/api/observations/${encodeURIComponent(observationId)}/frames/${frameIndex}`;
  }

  runs(): Promise<{ runs: RunSummary[] }> {
    return this.request<{ runs: RunSummary[] }>("/api/runs");
  }

  verdicts(runId: string): Promise<RunVerdicts> {
    return this.request<RunVerdicts>(`/api/runs/${encodeURIComponent(runId)}/verdicts`);
  }

  aggregate(runId: string, target: string): Promise<Aggregate> {
    const query = new URLSearchParams({ target });
    return this.request<Aggregate>(
      `/api/runs/${encodeURIComponent(runId)}/aggregate?${query.toString()}`,
    );
  }

  postLabel(submission: LabelSubmission): Promise<Ack> {
    return this.request<Ack>("/api/labels", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(submission),
    });
  }

  postScore(submission: ScoreSubmission): Promise<Ack> {
    return this.request<Ack>("/api/scores", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(submission),
    });
  }
}
