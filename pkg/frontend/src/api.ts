// Typed client for the session HTTP API. The UI owns no chart math; every
// piece of rendered state comes straight off these responses.

export interface SeriesData {
  label: string | null;
  x: (string | number)[];
  y: number[];
}

export interface ChartData {
  mark_kind: string;
  series: SeriesData[];
  axis_labels: { x?: string | null; y?: string | null };
  title: string | null;
}

export interface ModelResultData {
  model_name: string;
  script: string;
  chart: ChartData | null;
  image_ref: string | null;
  error: string | null;
}

export interface TurnData {
  effective_query: string;
  results: Record<string, ModelResultData>;
}

export interface SessionData {
  session_id: string;
  dataset: string;
  models: { provider_id: string; model_name: string; mode: string }[];
  base_query: string;
  refinements: string[];
  turns: TurnData[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers: { "Content-Type": "application/json", ...(init?.headers ?? {}) },
    });
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listDatasets(): Promise<{ datasets: string[] }> {
    return this.request("/datasets");
  }

  createSession(dataset: string, models: string[]): Promise<SessionData> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify({ dataset, models }),
    });
  }

  getSession(sessionId: string): Promise<SessionData> {
    return this.request(`/sessions/${sessionId}`);
  }

  postQuery(sessionId: string, text: string): Promise<TurnData> {
    return this.request(`/sessions/${sessionId}/query`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  refine(sessionId: string, text: string): Promise<TurnData> {
    return this.request(`/sessions/${sessionId}/refine`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  imageUrl(ref: string): string {
    return `${this.baseUrl}/images/${ref}`;
  }
}
