// Thin typed client for the annotation service.  The portal holds no
// authoritative state: every view is reconstructed from these responses.

import type {
  FinalizeRequest,
  FinalizedLayer,
  Layer,
  MarkRequest,
  Suggestions,
  TripDetail,
  TripSummary,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText || "request failed";
  try {
    const body = (await response.json()) as { detail?: string };
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  listTrips(): Promise<TripSummary[]> {
    return this.get("/trips");
  }

  getTrip(tripId: string): Promise<TripDetail> {
    return this.get(`/trips/${encodeURIComponent(tripId)}`);
  }

  getLayers(tripId: string, author?: string): Promise<Layer[]> {
    const query = author ? `?author=${encodeURIComponent(author)}` : "";
    return this.get(`/trips/${encodeURIComponent(tripId)}/layers${query}`);
  }

  postMark(tripId: string, mark: MarkRequest): Promise<Layer> {
    return this.post(`/trips/${encodeURIComponent(tripId)}/marks`, mark);
  }

  getSuggestions(tripId: string, profile: "strict" | "easy"): Promise<Suggestions> {
    return this.get(
      `/trips/${encodeURIComponent(tripId)}/suggestions?profile=${profile}`,
    );
  }

  finalize(tripId: string, request: FinalizeRequest): Promise<FinalizedLayer> {
    return this.post(`/trips/${encodeURIComponent(tripId)}/finalize`, request);
  }
}
