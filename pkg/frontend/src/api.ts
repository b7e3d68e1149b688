/** Thin typed client over the review service; the UI talks to nothing else. */

import type {
  AdjudicationRequest,
  AdjudicationResponse,
  ListingPage,
  QueuePage,
  ReviewKind,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface QueueParams {
  kind?: ReviewKind;
  limit?: number;
  cursor?: string;
}

export type ListingKind = "filings" | "sections" | "images";

export class ReviewApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string, params?: Record<string, string | number | undefined>): string {
    const search = new URLSearchParams();
    for (const key of Object.keys(params ?? {}).sort()) {
      const value = params?.[key];
      if (value !== undefined && value !== "") search.set(key, String(value));
    }
    const query = search.toString();
    return `${this.baseUrl}${path}${query ? `?${query}` : ""}`;
  }

  private async getJson<T>(path: string, params?: Record<string, string | number | undefined>): Promise<T> {
    const response = await this.fetchFn(this.url(path, params));
    if (!response.ok) throw new ApiError(response.status, await detailOf(response));
    return (await response.json()) as T;
  }

  queue(params: QueueParams = {}): Promise<QueuePage> {
    return this.getJson<QueuePage>("/queue", {
      kind: params.kind,
      limit: params.limit,
      cursor: params.cursor,
    });
  }

  async adjudicate(body: AdjudicationRequest): Promise<AdjudicationResponse> {
    const response = await this.fetchFn(this.url("/adjudicate"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (response.status !== 201) throw new ApiError(response.status, await detailOf(response));
    return (await response.json()) as AdjudicationResponse;
  }

  list(kind: ListingKind, filters: Record<string, string | number | undefined>): Promise<ListingPage> {
    return this.getJson<ListingPage>(`/${kind}`, filters);
  }

  assetUrl(path: string): string {
    return `${this.baseUrl}/assets/${path}`;
  }

  async assetText(path: string): Promise<string> {
    const response = await this.fetchFn(this.assetUrl(path));
    if (!response.ok) throw new ApiError(response.status, await detailOf(response));
    return await response.text();
  }
}

async function detailOf(response: Response): Promise<string> {
  try {
    const payload = (await response.json()) as { detail?: unknown };
    return typeof payload.detail === "string" ? payload.detail : JSON.stringify(payload);
  } catch {
    return response.statusText || "request failed";
  }
}
