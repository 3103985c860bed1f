// Thin typed client for the service API. Every POST carries a fresh
// idempotency key, so a retried request is applied exactly once server-side.

import type {
  ActionResponse,
  CreateSessionResponse,
  MapSummary,
  Mode,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

let keyCounter = 0;

export function freshIdempotencyKey(): string {
  keyCounter += 1;
  return `${Date.now().toString(36)}-${keyCounter}-${Math.random().toString(36).slice(2, 10)}`;
}

export class ApiClient {
  constructor(
    private baseUrl: string = '',
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const text = await resp.text();
    const body = text ? JSON.parse(text) : {};
    if (!resp.ok) {
      throw new ApiError(resp.status, body.code ?? 'error', body.message ?? resp.statusText);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown, idempotencyKey: string): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: {
        'Content-Type': 'application/json',
        'Idempotency-Key': idempotencyKey,
      },
      body: JSON.stringify(payload),
    });
  }

  listMaps(): Promise<MapSummary[]> {
    return this.request<MapSummary[]>('/api/maps');
  }

  createSession(opts: {
    mode: Mode;
    map_id: string;
    explanation_id?: string;
    quality_condition?: string;
    participant?: string;
  }): Promise<CreateSessionResponse> {
    return this.post<CreateSessionResponse>('/api/sessions', opts, freshIdempotencyKey());
  }

  postAction(sessionId: string, action: string, idempotencyKey: string): Promise<ActionResponse> {
    return this.post<ActionResponse>(`/api/sessions/${sessionId}/actions`, { action }, idempotencyKey);
  }

  postRating(sessionId: string, score: number, idempotencyKey: string): Promise<{ ok: boolean }> {
    return this.post<{ ok: boolean }>(`/api/sessions/${sessionId}/rating`, { score }, idempotencyKey);
  }

  postExplanation(
    sessionId: string,
    text: string,
    idempotencyKey: string,
  ): Promise<{ ok: boolean; stored_text: string }> {
    return this.post<{ ok: boolean; stored_text: string }>(
      `/api/sessions/${sessionId}/explanation`,
      { text },
      idempotencyKey,
    );
  }

  fetchSessionLog(sessionId: string, adminToken: string): Promise<{ records: unknown[] }> {
    return this.request<{ records: unknown[] }>(`/api/sessions/${sessionId}`, {
      headers: { 'X-Admin-Token': adminToken },
    });
  }

  fetchSessionView<T>(sessionId: string): Promise<T> {
    return this.request<T>(`/api/sessions/${sessionId}/view`);
  }
}
