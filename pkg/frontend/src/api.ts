/**
 * Typed API client. Every response body is schema-validated before it
 * reaches a view, so the UI never renders fabricated or malformed data.
 */

import { z } from "zod";
import {
  Catalogs,
  CloseResponse,
  DiaryPage,
  ErrorBody,
  Health,
  MemoriesResponse,
  MessageResponse,
  Session,
  User,
} from "./schemas.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
    public field: string | null = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Network-level failure (server unreachable); retryable by the user. */
export class NetworkError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

export interface PreferencesPayload {
  age_band?: string;
  appearance?: Record<string, string>;
  background_aesthetic?: string;
  traits?: string[];
  emotional_expressiveness?: number;
}

export class ApiClient {
  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(
    method: string,
    path: string,
    schema: z.ZodType<T>,
    body?: unknown,
  ): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        method,
        headers: body === undefined ? {} : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (exc) {
      throw new NetworkError(`cannot reach ${this.baseUrl}: ${String(exc)}`);
    }
    let payload: unknown;
    try {
      payload = await response.json();
    } catch {
      throw new ApiError("invalid_response", "response body is not JSON", response.status);
    }
    if (!response.ok) {
      const parsed = ErrorBody.safeParse(payload);
      if (parsed.success) {
        throw new ApiError(
          parsed.data.code,
          parsed.data.message,
          response.status,
          parsed.data.field ?? null,
        );
      }
      throw new ApiError("invalid_response", "malformed error body", response.status);
    }
    const parsed = schema.safeParse(payload);
    if (!parsed.success) {
      throw new ApiError(
        "invalid_response",
        `response failed schema validation: ${parsed.error.issues[0]?.message ?? "unknown"}`,
        response.status,
      );
    }
    return parsed.data;
  }

  health(): Promise<Health> {
    return this.request("GET", "/health", Health);
  }

  catalogs(): Promise<Catalogs> {
    return this.request("GET", "/catalogs", Catalogs);
  }

  createUser(preferences: PreferencesPayload): Promise<User> {
    return this.request("POST", "/users", User, { preferences });
  }

  getPreferences(userId: string): Promise<User> {
    return this.request("GET", `/users/${encodeURIComponent(userId)}/preferences`, User);
  }

  updatePreferences(userId: string, preferences: PreferencesPayload): Promise<User> {
    return this.request("PUT", `/users/${encodeURIComponent(userId)}/preferences`, User, {
      preferences,
    });
  }

  openSession(userId: string): Promise<Session> {
    return this.request("POST", `/users/${encodeURIComponent(userId)}/sessions`, Session);
  }

  postMessage(sessionId: string, text: string): Promise<MessageResponse> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/messages`,
      MessageResponse,
      { text },
    );
  }

  closeSession(sessionId: string): Promise<CloseResponse> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/close`,
      CloseResponse,
    );
  }

  listDiaries(
    userId: string,
    page: number,
    pageSize: number,
    snapshot?: number,
  ): Promise<DiaryPage> {
    const params = new URLSearchParams({ page: String(page), page_size: String(pageSize) });
    if (snapshot !== undefined) params.set("snapshot", String(snapshot));
    return this.request(
      "GET",
      `/users/${encodeURIComponent(userId)}/diaries?${params}`,
      DiaryPage,
    );
  }

  listMemories(userId: string, minStrength?: number, term?: string): Promise<MemoriesResponse> {
    const params = new URLSearchParams();
    if (minStrength !== undefined) params.set("min_strength", String(minStrength));
    if (term !== undefined) params.set("term", term);
    const query = params.toString();
    return this.request(
      "GET",
      `/users/${encodeURIComponent(userId)}/memories${query ? "?" + query : ""}`,
      MemoriesResponse,
    );
  }
}
