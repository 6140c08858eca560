// Thin typed client over the retrieval service HTTP API.

import type {
  ApiErrorBody,
  FeedbackResponse,
  RevealResponse,
  SessionReport,
  StartResponse,
} from "./types.js";

/** Non-2xx response, carrying the server's stable error code. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function request<T>(
  baseUrl: string,
  path: string,
  init?: RequestInit,
): Promise<T> {
  const response = await fetch(`${baseUrl}${path}`, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await response.json();
  if (!response.ok) {
    const err = body as ApiErrorBody;
    throw new ApiError(
      response.status,
      err.error ?? "unknown",
      err.detail ?? `HTTP ${response.status}`,
    );
  }
  return body as T;
}

export class RetrievalApi {
  constructor(private readonly baseUrl: string = "") {}

  startSession(q0: string, t0 = ""): Promise<StartResponse> {
    return request(this.baseUrl, "/sessions", {
      method: "POST",
      body: JSON.stringify({ q0, t0 }),
    });
  }

  submitFeedback(sessionId: string, text: string): Promise<FeedbackResponse> {
    return request(this.baseUrl, `/sessions/${sessionId}/feedback`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  reveal(sessionId: string, imageKey: string): Promise<RevealResponse> {
    return request(this.baseUrl, `/sessions/${sessionId}/reveal`, {
      method: "POST",
      body: JSON.stringify({ image_key: imageKey }),
    });
  }

  getReport(sessionId: string): Promise<SessionReport> {
    return request(this.baseUrl, `/sessions/${sessionId}`);
  }

  closeSession(sessionId: string): Promise<SessionReport> {
    return request(this.baseUrl, `/sessions/${sessionId}`, {
      method: "DELETE",
    });
  }
}
