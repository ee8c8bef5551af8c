import type {
  PosteriorView,
  SessionCreateIn,
  SessionView,
  WhatIfEntryView,
} from "./types.js";

/** Error payload the server attaches to every non-2xx response. */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Typed client for the session service. One instance per API origin. */
export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchImpl?: FetchLike,
  ) {
    // Bind explicitly: bare `fetch` loses its `this` when stored on a class.
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let code = `http-${response.status}`;
      let message = response.statusText || code;
      try {
        const payload = (await response.json()) as {
          code?: string;
          message?: string;
        };
        if (typeof payload.code === "string") code = payload.code;
        if (typeof payload.message === "string") message = payload.message;
      } catch {
        // Non-JSON error body; keep the HTTP-status fallback.
      }
      throw new ApiError(code, message, response.status);
    }
    return (await response.json()) as T;
  }

  healthz(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  createSession(body: SessionCreateIn): Promise<SessionView> {
    return this.request("POST", "/sessions", body);
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  submitResponse(
    sessionId: string,
    itemId: string,
    response: 0 | 1,
  ): Promise<SessionView> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/responses`,
      { item_id: itemId, response },
    );
  }

  getPosterior(sessionId: string): Promise<PosteriorView> {
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/posterior`,
    );
  }

  async getWhatIf(sessionId: string): Promise<WhatIfEntryView[]> {
    const payload = await this.request<{ entries: WhatIfEntryView[] }>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/whatif`,
    );
    return payload.entries;
  }

  deleteSession(sessionId: string): Promise<{ deleted: boolean }> {
    return this.request(
      "DELETE",
      `/sessions/${encodeURIComponent(sessionId)}`,
    );
  }
}

/**
 * Serializes mutations: a task passed to `run` starts only after every
 * previously enqueued task has settled, so at most one mutation is in flight
 * per gate (the client-side mirror of the server's per-session lock).
 */
export class MutationGate {
  private chain: Promise<unknown> = Promise.resolve();
  private depth = 0;

  get busy(): boolean {
    return this.depth > 0;
  }

  run<T>(task: () => Promise<T>): Promise<T> {
    this.depth += 1;
    const result = this.chain.then(task).finally(() => {
      this.depth -= 1;
    });
    // Keep the chain alive after failures; callers see them via `result`.
    this.chain = result.then(
      () => undefined,
      () => undefined,
    );
    return result;
  }
}
