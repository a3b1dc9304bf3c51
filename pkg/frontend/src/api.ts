/** Thin typed client over the annotation HTTP API. */

import type { AgreementReport, Disagreement, NextTask, Payload, Progress } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") {
      return body.error;
    }
    return JSON.stringify(body);
  } catch {
    return `HTTP ${response.status}`;
  }
}

export class Api {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly base: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async get(path: string): Promise<Response> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok && response.status !== 204) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return response;
  }

  private async post(path: string, body: unknown): Promise<Response> {
    const response = await this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return response;
  }

  /** Next task for this identity, or null when the queue is exhausted. */
  async nextTask(annotator: string): Promise<NextTask | null> {
    const response = await this.get(
      `/api/tasks/next?annotator=${encodeURIComponent(annotator)}`,
    );
    if (response.status === 204) {
      return null;
    }
    return (await response.json()) as NextTask;
  }

  async submit(annotator: string, exampleId: string, payload: Payload): Promise<string> {
    const response = await this.post("/api/annotations", {
      annotator,
      example_id: exampleId,
      payload,
    });
    return ((await response.json()) as { status: string }).status;
  }

  async disagreements(): Promise<Disagreement[]> {
    return (await (await this.get("/api/disagreements")).json()) as Disagreement[];
  }

  async adjudicate(adjudicator: string, exampleId: string, payload: Payload): Promise<string> {
    const response = await this.post("/api/adjudications", {
      adjudicator,
      example_id: exampleId,
      payload,
    });
    return ((await response.json()) as { status: string }).status;
  }

  async agreement(): Promise<AgreementReport> {
    return (await (await this.get("/api/agreement")).json()) as AgreementReport;
  }

  async progress(): Promise<Progress> {
    return (await (await this.get("/api/progress")).json()) as Progress;
  }
}
