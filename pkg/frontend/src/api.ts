// Thin typed client for the annotation API. The fetch implementation is
// injectable so tests can stub or instrument it.

import type { NextResponse, Progress, SubmitBody } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class HttpError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(`HTTP ${status}: ${message}`);
  }
}

export class NetworkError extends Error {}

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    return body.error ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

export class HarnessClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`);
    } catch (err) {
      throw new NetworkError(String(err));
    }
    if (!response.ok) {
      throw new HttpError(response.status, await errorMessage(response));
    }
    return (await response.json()) as T;
  }

  fetchNext(annotatorId: string): Promise<NextResponse> {
    return this.get<NextResponse>(
      `/api/pairs/next?annotator=${encodeURIComponent(annotatorId)}`,
    );
  }

  progress(annotatorId: string): Promise<Progress> {
    return this.get<Progress>(
      `/api/progress?annotator=${encodeURIComponent(annotatorId)}`,
    );
  }

  async submit(body: SubmitBody): Promise<void> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}/api/responses`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (err) {
      throw new NetworkError(String(err));
    }
    if (!response.ok) {
      throw new HttpError(response.status, await errorMessage(response));
    }
  }
}
