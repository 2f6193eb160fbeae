/** Typed client for the review service. The UI is a pure consumer: every
 * number it renders comes from a response field, never from local math. */

import type {
  ApiErrorBody,
  ComparisonReportDoc,
  ReviewAction,
  RuleSetDoc,
  RuleSetSummary,
  RunSummary,
} from './types.js';

export class ApiError extends Error {
  readonly status: number;
  readonly body: ApiErrorBody;

  constructor(status: number, body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
    this.status = status;
    this.body = body;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ReviewApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(base = '', fetchImpl: FetchLike = (input, init) => fetch(input, init)) {
    this.base = base.replace(/\/$/, '');
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.base}${path}`, init);
    const text = await response.text();
    let parsed: unknown = null;
    if (text) {
      try {
        parsed = JSON.parse(text);
      } catch {
        parsed = null;
      }
    }
    if (!response.ok) {
      const body =
        parsed && typeof parsed === 'object' && 'code' in (parsed as object)
          ? (parsed as ApiErrorBody)
          : { code: `HTTP${response.status}`, message: text || response.statusText };
      throw new ApiError(response.status, body);
    }
    return parsed as T;
  }

  listRulesets(): Promise<RuleSetSummary[]> {
    return this.request('/api/rulesets');
  }

  getRuleset(id: string): Promise<RuleSetDoc> {
    return this.request(`/api/rulesets/${encodeURIComponent(id)}`);
  }

  compare(candidateId: string, referenceId: string): Promise<ComparisonReportDoc> {
    const query = new URLSearchParams({ candidate: candidateId, reference: referenceId });
    return this.request(`/api/compare?${query}`);
  }

  listRuns(): Promise<RunSummary[]> {
    return this.request('/api/runs');
  }

  getRun(id: string): Promise<Record<string, unknown>> {
    return this.request(`/api/runs/${encodeURIComponent(id)}`);
  }

  submitReview(
    rulesetId: string,
    actions: ReviewAction[],
    reviewer: string,
  ): Promise<{ new_id: string; diagnostics: unknown[] }> {
    return this.request(`/api/rulesets/${encodeURIComponent(rulesetId)}/review`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ actions, reviewer }),
    });
  }

  generate(body: {
    domain: string;
    objective: string;
    strategy: string;
    runs: number;
  }): Promise<{ runs: Array<{ run_index: number; ruleset_ids: string[]; error: unknown }> }> {
    return this.request('/api/generate', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }
}
