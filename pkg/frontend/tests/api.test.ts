import assert from 'node:assert/strict';
import { test } from 'node:test';

import { ApiError, ReviewApiClient, type FetchLike } from '../src/api.js';

interface Recorded {
  url: string;
  method: string;
  body: unknown;
}

function stubFetch(status: number, payload: unknown, log: Recorded[]): FetchLike {
  return async (url, init) => {
    log.push({
      url,
      method: init?.method ?? 'GET',
      body: init?.body ? JSON.parse(String(init.body)) : null,
    });
    return new Response(JSON.stringify(payload), {
      status,
      headers: { 'Content-Type': 'application/json' },
    });
  };
}

test('compare builds the query string the service expects', async () => {
  const log: Recorded[] = [];
  const client = new ReviewApiClient('http://host:1', stubFetch(200, { totals: {} }, log));
  await client.compare('cand id', 'ref id');
  assert.equal(log[0]?.url, 'http://host:1/api/compare?candidate=cand+id&reference=ref+id');
});

test('submitReview posts actions and reviewer to the review route', async () => {
  const log: Recorded[] = [];
  const client = new ReviewApiClient('http://host:1', stubFetch(200, { new_id: 'n1', diagnostics: [] }, log));
  const result = await client.submitReview('abc', [{ action: 'delete', rule: 2 }], 'sme');
  assert.equal(result.new_id, 'n1');
  assert.equal(log[0]?.url, 'http://host:1/api/rulesets/abc/review');
  assert.equal(log[0]?.method, 'POST');
  assert.deepEqual(log[0]?.body, { actions: [{ action: 'delete', rule: 2 }], reviewer: 'sme' });
});

test('error envelopes surface as ApiError with code, message, diagnostics', async () => {
  const envelope = {
    code: 'ValidationFailed',
    message: 'validation failed: UnknownOutcomeLevel',
    diagnostics: [{ code: 'UnknownOutcomeLevel', message: 'bad', severity: 'error', rule: 0 }],
  };
  const client = new ReviewApiClient('', stubFetch(422, envelope, []));
  await assert.rejects(
    () => client.submitReview('abc', [], 'sme'),
    (err: unknown) => {
      assert.ok(err instanceof ApiError);
      assert.equal(err.status, 422);
      assert.equal(err.body.code, 'ValidationFailed');
      assert.equal(err.body.diagnostics?.length, 1);
      return true;
    },
  );
});

test('non-JSON error bodies still become structured errors', async () => {
  const broken: FetchLike = async () => new Response('gateway exploded', { status: 502 });
  const client = new ReviewApiClient('', broken);
  await assert.rejects(
    () => client.listRulesets(),
    (err: unknown) => {
      assert.ok(err instanceof ApiError);
      assert.equal(err.body.code, 'HTTP502');
      assert.equal(err.body.message, 'gateway exploded');
      return true;
    },
  );
});

test('ids are URI-encoded in path segments', async () => {
  const log: Recorded[] = [];
  const client = new ReviewApiClient('', stubFetch(200, {}, log));
  await client.getRuleset('weird/id');
  assert.equal(log[0]?.url, '/api/rulesets/weird%2Fid');
});
