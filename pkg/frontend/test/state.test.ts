import { describe, expect, it, vi } from "vitest";

import { AskResponse } from "../src/api.js";
import {
  DEFAULT_K,
  initialState,
  reconcile,
  selectAnswer,
  setDraft,
  setK,
  submitQuestion,
} from "../src/state.js";

const sample: AskResponse = {
  answers: [
    { text: "42", score: 0.9, table_id: "t1", cells: [[0, 0, 1.0]] },
    { text: "43", score: 0.1, table_id: "t2", cells: [] },
  ],
  tables: [
    { id: "t1", title: null, header: ["h"], rows: [["42"]] },
    { id: "t2", title: null, header: ["h"], rows: [["43"]] },
  ],
};

function okFetch(capture?: { url?: string; body?: string }) {
  return vi.fn(async (url: string, init: RequestInit) => {
    if (capture) {
      capture.url = url;
      capture.body = String(init.body);
    }
    return new Response(JSON.stringify(sample), { status: 200 });
  });
}

describe("submitQuestion", () => {
  it("sends k=4 by default", async () => {
    const capture: { url?: string; body?: string } = {};
    const state = setDraft(initialState(), "who?");
    const { settle } = await submitQuestion(state, okFetch(capture));
    await settle;
    expect(DEFAULT_K).toBe(4);
    expect(JSON.parse(capture.body!)).toEqual({ question: "who?", k: 4 });
    expect(capture.url).toBe("/ask");
  });

  it("passes the slider value through", async () => {
    const capture: { body?: string } = {};
    const state = setK(setDraft(initialState(), "q"), 7);
    const { settle } = await submitQuestion(state, okFetch(capture));
    await settle;
    expect(JSON.parse(capture.body!).k).toBe(7);
  });

  it("stores the response and selects answer 0", async () => {
    const state = setDraft(initialState(), "q");
    const { settle } = await submitQuestion(state, okFetch());
    const done = await settle;
    expect(done.loading).toBe(false);
    expect(done.lastResponse).toEqual(sample);
    expect(done.selectedAnswer).toBe(0);
    expect(done.error).toBeNull();
  });

  it("keeps the previous result when the server errors", async () => {
    let state = setDraft(initialState(), "first");
    const first = await submitQuestion(state, okFetch());
    state = await first.settle;

    const failing = vi.fn(async () =>
      new Response(JSON.stringify({ error: "question must be non-empty" }), {
        status: 400,
      }),
    );
    const second = await submitQuestion(setDraft(state, "second"), failing);
    const done = await second.settle;
    expect(done.error).toBe("question must be non-empty");
    expect(done.lastResponse).toEqual(sample); // previous result retained
  });

  it("rejects empty questions without a request", async () => {
    const fetchFn = okFetch();
    const { settle } = await submitQuestion(setDraft(initialState(), "   "), fetchFn);
    const done = await settle;
    expect(fetchFn).not.toHaveBeenCalled();
    expect(done.error).toBeTruthy();
  });

  it("ignores stale responses via the sequence number", async () => {
    let state = setDraft(initialState(), "slow");
    const slow = await submitQuestion(state, okFetch());
    state = slow.started;
    // a newer request supersedes the in-flight one
    const fast = await submitQuestion(setDraft(state, "fast"), okFetch());
    state = fast.started;
    const slowSettled = await slow.settle;
    state = reconcile(state, slowSettled);
    expect(state.requestSeq).toBe(2); // the stale settle did not clobber
    const fastSettled = await fast.settle;
    state = reconcile(state, fastSettled);
    expect(state.lastResponse).toEqual(sample);
  });
});

describe("state invariants", () => {
  it("clamps k to [1, 50]", () => {
    expect(setK(initialState(), 0).k).toBe(1);
    expect(setK(initialState(), 51).k).toBe(50);
    expect(setK(initialState(), 7).k).toBe(7);
  });

  it("keeps the selected answer within bounds", () => {
    let state = initialState();
    expect(selectAnswer(state, 1)).toBe(state); // no response yet
    state = { ...state, lastResponse: sample };
    expect(selectAnswer(state, 1).selectedAnswer).toBe(1);
    expect(selectAnswer(state, 5)).toBe(state);
    expect(selectAnswer(state, -1)).toBe(state);
  });

  it("rendering inputs are a pure function of state", async () => {
    const state = setDraft(initialState(), "q");
    const { settle } = await submitQuestion(state, okFetch());
    const a = await settle;
    const b = { ...a };
    expect(b.lastResponse).toEqual(a.lastResponse);
    expect(b.selectedAnswer).toEqual(a.selectedAnswer);
  });
});
