// View state and transitions. The UI renders as a pure function of this
// state; all scoring and cell weights come from the API untouched.

import { ask, AskResponse, FetchLike } from "./api.js";

export const DEFAULT_K = 4;
export const MIN_K = 1;
export const MAX_K = 50;

export interface ViewState {
  questionDraft: string;
  k: number;
  loading: boolean;
  lastResponse: AskResponse | null;
  selectedAnswer: number;
  error: string | null;
  requestSeq: number;
}

export function initialState(): ViewState {
  return {
    questionDraft: "",
    k: DEFAULT_K,
    loading: false,
    lastResponse: null,
    selectedAnswer: 0,
    error: null,
    requestSeq: 0,
  };
}

export function setDraft(state: ViewState, draft: string): ViewState {
  return { ...state, questionDraft: draft };
}

export function setK(state: ViewState, k: number): ViewState {
  const clamped = Math.min(MAX_K, Math.max(MIN_K, Math.round(k)));
  return { ...state, k: clamped };
}

export function selectAnswer(state: ViewState, index: number): ViewState {
  const n = state.lastResponse?.answers.length ?? 0;
  if (index < 0 || index >= n) return state;
  return { ...state, selectedAnswer: index };
}

/**
 * Submit the draft question. Resolves to the updated state; a response
 * belonging to a superseded request is ignored, and errors surface inline
 * without clearing the previous result.
 */
export async function submitQuestion(
  state: ViewState,
  fetchFn: FetchLike,
  base?: string,
): Promise<{ started: ViewState; settle: Promise<ViewState> }> {
  const question = state.questionDraft.trim();
  if (!question) {
    const unchanged = { ...state, error: "enter a question first" };
    return { started: unchanged, settle: Promise.resolve(unchanged) };
  }
  const seq = state.requestSeq + 1;
  const started: ViewState = { ...state, loading: true, error: null, requestSeq: seq };
  const settle = ask(question, state.k, fetchFn, base).then(
    (resp): ViewState => {
      if (started.requestSeq !== seq) return started;
      return {
        ...started,
        loading: false,
        lastResponse: resp,
        selectedAnswer: 0,
        error: null,
      };
    },
    (err): ViewState => ({
      ...started,
      loading: false,
      error: err instanceof Error ? err.message : String(err),
    }),
  );
  return { started, settle };
}

/** Apply a settled state only if it is not stale. */
export function reconcile(current: ViewState, settled: ViewState): ViewState {
  return settled.requestSeq >= current.requestSeq ? settled : current;
}
