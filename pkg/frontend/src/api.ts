// Wire contract of the QA service. Field names mirror the server exactly;
// cells arrive as [row, col, weight] triples.

export interface AnswerPayload {
  text: string;
  score: number;
  table_id: string;
  cells: [number, number, number][];
}

export interface TablePayload {
  id: string;
  title: string | null;
  header: string[];
  rows: string[][];
}

export interface AskResponse {
  answers: AnswerPayload[];
  tables: TablePayload[];
}

export type FetchLike = (url: string, init: RequestInit) => Promise<Response>;

// Same-origin by default; deployments serving the static assets elsewhere
// set window.TRAG_API_BASE before loading the bundle.
export const API_BASE: string =
  ((globalThis as Record<string, unknown>).TRAG_API_BASE as string) || "";

export function buildAskBody(question: string, k: number): string {
  return JSON.stringify({ question, k });
}

export async function ask(
  question: string,
  k: number,
  fetchFn: FetchLike,
  base: string = API_BASE,
): Promise<AskResponse> {
  const resp = await fetchFn(`${base}/ask`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: buildAskBody(question, k),
  });
  if (!resp.ok) {
    let detail = `HTTP ${resp.status}`;
    try {
      const body = await resp.json();
      if (body && typeof body.error === "string") detail = body.error;
    } catch {
      /* non-JSON error body; keep the status text */
    }
    throw new Error(detail);
  }
  return (await resp.json()) as AskResponse;
}
