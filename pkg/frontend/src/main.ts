// DOM glue: reads inputs, drives state transitions, paints render output.

import { AskResponse } from "./api.js";
import { renderAnswerList, renderHeatmap } from "./render.js";
import {
  initialState,
  reconcile,
  selectAnswer,
  setDraft,
  setK,
  submitQuestion,
  ViewState,
} from "./state.js";

let state: ViewState = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function paint(): void {
  el<HTMLSpanElement>("k-value").textContent = String(state.k);
  el<HTMLDivElement>("status").textContent = state.loading
    ? "asking..."
    : state.error ?? "";
  const resp: AskResponse | null = state.lastResponse;
  el<HTMLDivElement>("answers").innerHTML = resp
    ? renderAnswerList(resp.answers, state.selectedAnswer)
    : "";
  const tableHost = el<HTMLDivElement>("table-view");
  if (resp && resp.answers.length > 0) {
    const answer = resp.answers[state.selectedAnswer];
    const table = resp.tables.find((t) => t.id === answer.table_id);
    tableHost.innerHTML = table ? renderHeatmap(table, answer.cells) : "";
  } else {
    tableHost.innerHTML = "";
  }
}

async function onSubmit(event: Event): Promise<void> {
  event.preventDefault();
  const { started, settle } = await submitQuestion(state, fetch.bind(window));
  state = started;
  paint();
  const settled = await settle;
  state = reconcile(state, settled);
  paint();
}

function wire(): void {
  el<HTMLFormElement>("ask-form").addEventListener("submit", onSubmit);
  el<HTMLInputElement>("question").addEventListener("input", (e) => {
    state = setDraft(state, (e.target as HTMLInputElement).value);
  });
  el<HTMLInputElement>("k-slider").addEventListener("input", (e) => {
    state = setK(state, Number((e.target as HTMLInputElement).value));
    paint();
  });
  el<HTMLDivElement>("answers").addEventListener("click", (e) => {
    const item = (e.target as HTMLElement).closest("li[data-index]");
    if (item) {
      state = selectAnswer(state, Number(item.getAttribute("data-index")));
      paint();
    }
  });
  paint();
}

document.addEventListener("DOMContentLoaded", wire);
