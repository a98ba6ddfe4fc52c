// HTML renderers. Pure string-in/string-out so they are testable without a
// DOM; main.ts assigns the results to innerHTML.

import { AnswerPayload, TablePayload } from "./api.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderAnswerList(
  answers: AnswerPayload[],
  selected: number,
): string {
  if (answers.length === 0) {
    return '<p class="empty">no answers</p>';
  }
  const items = answers.map((a, i) => {
    const cls = i === selected ? "answer selected" : "answer";
    return (
      `<li class="${cls}" data-index="${i}">` +
      `<span class="text">${escapeHtml(a.text)}</span>` +
      `<span class="score">${a.score.toFixed(3)}</span>` +
      `<span class="table-id">${escapeHtml(a.table_id)}</span>` +
      `</li>`
    );
  });
  return `<ol class="answers">${items.join("")}</ol>`;
}

/**
 * Table grid with heatmap: each listed cell gets a background whose alpha
 * equals its weight (1.0 = full highlight); unlisted cells stay unstyled.
 * Out-of-bounds cells are dropped with a console warning.
 */
export function renderHeatmap(
  table: TablePayload,
  cells: [number, number, number][],
): string {
  const weights = new Map<string, number>();
  for (const [row, col, weight] of cells) {
    if (row < 0 || row >= table.rows.length || col < 0 || col >= table.header.length) {
      console.warn(`dropping out-of-bounds cell (${row}, ${col}) for table ${table.id}`);
      continue;
    }
    weights.set(`${row},${col}`, weight);
  }
  const parts: string[] = [];
  if (table.title) {
    parts.push(`<caption>${escapeHtml(table.title)}</caption>`);
  }
  const headCells = table.header.map((h) => `<th>${escapeHtml(h)}</th>`).join("");
  parts.push(`<thead><tr>${headCells}</tr></thead>`);
  const bodyRows = table.rows.map((row, r) => {
    const tds = row.map((cell, c) => {
      const w = weights.get(`${r},${c}`);
      const style =
        w === undefined ? "" : ` style="background: rgba(255, 170, 0, ${w})"`;
      return `<td${style}>${escapeHtml(cell)}</td>`;
    });
    return `<tr>${tds.join("")}</tr>`;
  });
  parts.push(`<tbody>${bodyRows.join("")}</tbody>`);
  return `<table class="heatmap">${parts.join("")}</table>`;
}
