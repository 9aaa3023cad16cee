/**
 * Signal board: the per-slice noise / weak / strong tables.
 *
 * Partitioning and filtering never copy or rewrite row objects — the board
 * must show the API payload rows verbatim, in payload order.
 */
import { SignalClass, SignalRow, SignalsPayload } from "./api.js";

export interface BoardPartition {
  noise: SignalRow[];
  weak: SignalRow[];
  strong: SignalRow[];
}

export function partitionSignals(signals: SignalRow[]): BoardPartition {
  const partition: BoardPartition = { noise: [], weak: [], strong: [] };
  for (const row of signals) {
    partition[row.label].push(row);
  }
  return partition;
}

/** Case-insensitive substring match over topic words and zero-shot names. */
export function filterSignals(rows: SignalRow[], query: string): SignalRow[] {
  const needle = query.trim().toLowerCase();
  if (!needle) {
    return rows;
  }
  return rows.filter((row) => {
    const haystack = [row.name ?? "", ...(row.top_words ?? [])].join(" ").toLowerCase();
    return haystack.includes(needle);
  });
}

export function rowKey(row: SignalRow): string {
  return row.kind === "zeroshot" ? `zs:${row.name}` : `topic:${row.topic_id}`;
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function rowHtml(row: SignalRow): string {
  const id =
    row.kind === "zeroshot" ? escapeHtml(row.name ?? "") : String(row.topic_id);
  const words = escapeHtml((row.top_words ?? []).slice(0, 5).join(", "));
  const slope = row.slope === null ? "–" : row.slope.toFixed(3);
  return (
    `<tr data-key="${escapeHtml(rowKey(row))}" class="signal-row ${row.kind}">` +
    `<td>${id}</td><td class="words">${words}</td>` +
    `<td class="num">${row.popularity.toFixed(2)}</td>` +
    `<td class="num">${slope}</td></tr>`
  );
}

function tableHtml(title: SignalClass, rows: SignalRow[]): string {
  const body = rows.length
    ? rows.map(rowHtml).join("")
    : `<tr><td colspan="4" class="empty">no ${title} signals</td></tr>`;
  return (
    `<section class="board-table ${title}">` +
    `<h3>${title} <span class="count">${rows.length}</span></h3>` +
    `<table><thead><tr><th>topic</th><th>top words</th>` +
    `<th>popularity</th><th>slope</th></tr></thead>` +
    `<tbody>${body}</tbody></table></section>`
  );
}

/** The three tables plus the thresholds that produced the labels. */
export function boardHtml(payload: SignalsPayload, query = ""): string {
  const filtered = filterSignals(payload.signals, query);
  const partition = partitionSignals(filtered);
  const th = payload.thresholds;
  const fmt = (v: number | null) => (v === null ? "–" : v.toFixed(3));
  return (
    `<div class="board-meta">slice ${payload.slice_index} · ` +
    `${payload.start.slice(0, 10)} → ${payload.end.slice(0, 10)} · ` +
    `P10 ${fmt(th.p10)} · P50 ${fmt(th.p50)} · pool ${th.pool_size}</div>` +
    `<div class="board-grid">` +
    tableHtml("strong", partition.strong) +
    tableHtml("weak", partition.weak) +
    tableHtml("noise", partition.noise) +
    `</div>`
  );
}
