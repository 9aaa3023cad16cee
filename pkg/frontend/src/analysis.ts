/**
 * Analysis panel state: the two-stage LLM report for one topic.
 *
 * Upstream problems are first-class states, not blank panels: 501 means the
 * server has no LLM configured, 502 means the LLM endpoint failed.
 */
import { ApiError, TrendwatchApi } from "./api.js";
import { markdownToHtml } from "./markdown.js";

export type AnalysisState =
  | { kind: "loading" }
  | { kind: "ready"; summaryHtml: string; analysisHtml: string; warnings: string[] }
  | { kind: "unconfigured" }
  | { kind: "upstream-error"; detail: string }
  | { kind: "error"; detail: string };

export async function fetchAnalysis(
  api: TrendwatchApi,
  topicId: number,
): Promise<AnalysisState> {
  try {
    const payload = await api.analyze(topicId);
    return {
      kind: "ready",
      summaryHtml: markdownToHtml(payload.summary),
      analysisHtml: markdownToHtml(payload.analysis),
      warnings: payload.warnings,
    };
  } catch (err) {
    if (err instanceof ApiError && err.status === 501) {
      return { kind: "unconfigured" };
    }
    if (err instanceof ApiError && err.status === 502) {
      return { kind: "upstream-error", detail: err.message };
    }
    return { kind: "error", detail: err instanceof Error ? err.message : String(err) };
  }
}

export function analysisHtml(state: AnalysisState): string {
  switch (state.kind) {
    case "loading":
      return `<p class="muted">asking the language model…</p>`;
    case "unconfigured":
      return `<p class="muted">no LLM endpoint configured on the server; analysis is unavailable.</p>`;
    case "upstream-error":
      return `<p class="error">the LLM endpoint failed; try again later.</p>`;
    case "error":
      return `<p class="error">analysis failed: ${state.detail}</p>`;
    case "ready": {
      const warn = state.warnings.length
        ? `<p class="warning">${state.warnings.join("; ")}</p>`
        : "";
      return (
        warn +
        `<section class="analysis-summary">${state.summaryHtml}</section>` +
        `<hr/><section class="analysis-deep">${state.analysisHtml}</section>`
      );
    }
  }
}
