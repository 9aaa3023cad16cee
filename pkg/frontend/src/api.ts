/**
 * Typed client for the trendwatch HTTP API.
 *
 * The dashboard is a pure consumer: payloads are passed through to the view
 * untouched so that what the user sees is exactly what the engine emitted.
 */

export type SignalClass = "noise" | "weak" | "strong";

export interface SignalRow {
  kind: "automatic" | "zeroshot";
  label: SignalClass;
  popularity: number;
  p10: number;
  p50: number;
  slope: number | null;
  /** automatic topics */
  topic_id?: number;
  top_words?: string[];
  /** zero-shot topics */
  name?: string;
  captured_docs?: number;
}

export interface Thresholds {
  p10: number | null;
  p50: number | null;
  pool_size: number;
}

export interface SignalsPayload {
  slice_index: number;
  start: string;
  end: string;
  thresholds: Thresholds;
  signals: SignalRow[];
}

export interface SliceInfo {
  slice_index: number;
  start: string;
  end: string;
  n_units: number;
  topics_extracted: number;
}

export interface SeriesPoint {
  slice_index: number;
  value: number | null;
}

export interface TopicPayload {
  topic_id: number;
  first_seen: number;
  last_updated: number;
  archived_at: number | null;
  series: SeriesPoint[];
  words: [string, number][];
  doc_counts: Record<string, number>;
}

export interface AnalysisPayload {
  topic_id: number;
  summary: string;
  analysis: string;
  warnings: string[];
}

export interface ZeroShotDraft {
  name: string;
  description: string;
  beta: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function getJson<T>(url: string): Promise<T> {
  const resp = await fetch(url);
  if (!resp.ok) {
    throw new ApiError(resp.status, await resp.text());
  }
  return (await resp.json()) as T;
}

export class TrendwatchApi {
  constructor(private readonly base: string = "") {}

  slices(): Promise<SliceInfo[]> {
    return getJson(`${this.base}/slices`);
  }

  signals(sliceIndex: number): Promise<SignalsPayload> {
    return getJson(`${this.base}/signals?slice=${sliceIndex}`);
  }

  thresholds(sliceIndex: number): Promise<Thresholds & { slice_index: number }> {
    return getJson(`${this.base}/thresholds?slice=${sliceIndex}`);
  }

  topic(topicId: number): Promise<TopicPayload> {
    return getJson(`${this.base}/topics/${topicId}`);
  }

  async addZeroShot(draft: ZeroShotDraft): Promise<{ status: string; name: string }> {
    const resp = await fetch(`${this.base}/zeroshot`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(draft),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return (await resp.json()) as { status: string; name: string };
  }

  async analyze(topicId: number): Promise<AnalysisPayload> {
    const resp = await fetch(`${this.base}/analyze/${topicId}`, { method: "POST" });
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return (await resp.json()) as AnalysisPayload;
  }
}
