/**
 * Log-scaled popularity chart rendered as an inline SVG string.
 *
 * A log axis cannot show zero: null values (archived stretches) and
 * non-positive values break a series into separate segments, leaving
 * visible gaps.
 */
import { SeriesPoint } from "./api.js";

export interface ChartSeries {
  label: string;
  points: SeriesPoint[];
}

/** Per-slice thresholds for shading the label bands behind the series. */
export interface ThresholdBand {
  slice_index: number;
  p10: number | null;
  p50: number | null;
}

export interface XY {
  x: number;
  y: number;
}

const PALETTE = ["#1f6feb", "#d1242f", "#2da44e", "#bf8700", "#8250df", "#0f6d6d"];

/** Split a series at gaps: nulls and values a log scale cannot display. */
export function splitIntoSegments(points: SeriesPoint[]): XY[][] {
  const segments: XY[][] = [];
  let current: XY[] = [];
  for (const point of points) {
    if (point.value === null || point.value <= 0) {
      if (current.length) {
        segments.push(current);
        current = [];
      }
      continue;
    }
    current.push({ x: point.slice_index, y: point.value });
  }
  if (current.length) {
    segments.push(current);
  }
  return segments;
}

function path(points: XY[], sx: (x: number) => number, sy: (y: number) => number): string {
  return points
    .map((p, i) => `${i === 0 ? "M" : "L"}${sx(p.x).toFixed(1)},${sy(p.y).toFixed(1)}`)
    .join(" ");
}

/** Contiguous runs of slices whose thresholds are both displayable. */
function bandRuns(bands: ThresholdBand[]): ThresholdBand[][] {
  const runs: ThresholdBand[][] = [];
  let current: ThresholdBand[] = [];
  for (const band of [...bands].sort((a, b) => a.slice_index - b.slice_index)) {
    if (band.p10 === null || band.p50 === null || band.p10 <= 0 || band.p50 <= 0) {
      if (current.length) {
        runs.push(current);
        current = [];
      }
    } else {
      current.push(band);
    }
  }
  if (current.length) {
    runs.push(current);
  }
  return runs;
}

function bandPolygon(
  run: ThresholdBand[],
  top: (b: ThresholdBand) => number,
  bottom: (b: ThresholdBand) => number,
  sx: (x: number) => number,
  sy: (y: number) => number,
  clampY: (v: number) => number,
): string {
  const upper = run.map(
    (b, i) =>
      `${i === 0 ? "M" : "L"}${sx(b.slice_index).toFixed(1)},${clampY(sy(top(b))).toFixed(1)}`,
  );
  const lower = [...run]
    .reverse()
    .map((b) => `L${sx(b.slice_index).toFixed(1)},${clampY(sy(bottom(b))).toFixed(1)}`);
  return [...upper, ...lower, "Z"].join(" ");
}

export function chartSvg(
  series: ChartSeries[],
  bands: ThresholdBand[] = [],
  width = 720,
  height = 320,
): string {
  const margin = { top: 12, right: 12, bottom: 24, left: 48 };
  const innerW = width - margin.left - margin.right;
  const innerH = height - margin.top - margin.bottom;

  const allSegments = series.map((s) => splitIntoSegments(s.points));
  const xs: number[] = [];
  const ys: number[] = [];
  for (const segments of allSegments) {
    for (const segment of segments) {
      for (const p of segment) {
        xs.push(p.x);
        ys.push(p.y);
      }
    }
  }
  if (!xs.length) {
    return `<svg width="${width}" height="${height}"><text x="20" y="40">no data</text></svg>`;
  }
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.log10(Math.min(...ys));
  const yMax = Math.log10(Math.max(...ys));
  const ySpan = yMax - yMin || 1;
  const xSpan = xMax - xMin || 1;

  const sx = (x: number) => margin.left + ((x - xMin) / xSpan) * innerW;
  const sy = (y: number) => margin.top + innerH - ((Math.log10(y) - yMin) / ySpan) * innerH;

  const parts: string[] = [
    `<svg width="${width}" height="${height}" class="popularity-chart" role="img">`,
    `<rect x="${margin.left}" y="${margin.top}" width="${innerW}" height="${innerH}" class="plot-bg"/>`,
  ];
  // label bands: noise below P10, weak between P10 and P50
  const clampY = (v: number) =>
    Math.min(margin.top + innerH, Math.max(margin.top, v));
  for (const run of bandRuns(bands)) {
    const visible = run.filter((b) => b.slice_index >= xMin && b.slice_index <= xMax);
    if (visible.length < 2) continue;
    parts.push(
      `<path d="${bandPolygon(visible, (b) => b.p10!, () => Math.pow(10, yMin), sx, sy, clampY)}" class="band noise-band"/>`,
      `<path d="${bandPolygon(visible, (b) => b.p50!, (b) => b.p10!, sx, sy, clampY)}" class="band weak-band"/>`,
    );
  }
  // decade gridlines
  for (let d = Math.ceil(yMin); d <= Math.floor(yMax); d++) {
    const y = sy(Math.pow(10, d)).toFixed(1);
    parts.push(
      `<line x1="${margin.left}" x2="${margin.left + innerW}" y1="${y}" y2="${y}" class="grid"/>`,
      `<text x="4" y="${y}" class="tick">1e${d}</text>`,
    );
  }
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    for (const segment of allSegments[i]) {
      if (segment.length === 1) {
        parts.push(
          `<circle cx="${sx(segment[0].x).toFixed(1)}" cy="${sy(segment[0].y).toFixed(1)}" r="2.5" fill="${color}"/>`,
        );
      } else {
        parts.push(`<path d="${path(segment, sx, sy)}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
      }
    }
    const ly = margin.top + 14 + i * 16;
    parts.push(
      `<rect x="${margin.left + 8}" y="${ly - 9}" width="10" height="10" fill="${color}"/>`,
      `<text x="${margin.left + 22}" y="${ly}" class="legend">${s.label}</text>`,
    );
  });
  // x ticks: first, middle, last slice
  for (const x of [xMin, Math.round((xMin + xMax) / 2), xMax]) {
    parts.push(
      `<text x="${sx(x).toFixed(1)}" y="${height - 6}" class="tick" text-anchor="middle">${x}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

/** Legend label for a topic: its id plus the three strongest words. */
export function seriesLabel(topicId: number, words: [string, number][]): string {
  const top = words.slice(0, 3).map(([w]) => w);
  return top.length ? `${topicId}: ${top.join(", ")}` : `topic ${topicId}`;
}
