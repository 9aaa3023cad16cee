/**
 * Page wiring: view state, event handlers, and polling for new slices.
 *
 * The dashboard never recomputes labels, counts or thresholds — it renders
 * what the API returns and mutates server state only through POST /zeroshot
 * and POST /analyze.
 */
import { SignalsPayload, SliceInfo, TrendwatchApi } from "./api.js";
import { boardHtml } from "./board.js";
import { ChartSeries, ThresholdBand, chartSvg, seriesLabel } from "./chart.js";
import { analysisHtml, fetchAnalysis } from "./analysis.js";
import { submitZeroShot } from "./zeroshot.js";

interface ViewState {
  slices: SliceInfo[];
  selectedSlice: number | null;
  selectedTopics: number[];
  searchQuery: string;
  hiddenClasses: Set<string>;
}

const api = new TrendwatchApi("");
const state: ViewState = {
  slices: [],
  selectedSlice: null,
  selectedTopics: [],
  searchQuery: "",
  hiddenClasses: new Set(),
};

const POLL_MS = 5000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

async function refreshSlices(): Promise<void> {
  try {
    const slices = await api.slices();
    const hadNone = state.slices.length === 0;
    const grew = slices.length > state.slices.length;
    state.slices = slices;
    if ((hadNone || state.selectedSlice === null) && slices.length) {
      state.selectedSlice = slices[slices.length - 1].slice_index;
    }
    if (grew || hadNone) {
      renderSliceControls();
      await renderBoard();
    }
  } catch {
    el<HTMLDivElement>("board").innerHTML =
      `<p class="error">cannot reach the trendwatch API</p>`;
  }
}

function renderSliceControls(): void {
  const slider = el<HTMLInputElement>("slice-slider");
  const label = el<HTMLSpanElement>("slice-label");
  if (!state.slices.length) {
    label.textContent = "no slices yet";
    return;
  }
  const last = state.slices[state.slices.length - 1].slice_index;
  slider.min = String(state.slices[0].slice_index);
  slider.max = String(last);
  slider.value = String(state.selectedSlice ?? last);
  const info = state.slices.find((s) => s.slice_index === state.selectedSlice);
  label.textContent = info
    ? `slice ${info.slice_index} (${info.start.slice(0, 10)}, ${info.n_units} units)`
    : "";
}

async function renderBoard(): Promise<void> {
  if (state.selectedSlice === null) {
    return;
  }
  const board = el<HTMLDivElement>("board");
  let payload: SignalsPayload;
  try {
    payload = await api.signals(state.selectedSlice);
  } catch {
    board.innerHTML = `<p class="error">no report for slice ${state.selectedSlice}</p>`;
    return;
  }
  board.innerHTML = boardHtml(payload, state.searchQuery);
  for (const cls of state.hiddenClasses) {
    board.querySelectorAll(`.board-table.${cls}`).forEach((n) => n.classList.add("hidden"));
  }
  board.querySelectorAll<HTMLTableRowElement>("tr.signal-row").forEach((row) => {
    row.addEventListener("click", () => {
      const key = row.dataset.key ?? "";
      if (key.startsWith("topic:")) {
        void openTopic(Number(key.slice("topic:".length)));
      }
    });
  });
}

async function openTopic(topicId: number): Promise<void> {
  if (!state.selectedTopics.includes(topicId)) {
    state.selectedTopics = [...state.selectedTopics.slice(-4), topicId];
  }
  await renderChart();
  el<HTMLDivElement>("topic-panel").classList.remove("hidden");
  el<HTMLSpanElement>("topic-title").textContent = `topic ${topicId}`;
  const analyzeBtn = el<HTMLButtonElement>("analyze-btn");
  analyzeBtn.onclick = async () => {
    const panel = el<HTMLDivElement>("analysis");
    panel.innerHTML = analysisHtml({ kind: "loading" });
    panel.innerHTML = analysisHtml(await fetchAnalysis(api, topicId));
  };
}

async function renderChart(): Promise<void> {
  const series: ChartSeries[] = [];
  for (const topicId of state.selectedTopics) {
    try {
      const topic = await api.topic(topicId);
      series.push({ label: seriesLabel(topicId, topic.words), points: topic.series });
    } catch {
      // topic may predate the current snapshot; skip silently
    }
  }
  const bands: ThresholdBand[] = await Promise.all(
    state.slices.map(async (s) => {
      try {
        const th = await api.thresholds(s.slice_index);
        return { slice_index: s.slice_index, p10: th.p10, p50: th.p50 };
      } catch {
        return { slice_index: s.slice_index, p10: null, p50: null };
      }
    }),
  );
  el<HTMLDivElement>("chart").innerHTML = chartSvg(series, bands);
}

function wireControls(): void {
  el<HTMLInputElement>("slice-slider").addEventListener("input", (ev) => {
    state.selectedSlice = Number((ev.target as HTMLInputElement).value);
    renderSliceControls();
    void renderBoard();
  });
  el<HTMLInputElement>("search").addEventListener("input", (ev) => {
    state.searchQuery = (ev.target as HTMLInputElement).value;
    void renderBoard();
  });
  for (const cls of ["noise", "weak", "strong"]) {
    el<HTMLInputElement>(`show-${cls}`).addEventListener("change", (ev) => {
      if ((ev.target as HTMLInputElement).checked) {
        state.hiddenClasses.delete(cls);
      } else {
        state.hiddenClasses.add(cls);
      }
      void renderBoard();
    });
  }
  el<HTMLFormElement>("zeroshot-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    void (async () => {
      const result = await submitZeroShot(api, {
        name: el<HTMLInputElement>("zs-name").value,
        description: el<HTMLInputElement>("zs-description").value,
        beta: Number(el<HTMLInputElement>("zs-beta").value),
      });
      const note = el<HTMLSpanElement>("zs-result");
      note.textContent = result.message;
      note.className = result.ok ? "ok" : "error";
    })();
  });
  el<HTMLButtonElement>("clear-topics").addEventListener("click", () => {
    state.selectedTopics = [];
    el<HTMLDivElement>("topic-panel").classList.add("hidden");
  });
}

export function start(): void {
  wireControls();
  void refreshSlices();
  setInterval(() => void refreshSlices(), POLL_MS);
}

start();
