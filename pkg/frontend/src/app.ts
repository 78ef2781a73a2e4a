import { ApiClient, ApiError } from "./api.js";
import { BAND_COLORS, ENTITY_COLORS } from "./colors.js";
import { maskedSegments, originalSegments, spanMapConsistent, type Segment } from "./highlight.js";
import { selectionOffsets } from "./selection.js";
import {
  applyBatch,
  applyDocUpdate,
  canGoNext,
  canGoPrevious,
  currentDoc,
  initialState,
  riskRowsWorstFirst,
  type ViewState,
} from "./state.js";
import { ENTITY_TYPES, type ActionName, type EntityType } from "./types.js";

const SERVICE_URL = (window as unknown as { DEID_SERVICE_URL?: string }).DEID_SERVICE_URL
  ?? "http://127.0.0.1:8000";

let state: ViewState = initialState();
const api = new ApiClient(SERVICE_URL, `console-${Date.now().toString(36)}`);

const $ = <T extends HTMLElement>(selector: string): T => {
  const el = document.querySelector<T>(selector);
  if (!el) throw new Error(`missing element ${selector}`);
  return el;
};

function setState(next: ViewState) {
  state = next;
  render();
}

async function run<T>(task: () => Promise<T>, after: (value: T) => ViewState) {
  if (state.pending) return;
  setState({ ...state, pending: true, notice: null });
  try {
    const value = await task();
    setState({ ...after(value), pending: false });
  } catch (error) {
    const message = error instanceof ApiError ? error.body : String(error);
    setState({ ...state, pending: false, notice: message });
  }
}

// --- settings form ----------------------------------------------------------

function renderSettingsForm() {
  const tbody = $("#settings-rows");
  tbody.innerHTML = "";
  for (const etype of ENTITY_TYPES) {
    const row = document.createElement("tr");
    const label = document.createElement("td");
    const chip = document.createElement("span");
    chip.className = "legend-chip";
    chip.style.background = ENTITY_COLORS[etype];
    chip.textContent = " ";
    label.append(chip, ` ${etype}`);
    const cell = document.createElement("td");
    const select = document.createElement("select");
    for (const action of ["redact", "replace", "ignore"] as ActionName[]) {
      const option = document.createElement("option");
      option.value = action;
      option.textContent = action;
      option.selected = state.settings.actions[etype] === action;
      select.append(option);
    }
    select.addEventListener("change", () => {
      state.settings.actions[etype] = select.value as ActionName;
    });
    cell.append(select);
    row.append(label, cell);
    tbody.append(row);
  }
}

function readScalarSettings() {
  state.settings.rng_seed = Number(($("#seed") as HTMLInputElement).value) || 0;
  state.settings.risk_threshold = Number(($("#threshold") as HTMLInputElement).value) || 0.5;
}

// --- panes ------------------------------------------------------------------

function renderSegments(target: HTMLElement, segments: Segment[], pane: "original" | "masked") {
  target.innerHTML = "";
  for (const segment of segments) {
    if (segment.rowIndex === null) {
      target.append(document.createTextNode(segment.text));
      continue;
    }
    const span = document.createElement("span");
    span.textContent = segment.text;
    span.className = "hl";
    span.dataset.row = String(segment.rowIndex);
    span.dataset.pane = pane;
    if (segment.etype) span.style.background = ENTITY_COLORS[segment.etype as EntityType];
    span.title = `${segment.etype} (${segment.action})`;
    span.addEventListener("mouseenter", () => pairHover(segment.rowIndex!, true));
    span.addEventListener("mouseleave", () => pairHover(segment.rowIndex!, false));
    target.append(span);
  }
}

function pairHover(rowIndex: number, on: boolean) {
  document.querySelectorAll(`[data-row="${rowIndex}"]`).forEach((el) => {
    el.classList.toggle("hl-active", on);
  });
}

// --- risk panel ---------------------------------------------------------------

function renderRisk() {
  const panel = $("#risk-panel");
  panel.innerHTML = "";
  if (!state.risk) {
    const note = document.createElement("p");
    note.className = "muted";
    note.textContent = "risk assessment applies to replacement runs only";
    panel.append(note);
    return;
  }
  for (const row of riskRowsWorstFirst(state.risk)) {
    const item = document.createElement("div");
    item.className = "risk-row";
    const chip = document.createElement("span");
    chip.className = "band-chip";
    chip.style.background = BAND_COLORS[row.band];
    chip.textContent = row.band;
    const text = document.createElement("span");
    text.textContent = ` ${row.id}: ${row.unique_count} unique context(s), ${row.risk_percent.toFixed(1)}%`;
    item.append(chip, text);
    panel.append(item);
  }
  if (state.risk.single_document_warning) {
    const warn = document.createElement("p");
    warn.className = "muted";
    warn.textContent = "single-document batch: every context counts as unique";
    panel.append(warn);
  }
}

// --- main render --------------------------------------------------------------

function render() {
  const doc = currentDoc(state);
  $("#doc-label").textContent = doc
    ? `${doc.doc_id} (${state.current + 1}/${state.docs.length})`
    : "no document";
  ($("#prev") as HTMLButtonElement).disabled = !canGoPrevious(state) || state.pending;
  ($("#next") as HTMLButtonElement).disabled = !canGoNext(state) || state.pending;
  ($("#mark") as HTMLButtonElement).disabled = !state.selection || !doc || state.pending;
  ($("#remove") as HTMLButtonElement).disabled = !state.selection || !doc || state.pending;
  ($("#save-settings") as HTMLButtonElement).disabled = state.pending;
  $("#notice").textContent = state.notice ?? "";
  $("#errors").textContent = state.errors
    .map((e) => `${e.file}: ${e.message}`)
    .join("\n");

  const original = $("#original-pane");
  const masked = $("#masked-pane");
  if (!doc) {
    original.textContent = "";
    masked.textContent = "";
  } else if (!spanMapConsistent(doc.masked.masked_text, doc.masked.span_map)) {
    $("#notice").textContent = "span map failed validation; rendering without highlights";
    original.textContent = doc.original_text;
    masked.textContent = doc.masked.masked_text;
  } else {
    renderSegments(original, originalSegments(doc.original_text, doc.masked.span_map), "original");
    renderSegments(masked, maskedSegments(doc.masked.masked_text, doc.masked.span_map), "masked");
  }
  renderRisk();
}

// --- wiring -------------------------------------------------------------------

function wire() {
  renderSettingsForm();

  $("#save-settings").addEventListener("click", () => {
    readScalarSettings();
    void run(
      () => api.putSettings(state.settings),
      (saved) => ({ ...state, settings: saved, settingsSaved: true }),
    );
  });

  $("#upload-one").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    void run(
      async () => api.uploadLetter(file.name, await file.text()),
      (docResult) => applyDocUpdate(state, docResult),
    );
  });

  $("#upload-batch").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    const files = Array.from(input.files ?? []);
    if (!files.length) return;
    void run(
      async () => {
        const payload = [];
        for (const f of files) payload.push({ name: f.name, content: await f.text() });
        return api.uploadBatch(payload);
      },
      (batch) => applyBatch(state, batch),
    );
  });

  document.addEventListener("selectionchange", () => {
    const selection = document.getSelection();
    const pane = $("#original-pane");
    const offsets = selection ? selectionOffsets(pane, selection) : null;
    state = { ...state, selection: offsets };
    ($("#mark") as HTMLButtonElement).disabled = !offsets || !currentDoc(state) || state.pending;
    ($("#remove") as HTMLButtonElement).disabled = !offsets || !currentDoc(state) || state.pending;
  });

  $("#mark").addEventListener("click", () => {
    const doc = currentDoc(state);
    const selection = state.selection;
    if (!doc || !selection) return;
    const etype = ($("#mark-type") as HTMLSelectElement).value;
    void run(
      () => api.markEntity(doc.doc_id, etype, selection.text),
      (updated) => applyDocUpdate(state, updated),
    );
  });

  $("#remove").addEventListener("click", () => {
    const doc = currentDoc(state);
    const selection = state.selection;
    if (!doc || !selection) return;
    const scope = window.confirm(
      "Remove ALL occurrences? (cancel removes just this one)",
    )
      ? "all"
      : "one";
    void run(
      () =>
        scope === "one"
          ? api.removeEntity(doc.doc_id, "one", { start: selection.start, end: selection.end })
          : api.removeEntity(doc.doc_id, "all", { surface: selection.text }),
      (updated) => applyDocUpdate(state, updated),
    );
  });

  $("#prev").addEventListener("click", () => setState({ ...state, current: state.current - 1 }));
  $("#next").addEventListener("click", () => setState({ ...state, current: state.current + 1 }));

  $("#download").addEventListener("click", () => {
    const doc = currentDoc(state);
    if (!doc) return;
    void api.download(doc.doc_id).then((text) => {
      const blob = new Blob([text], { type: "text/plain" });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = `${doc.doc_id}.masked.txt`;
      link.click();
      URL.revokeObjectURL(link.href);
    });
  });

  const markType = $("#mark-type") as HTMLSelectElement;
  for (const etype of ENTITY_TYPES) {
    const option = document.createElement("option");
    option.value = etype;
    option.textContent = etype;
    markType.append(option);
  }

  render();
}

document.addEventListener("DOMContentLoaded", wire);
