import type { BatchResponse, DocResult, RiskReport, Settings } from "./types.js";
import { defaultSettings } from "./types.js";

/** Single-user reactive state; at most one in-flight pipeline request. */
export interface ViewState {
  settings: Settings;
  settingsSaved: boolean;
  docs: DocResult[];
  current: number;
  risk: RiskReport | null;
  errors: { file: string; message: string }[];
  selection: { start: number; end: number; text: string } | null;
  pending: boolean;
  notice: string | null;
}

export function initialState(): ViewState {
  return {
    settings: defaultSettings(),
    settingsSaved: false,
    docs: [],
    current: 0,
    risk: null,
    errors: [],
    selection: null,
    pending: false,
    notice: null,
  };
}

export function currentDoc(state: ViewState): DocResult | null {
  return state.docs[state.current] ?? null;
}

export function canGoPrevious(state: ViewState): boolean {
  return state.current > 0;
}

export function canGoNext(state: ViewState): boolean {
  return state.current < state.docs.length - 1;
}

export function applyBatch(state: ViewState, batch: BatchResponse): ViewState {
  return {
    ...state,
    docs: batch.results,
    current: 0,
    risk: batch.risk,
    errors: batch.errors.map((e) => ({ file: e.file, message: e.message })),
    selection: null,
  };
}

export function applyDocUpdate(state: ViewState, doc: DocResult): ViewState {
  const docs = state.docs.some((d) => d.doc_id === doc.doc_id)
    ? state.docs.map((d) => (d.doc_id === doc.doc_id ? doc : d))
    : [...state.docs, doc];
  return { ...state, docs, current: docs.findIndex((d) => d.doc_id === doc.doc_id), selection: null };
}

/** Risk rows sorted worst-first for the panel: band severity, then count. */
export function riskRowsWorstFirst(risk: RiskReport) {
  const severity = { red: 0, yellow: 1, green: 2 } as const;
  return [...risk.documents].sort(
    (a, b) => severity[a.band] - severity[b.band] || b.unique_count - a.unique_count,
  );
}
