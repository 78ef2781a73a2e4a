/** Wire types mirroring the service's JSON contracts. */

export const ENTITY_TYPES = [
  "NAME",
  "DATE",
  "AGE",
  "LOCATION",
  "PROFESSION",
  "ID",
  "CONTACT",
  "PHI",
] as const;

export type EntityType = (typeof ENTITY_TYPES)[number];
export type ActionName = "redact" | "replace" | "ignore";
export type BandName = "green" | "yellow" | "red";

export interface SpanJson {
  start: number;
  end: number;
  type: EntityType;
  source: string;
  text: string;
}

export interface SpanMapRow {
  original: SpanJson;
  new_start: number;
  new_end: number;
  action: ActionName;
  replacement: string;
  fallback?: boolean;
}

export interface MaskedDoc {
  doc_id: string;
  masked_text: string;
  seed: number;
  span_map: SpanMapRow[];
  replacement_map: { type: string; surface: string; replacement: string }[];
}

export interface DocResult {
  doc_id: string;
  original_text: string;
  masked: MaskedDoc;
}

export interface RiskDocRow {
  id: string;
  unique_count: number;
  risk_percent: number;
  band: BandName;
}

export interface RiskReport {
  documents: RiskDocRow[];
  total_count: number;
  threshold: number;
  single_document_warning: boolean;
}

export interface BatchResponse {
  results: DocResult[];
  errors: { file: string; status: number; message: string }[];
  cursor: number | null;
  total: number;
  risk: RiskReport | null;
}

export type ModelChoice =
  | { kind: "stub"; table: Record<string, EntityType> }
  | { kind: "remote"; name: "clinicalbert" | "biobert" };

export interface Settings {
  actions: Record<EntityType, ActionName>;
  model: ModelChoice;
  custom_dictionaries: Partial<Record<EntityType, string[]>>;
  rng_seed: number;
  risk_threshold: number;
  context_radius_words: number;
}

export function defaultSettings(): Settings {
  const actions = {} as Record<EntityType, ActionName>;
  for (const t of ENTITY_TYPES) actions[t] = "redact";
  return {
    actions,
    model: { kind: "stub", table: {} },
    custom_dictionaries: {},
    rng_seed: 1234,
    risk_threshold: 0.5,
    context_radius_words: 5,
  };
}
