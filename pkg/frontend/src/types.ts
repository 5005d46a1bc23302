/**
 * Payload types for the masking workbench API (/api/v1).
 *
 * These mirror the server's JSON schemas exactly; the UI never invents
 * state of its own beyond selection and draft inputs.
 */

export type ColumnKind = "continuous" | "categorical";

export interface ColumnSchema {
  name: string;
  kind: ColumnKind;
  categories?: string[];
}

export interface SessionInfo {
  session_id: string;
  schema: ColumnSchema[];
  n: number;
  p: number;
  runs?: number;
}

/** Neighborhood mode: eps-ball or k-nearest-neighbor. */
export type Mode = { eps: number } | { knn: number };

export interface MaskParams {
  mode: Mode;
  q: number;
  weights: Record<string, number>;
  seed: number;
  block_sampling: boolean;
}

export interface RunSummary {
  total: number;
  resampled: number;
  suppressed: number;
  passthrough_random: number;
  passthrough_incomplete: number;
  median_donor_count: number | null;
}

export interface CoefficientRow {
  name: string;
  original: number;
  released: number;
  rel_diff: number | null;
  original_se: number;
  se_units: number | null;
}

export interface UtilityReport {
  model: string;
  coefficients: CoefficientRow[];
  original_rows: { used: number; dropped_missing: number };
  released_rows: { used: number; dropped_missing: number };
  notes: string[];
}

export interface PredicateCondition {
  col: string;
  op: "=" | "!=" | "<" | "<=" | ">" | ">=";
  value: string | number;
}

export interface TrackedFate {
  row: number;
  status: "passthrough_random" | "passthrough_incomplete" | "resampled" | "suppressed";
  changed_columns: string[];
}

export interface RiskReport {
  predicate: PredicateCondition[];
  original_matches: { count: number; rows: number[] };
  released_matches: { count: number; same_individual: boolean };
  fates: TrackedFate[];
}

export interface PresenceReport {
  column: string;
  value: string;
  original_count: number;
  released_count: number;
  rarity_threshold: number;
  hazard: boolean;
}

/** One immutable run as the server reports it; mirrors history exactly. */
export interface RunCard {
  run_id: number;
  params: MaskParams;
  summary: RunSummary;
  utility: (UtilityReport & { error?: string }) | null;
  risk: RiskReport[];
  presence: PresenceReport | null;
  created: number;
}

export interface FieldError {
  field: string;
  message: string;
}

export interface DistanceQuantiles {
  quantiles: number[];
  eps: number[];
}
