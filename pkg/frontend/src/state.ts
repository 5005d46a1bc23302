/**
 * Application state: a session, its append-only run history, and which runs
 * the operator is comparing.
 *
 * Everything here is derived from server responses; rebuilding the state
 * from a fresh history fetch reproduces the identical view, which is what
 * makes a page refresh safe.
 */

import type { CoefficientRow, RunCard, SessionInfo } from "./types.js";

export interface AppState {
  session: SessionInfo | null;
  runs: RunCard[];
  /** run ids selected for side-by-side comparison (max 2, by id not params) */
  selected: number[];
  /** drift highlight threshold in units of the original standard error */
  driftThresholdSe: number;
  runInFlight: boolean;
}

export function initialState(): AppState {
  return { session: null, runs: [], selected: [], driftThresholdSe: 2, runInFlight: false };
}

export function withSession(state: AppState, session: SessionInfo): AppState {
  return { ...initialState(), driftThresholdSe: state.driftThresholdSe, session };
}

/** History is append-only; a run card never changes once stored. */
export function withRun(state: AppState, run: RunCard): AppState {
  if (state.runs.some((r) => r.run_id === run.run_id)) {
    return state;
  }
  const runs = [...state.runs, run].sort((a, b) => a.run_id - b.run_id);
  return { ...state, runs };
}

/** Rebuild from a refetched history; the result must equal the live state. */
export function fromServerHistory(
  state: AppState,
  session: SessionInfo,
  runs: RunCard[],
): AppState {
  const ordered = [...runs].sort((a, b) => a.run_id - b.run_id);
  const ids = new Set(ordered.map((r) => r.run_id));
  return {
    ...state,
    session,
    runs: ordered,
    selected: state.selected.filter((id) => ids.has(id)),
  };
}

export function toggleSelected(state: AppState, runId: number): AppState {
  if (!state.runs.some((r) => r.run_id === runId)) return state;
  let selected: number[];
  if (state.selected.includes(runId)) {
    selected = state.selected.filter((id) => id !== runId);
  } else {
    selected = [...state.selected, runId].slice(-2); // keep the newest two
  }
  return { ...state, selected };
}

export interface ComparisonRow {
  name: string;
  left: CoefficientRow | null;
  right: CoefficientRow | null;
}

export interface Comparison {
  left: RunCard;
  right: RunCard;
  rows: ComparisonRow[];
}

/** Align coefficient tables of the two selected runs by coefficient name. */
export function deriveComparison(state: AppState): Comparison | null {
  if (state.selected.length !== 2) return null;
  const [a, b] = state.selected;
  const left = state.runs.find((r) => r.run_id === a);
  const right = state.runs.find((r) => r.run_id === b);
  if (!left || !right) return null;
  const names: string[] = [];
  for (const run of [left, right]) {
    for (const row of run.utility?.coefficients ?? []) {
      if (!names.includes(row.name)) names.push(row.name);
    }
  }
  const rows = names.map((name) => ({
    name,
    left: left.utility?.coefficients.find((r) => r.name === name) ?? null,
    right: right.utility?.coefficients.find((r) => r.name === name) ?? null,
  }));
  return { left, right, rows };
}

/** The risk panel only exists for runs that actually sent a predicate. */
export function riskPanelEnabled(run: RunCard): boolean {
  return run.risk.length > 0;
}
