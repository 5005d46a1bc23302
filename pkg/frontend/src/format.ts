/**
 * Plain-language formatting of server reports: fates become sentences the
 * operator can read aloud, drift cells pick up a highlight class when they
 * cross the operator's SE-units threshold.
 */

import type { CoefficientRow, RunSummary, TrackedFate } from "./types.js";

export function fateLabel(fate: TrackedFate): string {
  switch (fate.status) {
    case "suppressed":
      return "suppressed";
    case "passthrough_random":
    case "passthrough_incomplete":
      return "unmodified";
    case "resampled":
      if (fate.changed_columns.length === 0) return "resampled, no values changed";
      return fate.changed_columns.map((c) => `${c} changed`).join(", ");
  }
}

export function fateBadge(fate: TrackedFate): "suppressed" | "changed" | "unmodified" {
  if (fate.status === "suppressed") return "suppressed";
  if (fate.status === "resampled" && fate.changed_columns.length > 0) return "changed";
  return "unmodified";
}

/** True when the coefficient moved more than `thresholdSe` standard errors. */
export function driftExceeds(row: CoefficientRow, thresholdSe: number): boolean {
  return row.se_units !== null && row.se_units > thresholdSe;
}

export function formatNumber(value: number | null, digits = 4): string {
  if (value === null || Number.isNaN(value)) return "-";
  if (value === 0) return "0";
  const magnitude = Math.abs(value);
  if (magnitude >= 1e5 || magnitude < 1e-3) return value.toExponential(2);
  return value.toPrecision(digits);
}

export function formatRelDiff(value: number | null): string {
  return value === null ? "-" : `${(100 * value).toFixed(1)}%`;
}

export function summaryLine(summary: RunSummary): string {
  const median = summary.median_donor_count;
  return `${summary.resampled} resampled, ${summary.suppressed} suppressed, `
    + `${summary.passthrough_random + summary.passthrough_incomplete} passthrough`
    + (median === null ? "" : `, median |S| ${median}`);
}

export function formatTimestamp(created: number): string {
  return new Date(created * 1000).toISOString().replace("T", " ").slice(0, 19);
}
