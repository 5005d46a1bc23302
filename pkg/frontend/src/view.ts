/**
 * HTML renderers for run cards and the comparison view.
 *
 * Pure string builders so they can be unit-tested without a DOM; main.ts
 * mounts them with innerHTML.  Only server-reported values are rendered -
 * no original data cells beyond the tracked records the operator queried.
 */

import {
  driftExceeds,
  fateBadge,
  fateLabel,
  formatNumber,
  formatRelDiff,
  formatTimestamp,
  summaryLine,
} from "./format.js";
import { describe } from "./predicate.js";
import type { Comparison } from "./state.js";
import type { RunCard, UtilityReport } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function paramsLine(card: RunCard): string {
  const mode = "eps" in card.params.mode
    ? `eps=${card.params.mode.eps}`
    : `knn=${card.params.mode.knn}`;
  const weights = Object.entries(card.params.weights)
    .map(([k, v]) => `${k}:${v}`)
    .join(", ");
  return `${mode}, q=${card.params.q}, seed=${card.params.seed}`
    + (weights ? `, weights={${weights}}` : "")
    + (card.params.block_sampling ? "" : ", per-dummy");
}

export function renderCoefficientTable(
  utility: UtilityReport & { error?: string },
  thresholdSe: number,
): string {
  if (utility.error) {
    return `<p class="error">regression failed: ${escapeHtml(utility.error)}</p>`;
  }
  const rows = utility.coefficients.map((row) => {
    const cls = driftExceeds(row, thresholdSe) ? ' class="drift-high"' : "";
    return `<tr${cls}><td>${escapeHtml(row.name)}</td>`
      + `<td>${formatNumber(row.original)}</td>`
      + `<td>${formatNumber(row.released)}</td>`
      + `<td>${formatRelDiff(row.rel_diff)}</td>`
      + `<td>${formatNumber(row.original_se)}</td>`
      + `<td>${formatNumber(row.se_units, 3)}</td></tr>`;
  });
  return `<table class="coefficients">
<thead><tr><th>coefficient</th><th>original</th><th>released</th>
<th>rel diff</th><th>orig SE</th><th>diff/SE</th></tr></thead>
<tbody>${rows.join("\n")}</tbody></table>
<p class="muted">${escapeHtml(utility.model)}; released rows used ${utility.released_rows.used}</p>`;
}

export function renderRiskPanel(card: RunCard): string {
  if (card.risk.length === 0) {
    return `<p class="muted">no predicate sent with this run; risk panel disabled</p>`;
  }
  const sections = card.risk.map((report) => {
    const fates = report.fates.map((fate) =>
      `<li><span class="badge badge-${fateBadge(fate)}">${fateBadge(fate)}</span> `
      + `row ${fate.row}: ${escapeHtml(fateLabel(fate))}</li>`).join("\n");
    const same = report.released_matches.same_individual
      ? "includes the same individual"
      : "none are the same individual";
    return `<div class="risk-report">
<p><code>${escapeHtml(describe(report.predicate))}</code> -
${report.original_matches.count} original match(es),
${report.released_matches.count} released match(es)
(${report.released_matches.count > 0 ? same : "no released matches"})</p>
<ul>${fates}</ul></div>`;
  });
  const presence = card.presence
    ? `<p class="${card.presence.hazard ? "hazard" : "muted"}">presence `
      + `${escapeHtml(card.presence.column)}=${escapeHtml(card.presence.value)}: `
      + `original ${card.presence.original_count}, released ${card.presence.released_count}`
      + `${card.presence.hazard ? " - HAZARD: rare label survives" : ""}</p>`
    : "";
  return sections.join("\n") + presence;
}

export function renderRunCard(
  card: RunCard,
  thresholdSe: number,
  selected: boolean,
): string {
  const utility = card.utility
    ? renderCoefficientTable(card.utility, thresholdSe)
    : `<p class="muted">no regression requested</p>`;
  return `<article class="run-card${selected ? " selected" : ""}" data-run-id="${card.run_id}">
<header>
<h3>run ${card.run_id}</h3>
<span class="muted">${formatTimestamp(card.created)}</span>
<label><input type="checkbox" class="compare-toggle" data-run-id="${card.run_id}"
${selected ? "checked" : ""}> compare</label>
</header>
<p class="params">${escapeHtml(paramsLine(card))}</p>
<p class="summary">${escapeHtml(summaryLine(card.summary))}</p>
${utility}
${renderRiskPanel(card)}
<a class="download" data-run-id="${card.run_id}" href="#">download release.csv</a>
</article>`;
}

export function renderComparison(cmp: Comparison, thresholdSe: number): string {
  const rows = cmp.rows.map((row) => {
    const cells = [cmp.left, cmp.right].map((run, side) => {
      const coef = side === 0 ? row.left : row.right;
      if (!coef) return "<td>-</td><td>-</td>";
      const cls = driftExceeds(coef, thresholdSe) ? ' class="drift-high"' : "";
      return `<td${cls}>${formatNumber(coef.released)}</td>`
        + `<td${cls}>${formatNumber(coef.se_units, 3)}</td>`;
    });
    return `<tr><td>${escapeHtml(row.name)}</td>`
      + `<td>${formatNumber(row.left?.original ?? row.right?.original ?? null)}</td>`
      + `${cells.join("")}</tr>`;
  });
  return `<table class="comparison">
<thead>
<tr><th rowspan="2">coefficient</th><th rowspan="2">original</th>
<th colspan="2">run ${cmp.left.run_id}</th><th colspan="2">run ${cmp.right.run_id}</th></tr>
<tr><th>released</th><th>diff/SE</th><th>released</th><th>diff/SE</th></tr>
</thead>
<tbody>${rows.join("\n")}</tbody></table>`;
}
