/**
 * Wiring: DOM events -> API client -> state -> renderers.
 *
 * The session id is kept in the URL hash, so refreshing the page refetches
 * the same history and reproduces the identical view.
 */

import { ApiClient, ApiError, type RunRequest } from "./api.js";
import {
  allowedOps,
  toConditions,
  validateDrafts,
  type DraftCondition,
} from "./predicate.js";
import {
  deriveComparison,
  fromServerHistory,
  initialState,
  toggleSelected,
  withRun,
  withSession,
  type AppState,
} from "./state.js";
import type { ColumnSchema, MaskParams, SessionInfo } from "./types.js";
import { escapeHtml, renderComparison, renderRunCard } from "./view.js";
import { validateParams } from "./validation.js";

const QUANTILES = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.25, 0.5];

let state: AppState = initialState();
let api = new ApiClient(readBaseUrl());
let quantileEps: number[] = [];
let drafts: DraftCondition[] = [];

function readBaseUrl(): string {
  const input = document.querySelector<HTMLInputElement>("#base-url");
  return input?.value || "http://127.0.0.1:8080/api/v1";
}

function el<T extends HTMLElement>(selector: string): T {
  const node = document.querySelector<T>(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node;
}

function setStatus(text: string, isError = false): void {
  const box = el<HTMLElement>("#status");
  box.textContent = text;
  box.className = isError ? "error" : "muted";
}

function schema(): ColumnSchema[] {
  return state.session?.schema ?? [];
}

// -- upload ----------------------------------------------------------------

async function onUpload(): Promise<void> {
  api = new ApiClient(readBaseUrl());
  const csv = el<HTMLTextAreaElement>("#csv-input").value;
  const schemaText = el<HTMLTextAreaElement>("#schema-input").value.trim();
  if (!csv.trim()) {
    setStatus("paste CSV data first", true);
    return;
  }
  try {
    const parsedSchema = schemaText ? JSON.parse(schemaText) : undefined;
    const session = await api.uploadDataset(csv, parsedSchema);
    state = withSession(state, session);
    drafts = [];
    window.location.hash = session.session_id;
    setStatus(`session ${session.session_id}: ${session.n} rows, ${session.p} columns`);
    await refreshQuantiles();
    renderAll();
  } catch (err) {
    setStatus(String(err instanceof Error ? err.message : err), true);
  }
}

async function restoreFromHash(): Promise<void> {
  const sessionId = window.location.hash.replace(/^#/, "");
  if (!sessionId) return;
  api = new ApiClient(readBaseUrl());
  try {
    const session = await api.session(sessionId);
    const briefs = await api.listRuns(sessionId);
    const full = await Promise.all(
      briefs.map((run) => api.runDetail(sessionId, run.run_id)));
    state = fromServerHistory(withSession(state, session), session, full);
    setStatus(`restored session ${sessionId} with ${full.length} run(s)`);
    await refreshQuantiles();
    renderAll();
  } catch {
    setStatus(`session ${sessionId} not found on this server`, true);
  }
}

// -- parameter panel -------------------------------------------------------

function currentWeights(): Record<string, number> {
  const weights: Record<string, number> = {};
  document.querySelectorAll<HTMLInputElement>(".weight-input").forEach((input) => {
    const factor = Number(input.value);
    if (input.value !== "" && factor !== 1) weights[input.dataset.column!] = factor;
  });
  return weights;
}

function currentParams(): MaskParams {
  const useKnn = el<HTMLInputElement>("#mode-knn").checked;
  return {
    mode: useKnn
      ? { knn: Number(el<HTMLInputElement>("#knn-input").value) }
      : { eps: Number(el<HTMLInputElement>("#eps-input").value) },
    q: Number(el<HTMLInputElement>("#q-input").value),
    weights: currentWeights(),
    seed: Number(el<HTMLInputElement>("#seed-input").value),
    block_sampling: true,
  };
}

async function refreshQuantiles(): Promise<void> {
  if (!state.session) return;
  try {
    const result = await api.distanceQuantiles(
      state.session.session_id, QUANTILES, currentWeights());
    quantileEps = result.eps;
    el<HTMLElement>("#quantile-label").textContent =
      "eps slider over pairwise-distance quantiles (weights applied)";
  } catch {
    quantileEps = [];
  }
}

function onSlider(): void {
  const idx = Number(el<HTMLInputElement>("#eps-slider").value);
  const eps = quantileEps[idx];
  if (eps !== undefined) {
    el<HTMLInputElement>("#eps-input").value = eps.toPrecision(4);
    el<HTMLElement>("#quantile-label").textContent =
      `quantile ${QUANTILES[idx]}  ->  eps ${eps.toPrecision(4)}`;
  }
}

// -- predicate builder -----------------------------------------------------

function renderPredicateBuilder(): void {
  const host = el<HTMLElement>("#predicate-rows");
  const options = schema()
    .map((c) => `<option value="${escapeHtml(c.name)}">${escapeHtml(c.name)}</option>`)
    .join("");
  host.innerHTML = drafts.map((draft, i) => {
    const column = schema().find((c) => c.name === draft.col) ?? schema()[0];
    const ops = column ? allowedOps(column) : [];
    const opOptions = ops.map((op) =>
      `<option value="${op}"${op === draft.op ? " selected" : ""}>${op}</option>`).join("");
    const valueInput = column?.kind === "categorical"
      ? `<select class="pred-value" data-i="${i}">` + (column.categories ?? [])
          .map((v) => `<option${v === draft.value ? " selected" : ""}>${escapeHtml(v)}</option>`)
          .join("") + "</select>"
      : `<input class="pred-value" data-i="${i}" value="${escapeHtml(draft.value)}">`;
    return `<div class="pred-row">
<select class="pred-col" data-i="${i}">${options}</select>
<select class="pred-op" data-i="${i}">${opOptions}</select>
${valueInput}
<button class="pred-del" data-i="${i}">x</button></div>`;
  }).join("\n");

  host.querySelectorAll<HTMLSelectElement>(".pred-col").forEach((sel) => {
    sel.value = drafts[Number(sel.dataset.i)]!.col;
    sel.onchange = () => {
      const i = Number(sel.dataset.i);
      const column = schema().find((c) => c.name === sel.value)!;
      drafts[i] = { col: sel.value, op: allowedOps(column)[0]!, value: "" };
      renderPredicateBuilder();
    };
  });
  host.querySelectorAll<HTMLSelectElement>(".pred-op").forEach((sel) => {
    sel.onchange = () => {
      drafts[Number(sel.dataset.i)]!.op = sel.value as DraftCondition["op"];
    };
  });
  host.querySelectorAll<HTMLInputElement | HTMLSelectElement>(".pred-value").forEach(
    (input) => {
      input.onchange = () => {
        drafts[Number(input.dataset.i)]!.value = input.value;
      };
    });
  host.querySelectorAll<HTMLButtonElement>(".pred-del").forEach((btn) => {
    btn.onclick = () => {
      drafts.splice(Number(btn.dataset.i), 1);
      renderPredicateBuilder();
    };
  });
}

function onAddCondition(): void {
  const first = schema()[0];
  if (!first) return;
  drafts.push({ col: first.name, op: allowedOps(first)[0]!, value: "" });
  renderPredicateBuilder();
}

// -- run -------------------------------------------------------------------

async function onRun(): Promise<void> {
  const session = state.session;
  if (!session || state.runInFlight) return;
  const params = currentParams();
  const paramErrors = validateParams(params, session);
  const predicateProblems = validateDrafts(drafts, schema());
  const problems = [
    ...paramErrors.map((e) => `${e.field}: ${e.message}`),
    ...predicateProblems,
  ];
  if (problems.length) {
    setStatus(problems.join("; "), true); // inline error, no request
    return;
  }
  const body: RunRequest = { params };
  const formula = el<HTMLInputElement>("#regression-input").value.trim();
  if (formula) {
    const [target, rhs] = formula.split("~", 2);
    body.regression = {
      target: (target ?? "").trim(),
      predictors: (rhs ?? "").split("+").map((t) => t.trim()).filter(Boolean),
    };
  }
  if (drafts.length) {
    body.predicates = [toConditions(drafts, schema())];
  }
  const presenceColumn = el<HTMLInputElement>("#presence-column").value.trim();
  const presenceValue = el<HTMLInputElement>("#presence-value").value.trim();
  if (presenceColumn && presenceValue) {
    body.presence = { column: presenceColumn, value: presenceValue };
  }

  state = { ...state, runInFlight: true };
  el<HTMLButtonElement>("#run-button").disabled = true;
  setStatus("running...");
  try {
    const run = await api.createRun(session.session_id, body);
    state = withRun({ ...state, runInFlight: false }, run);
    setStatus(`run ${run.run_id} complete`);
  } catch (err) {
    state = { ...state, runInFlight: false };
    if (err instanceof ApiError && err.fieldErrors.length) {
      setStatus(err.fieldErrors.map((e) => `${e.field}: ${e.message}`).join("; "), true);
    } else {
      setStatus(String(err instanceof Error ? err.message : err), true);
    }
  }
  el<HTMLButtonElement>("#run-button").disabled = false;
  renderAll();
}

// -- rendering -------------------------------------------------------------

function renderAll(): void {
  const panel = el<HTMLElement>("#panel");
  const session = state.session;
  panel.style.display = session ? "block" : "none";
  if (session) {
    const host = el<HTMLElement>("#weights-rows");
    const existing = currentWeights();
    host.innerHTML = session.schema.map((c) =>
      `<label class="weight-row">${escapeHtml(c.name)}
<input class="weight-input" data-column="${escapeHtml(c.name)}" type="number"
 min="0" step="0.1" value="${existing[c.name] ?? 1}"></label>`).join("\n");
    host.querySelectorAll<HTMLInputElement>(".weight-input").forEach((input) => {
      input.onchange = () => void refreshQuantiles();
    });
    renderPredicateBuilder();
  }

  const threshold = Number(el<HTMLInputElement>("#threshold-input").value) || 2;
  el<HTMLElement>("#run-cards").innerHTML = state.runs
    .map((run) => renderRunCard(run, threshold, state.selected.includes(run.run_id)))
    .join("\n");
  document.querySelectorAll<HTMLInputElement>(".compare-toggle").forEach((box) => {
    box.onchange = () => {
      state = toggleSelected(state, Number(box.dataset.runId));
      renderAll();
    };
  });
  document.querySelectorAll<HTMLAnchorElement>("a.download").forEach((link) => {
    const runId = Number(link.dataset.runId);
    if (state.session) {
      link.href = api.releaseUrl(state.session.session_id, runId);
      link.setAttribute("download", `release_run${runId}.csv`);
    }
  });

  const cmp = deriveComparison(state);
  el<HTMLElement>("#comparison").innerHTML = cmp
    ? renderComparison(cmp, threshold)
    : `<p class="muted">select two runs to compare them side by side</p>`;
}

// -- boot ------------------------------------------------------------------

export function boot(): void {
  el<HTMLButtonElement>("#upload-button").onclick = () => void onUpload();
  el<HTMLButtonElement>("#run-button").onclick = () => void onRun();
  el<HTMLButtonElement>("#add-condition").onclick = onAddCondition;
  el<HTMLInputElement>("#eps-slider").oninput = onSlider;
  el<HTMLInputElement>("#threshold-input").onchange = renderAll;
  el<HTMLInputElement>("#mode-eps").onchange = renderAll;
  el<HTMLInputElement>("#mode-knn").onchange = renderAll;
  void restoreFromHash();
  renderAll();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
