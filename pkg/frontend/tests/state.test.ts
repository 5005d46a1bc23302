import { describe, expect, it } from "vitest";

import {
  deriveComparison,
  fromServerHistory,
  initialState,
  riskPanelEnabled,
  toggleSelected,
  withRun,
  withSession,
} from "../src/state.js";
import type { RunCard, SessionInfo } from "../src/types.js";

const session: SessionInfo = {
  session_id: "abc",
  n: 50,
  p: 2,
  schema: [
    { name: "age", kind: "continuous" },
    { name: "sex", kind: "categorical", categories: ["1", "2"] },
  ],
};

function card(runId: number, coefNames: string[] = ["(intercept)", "age"]): RunCard {
  return {
    run_id: runId,
    params: { mode: { eps: 0.3 }, q: 1, weights: {}, seed: 42, block_sampling: true },
    summary: {
      total: 50, resampled: 48, suppressed: 2,
      passthrough_random: 0, passthrough_incomplete: 0, median_donor_count: 12,
    },
    utility: {
      model: "wage ~ age",
      coefficients: coefNames.map((name, i) => ({
        name, original: i + 1, released: i + 1.1,
        rel_diff: 0.1, original_se: 0.5, se_units: 0.2,
      })),
      original_rows: { used: 50, dropped_missing: 0 },
      released_rows: { used: 48, dropped_missing: 2 },
      notes: [],
    },
    risk: [],
    presence: null,
    created: 1700000000 + runId,
  };
}

describe("run history", () => {
  it("is append-only and ignores duplicates", () => {
    let state = withSession(initialState(), session);
    state = withRun(state, card(1));
    state = withRun(state, card(2));
    state = withRun(state, { ...card(1), created: 9 }); // duplicate id ignored
    expect(state.runs.map((r) => r.run_id)).toEqual([1, 2]);
    expect(state.runs[0]!.created).toBe(1700000001);
  });

  it("rebuilding from a refetched history reproduces the identical state", () => {
    let live = withSession(initialState(), session);
    live = withRun(live, card(1));
    live = withRun(live, card(2));
    live = toggleSelected(live, 1);
    live = toggleSelected(live, 2);
    const rebuilt = fromServerHistory(live, session, [card(2), card(1)]);
    expect(rebuilt).toEqual(live);
  });
});

describe("comparison selection", () => {
  it("compares by run id and keeps the newest two selections", () => {
    let state = withSession(initialState(), session);
    for (const id of [1, 2, 3]) state = withRun(state, card(id));
    state = toggleSelected(state, 1);
    state = toggleSelected(state, 2);
    state = toggleSelected(state, 3);
    expect(state.selected).toEqual([2, 3]);
    state = toggleSelected(state, 2); // deselect
    expect(state.selected).toEqual([3]);
    expect(deriveComparison(state)).toBeNull();
  });

  it("aligns coefficient rows by name across the two runs", () => {
    let state = withSession(initialState(), session);
    state = withRun(state, card(1, ["(intercept)", "age"]));
    state = withRun(state, card(2, ["(intercept)", "age", "sex=2"]));
    state = toggleSelected(state, 1);
    state = toggleSelected(state, 2);
    const cmp = deriveComparison(state)!;
    expect(cmp.rows.map((r) => r.name)).toEqual(["(intercept)", "age", "sex=2"]);
    expect(cmp.rows[2]!.left).toBeNull(); // run 1 had no sex coefficient
    expect(cmp.rows[2]!.right).not.toBeNull();
  });

  it("ignores selection of unknown run ids", () => {
    let state = withSession(initialState(), session);
    state = withRun(state, card(1));
    expect(toggleSelected(state, 99)).toBe(state);
  });
});

describe("risk panel gating", () => {
  it("is disabled for runs without a predicate", () => {
    expect(riskPanelEnabled(card(1))).toBe(false);
    const withRisk = {
      ...card(1),
      risk: [{
        predicate: [{ col: "sex", op: "=" as const, value: "2" }],
        original_matches: { count: 1, rows: [7] },
        released_matches: { count: 0, same_individual: false },
        fates: [],
      }],
    };
    expect(riskPanelEnabled(withRisk)).toBe(true);
  });
});
