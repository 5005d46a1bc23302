import { describe, expect, it } from "vitest";

import type { MaskParams, SessionInfo } from "../src/types.js";
import { validateParams } from "../src/validation.js";

const session: SessionInfo = {
  session_id: "s1",
  n: 100,
  p: 3,
  schema: [
    { name: "age", kind: "continuous" },
    { name: "sex", kind: "categorical", categories: ["1", "2"] },
    { name: "wage", kind: "continuous" },
  ],
};

function params(overrides: Partial<MaskParams> = {}): MaskParams {
  return {
    mode: { eps: 0.3 },
    q: 1.0,
    weights: {},
    seed: 42,
    block_sampling: true,
    ...overrides,
  };
}

describe("validateParams", () => {
  it("accepts the baseline parameters", () => {
    expect(validateParams(params(), session)).toEqual([]);
  });

  it("rejects q outside (0,1] with an inline field error", () => {
    for (const q of [0, -0.5, 1.5]) {
      const errors = validateParams(params({ q }), session);
      expect(errors).toHaveLength(1);
      expect(errors[0]!.field).toBe("q");
    }
  });

  it("rejects nonpositive eps", () => {
    const errors = validateParams(params({ mode: { eps: -1 } }), session);
    expect(errors[0]!.field).toBe("mode.eps");
  });

  it("rejects k below 1, non-integer k, and k >= n", () => {
    for (const knn of [0, 2.5, 100, 500]) {
      const errors = validateParams(params({ mode: { knn } }), session);
      expect(errors[0]!.field).toBe("mode.k");
    }
    expect(validateParams(params({ mode: { knn: 99 } }), session)).toEqual([]);
  });

  it("rejects negative weights and unknown weight columns", () => {
    let errors = validateParams(params({ weights: { sex: -0.2 } }), session);
    expect(errors[0]!.field).toBe("weights");
    errors = validateParams(params({ weights: { nope: 1.0 } }), session);
    expect(errors[0]!.message).toContain("unknown column");
    expect(validateParams(params({ weights: { sex: 0 } }), session)).toEqual([]);
  });

  it("rejects out-of-range seeds", () => {
    for (const seed of [-1, 1.5]) {
      const errors = validateParams(params({ seed }), session);
      expect(errors[0]!.field).toBe("seed");
    }
  });
});
