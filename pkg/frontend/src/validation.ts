/**
 * Client-side parameter validation mirroring the server's 422 rules, so bad
 * input is flagged inline and never produces a request.
 */

import type { FieldError, MaskParams, SessionInfo } from "./types.js";

const UINT64_MAX = 2n ** 64n - 1n;

export function validateParams(params: MaskParams, session: SessionInfo): FieldError[] {
  const errors: FieldError[] = [];
  if (!(params.q > 0 && params.q <= 1)) {
    errors.push({ field: "q", message: `q must be in (0,1], got ${params.q}` });
  }
  if ("eps" in params.mode) {
    if (!(params.mode.eps > 0)) {
      errors.push({ field: "mode.eps", message: `eps must be > 0, got ${params.mode.eps}` });
    }
  } else {
    const k = params.mode.knn;
    if (!Number.isInteger(k) || k < 1) {
      errors.push({ field: "mode.k", message: `k must be an integer >= 1, got ${k}` });
    } else if (k >= session.n) {
      // the server checks against the complete-row count; n is the upper bound
      errors.push({ field: "mode.k", message: `k=${k} needs ${k + 1} rows, dataset has ${session.n}` });
    }
  }
  if (!Number.isInteger(params.seed) || params.seed < 0 || BigInt(params.seed) > UINT64_MAX) {
    errors.push({ field: "seed", message: "seed must be a 64-bit unsigned integer" });
  }
  const known = new Set(session.schema.map((c) => c.name));
  for (const [name, factor] of Object.entries(params.weights)) {
    if (!known.has(name)) {
      errors.push({ field: "weights", message: `unknown column: ${name}` });
    } else if (!(factor >= 0) || Number.isNaN(factor)) {
      errors.push({ field: "weights", message: `weight for ${name} must be >= 0` });
    }
  }
  return errors;
}
