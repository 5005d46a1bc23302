/**
 * Typed predicate builder for the rare-record query panel.
 *
 * Conditions are conjunctions over schema columns; order comparators exist
 * only for continuous columns, so the op dropdown never offers an invalid
 * choice for the selected column.
 */

import type { ColumnSchema, PredicateCondition } from "./types.js";

export const EQUALITY_OPS = ["=", "!="] as const;
export const ORDER_OPS = ["<", "<=", ">", ">="] as const;

export type Op = PredicateCondition["op"];

/** A condition being edited; value may still be empty. */
export interface DraftCondition {
  col: string;
  op: Op;
  value: string;
}

export function allowedOps(column: ColumnSchema): readonly Op[] {
  return column.kind === "continuous"
    ? [...EQUALITY_OPS, ...ORDER_OPS]
    : EQUALITY_OPS;
}

export function isComplete(draft: DraftCondition): boolean {
  return draft.col !== "" && draft.value.trim() !== "";
}

/** Problems that block Run; empty list means the drafts can be submitted. */
export function validateDrafts(
  drafts: DraftCondition[],
  schema: ColumnSchema[],
): string[] {
  const problems: string[] = [];
  const byName = new Map(schema.map((c) => [c.name, c]));
  drafts.forEach((draft, i) => {
    if (!isComplete(draft)) {
      problems.push(`condition ${i + 1} is incomplete`);
      return;
    }
    const column = byName.get(draft.col);
    if (!column) {
      problems.push(`condition ${i + 1}: unknown column ${draft.col}`);
      return;
    }
    if (!allowedOps(column).includes(draft.op)) {
      problems.push(`condition ${i + 1}: ${draft.op} not valid for ${column.kind} column`);
    }
    if (column.kind === "continuous" && Number.isNaN(Number(draft.value))) {
      problems.push(`condition ${i + 1}: ${draft.value} is not numeric`);
    }
    if (column.kind === "categorical" && !(column.categories ?? []).includes(draft.value)) {
      problems.push(`condition ${i + 1}: ${draft.value} is not a category of ${draft.col}`);
    }
  });
  return problems;
}

/** Wire form: continuous values go out as numbers, labels as strings. */
export function toConditions(
  drafts: DraftCondition[],
  schema: ColumnSchema[],
): PredicateCondition[] {
  const byName = new Map(schema.map((c) => [c.name, c]));
  return drafts.map((draft) => ({
    col: draft.col,
    op: draft.op,
    value: byName.get(draft.col)?.kind === "continuous"
      ? Number(draft.value)
      : draft.value,
  }));
}

export function describe(conditions: PredicateCondition[]): string {
  if (conditions.length === 0) return "(no predicate)";
  return conditions.map((c) => `${c.col}${c.op}${c.value}`).join(" & ");
}
