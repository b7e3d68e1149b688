import { describe, expect, it } from "vitest";

import {
  IMAGE_DECISIONS,
  SECTION_DECISIONS,
  decisionOptionsFor,
  isLegalDecision,
} from "../src/decisions";
import type { ReviewItem } from "../src/types";

import snapshots from "./fixtures/api_snapshots.json";

const queueItems = snapshots.queue.items as ReviewItem[];

function itemOf(kind: string): ReviewItem {
  const item = queueItems.find((i) => i.kind === kind);
  if (!item) throw new Error(`fixture has no ${kind} item`);
  return item;
}

describe("decision domains", () => {
  it("sections offer exactly the two section decisions", () => {
    const options = decisionOptionsFor(itemOf("section"));
    expect(options.map((o) => o.decision)).toEqual([...SECTION_DECISIONS]);
  });

  it("images offer exactly the five class decisions", () => {
    const options = decisionOptionsFor(itemOf("image"));
    expect(options.map((o) => o.decision)).toEqual([...IMAGE_DECISIONS]);
  });

  it("chart features offer corrections only for tied fields", () => {
    const item = itemOf("chart_feature");
    const tied = new Set(item.evidence.features!.tied_fields);
    const options = decisionOptionsFor(item);
    expect(options.length).toBeGreaterThan(0);
    for (const option of options.slice(0, -1)) {
      const fields = Object.keys(option.decision as Record<string, unknown>);
      expect(fields).toHaveLength(1);
      expect(tied.has(fields[0]!)).toBe(true);
    }
    // the final option confirms the conservative values for every tied field
    const confirm = options.at(-1)!.decision as Record<string, unknown>;
    expect(new Set(Object.keys(confirm))).toEqual(tied);
  });

  it("keyboard shortcuts are unique digits", () => {
    for (const kind of ["section", "image", "chart_feature"]) {
      const keys = decisionOptionsFor(itemOf(kind))
        .map((o) => o.key)
        .filter((k) => k !== "");
      expect(new Set(keys).size).toBe(keys.length);
      for (const key of keys) expect(key).toMatch(/^[1-9]$/);
    }
  });

  it("legality check matches the domains", () => {
    expect(isLegalDecision(itemOf("section"), "SafeToUse")).toBe(true);
    expect(isLegalDecision(itemOf("section"), "Map")).toBe(false);
    expect(isLegalDecision(itemOf("image"), "Map")).toBe(true);
    expect(isLegalDecision(itemOf("image"), "SafeToUse")).toBe(false);
    expect(isLegalDecision(itemOf("chart_feature"), { uses_3d: true })).toBe(true);
    expect(isLegalDecision(itemOf("chart_feature"), { bogus: 1 })).toBe(false);
  });
});
