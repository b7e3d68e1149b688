import { describe, expect, it } from "vitest";

import { decodeFilters, encodeFilters, filtersToParams, type ExplorerFilters } from "../src/urlstate";

const SAMPLES: ExplorerFilters[] = [
  { kind: "sections" },
  { kind: "sections", label: "DoNotUse", canonical_label: "Risk Factors" },
  { kind: "images", final_class: "Chart", agreement_min: "7/8", verified: true },
  { kind: "filings", division: "MAN", year_from: 2010, year_to: 2021, form_type: "S-1" },
  { kind: "images", filing_ref: "0001193125-11-123456" },
];

describe("explorer URL state", () => {
  it("round-trips every sample through encode/decode", () => {
    for (const filters of SAMPLES) {
      expect(decodeFilters(encodeFilters(filters))).toEqual(filters);
    }
  });

  it("encoding is deterministic (sorted keys)", () => {
    const a = encodeFilters({ kind: "images", final_class: "Chart", division: "MAN" });
    const b = encodeFilters({ division: "MAN", final_class: "Chart", kind: "images" } as ExplorerFilters);
    expect(a).toBe(b);
  });

  it("unknown parameters are dropped on decode", () => {
    const filters = decodeFilters("kind=images&bogus=1&final_class=Chart");
    expect(filters).toEqual({ kind: "images", final_class: "Chart" });
  });

  it("defaults to sections for a missing or invalid kind", () => {
    expect(decodeFilters("").kind).toBe("sections");
    expect(decodeFilters("kind=nonsense").kind).toBe("sections");
  });

  it("query params exclude the kind and serialize booleans", () => {
    const params = filtersToParams({ kind: "images", verified: true, agreement_min: "7/8" });
    expect(params).toEqual({ verified: "true", agreement_min: "7/8" });
  });
});
