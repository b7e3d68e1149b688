/** Explorer filters round-trip through URL hash parameters so views are shareable. */

export type ExplorerKind = "filings" | "sections" | "images";

export interface ExplorerFilters {
  kind: ExplorerKind;
  division?: string;
  year_from?: number;
  year_to?: number;
  form_type?: string;
  label?: string;
  canonical_label?: string;
  final_class?: string;
  verified?: boolean;
  agreement_min?: string;
  filing_ref?: string;
}

const NUMERIC_KEYS = new Set(["year_from", "year_to"]);
const BOOLEAN_KEYS = new Set(["verified"]);
const KNOWN_KEYS = new Set([
  "kind",
  "division",
  "year_from",
  "year_to",
  "form_type",
  "label",
  "canonical_label",
  "final_class",
  "verified",
  "agreement_min",
  "filing_ref",
]);

export function encodeFilters(filters: ExplorerFilters): string {
  const params = new URLSearchParams();
  for (const key of Object.keys(filters).sort()) {
    const value = (filters as unknown as Record<string, unknown>)[key];
    if (value === undefined || value === "") continue;
    params.set(key, String(value));
  }
  return params.toString();
}

export function decodeFilters(query: string): ExplorerFilters {
  const params = new URLSearchParams(query);
  const kind = params.get("kind");
  const filters: ExplorerFilters = {
    kind: kind === "filings" || kind === "sections" || kind === "images" ? kind : "sections",
  };
  for (const [key, raw] of params.entries()) {
    if (key === "kind" || !KNOWN_KEYS.has(key)) continue;
    if (NUMERIC_KEYS.has(key)) {
      const parsed = Number.parseInt(raw, 10);
      if (!Number.isNaN(parsed)) (filters as unknown as Record<string, unknown>)[key] = parsed;
    } else if (BOOLEAN_KEYS.has(key)) {
      (filters as unknown as Record<string, unknown>)[key] = raw === "true";
    } else {
      (filters as unknown as Record<string, unknown>)[key] = raw;
    }
  }
  return filters;
}

/** Query parameters for the corresponding listing endpoint. */
export function filtersToParams(filters: ExplorerFilters): Record<string, string | number | undefined> {
  const params: Record<string, string | number | undefined> = {};
  for (const [key, value] of Object.entries(filters)) {
    if (key === "kind" || value === undefined || value === "") continue;
    params[key] = typeof value === "boolean" ? String(value) : (value as string | number);
  }
  return params;
}
