/** Legal decision domains per item kind; controls must never offer anything else. */

import type { ChartFeatures, ReviewItem } from "./types";

export const SECTION_DECISIONS = ["SafeToUse", "DoNotUse"] as const;
export const IMAGE_DECISIONS = ["Chart", "Infographic", "Logo", "Map", "Other"] as const;

export interface DecisionOption {
  key: string; // keyboard shortcut
  label: string;
  decision: string | Record<string, unknown>;
}

/** Feature fields an operator may correct, with their alternative values. */
const FEATURE_ALTERNATIVES: Record<string, unknown[]> = {
  chart_type: ["Bar", "Line", "Pie", "Combo", "Other"],
  has_data_table: [true, false],
  has_axis_labels: [true, false],
  has_legend: [true, false],
  num_y_axes: [1, 2],
  y_axis_starts_at_zero: [true, false],
  tick_spacing_consistent: [true, false],
  uses_3d: [true, false],
  color_mode: ["grayscale", "color"],
};

export function decisionOptionsFor(item: ReviewItem): DecisionOption[] {
  if (item.kind === "section") {
    return SECTION_DECISIONS.map((decision, index) => ({
      key: String(index + 1),
      label: decision,
      decision,
    }));
  }
  if (item.kind === "image") {
    return IMAGE_DECISIONS.map((decision, index) => ({
      key: String(index + 1),
      label: decision,
      decision,
    }));
  }
  // chart_feature: one option per tied field, correcting it to each alternative value
  const features = item.evidence.features;
  if (!features) return [];
  const options: DecisionOption[] = [];
  let index = 1;
  for (const field of features.tied_fields) {
    const current = (features as unknown as Record<string, unknown>)[field];
    for (const alternative of FEATURE_ALTERNATIVES[field] ?? []) {
      if (alternative === current) continue;
      options.push({
        key: index <= 9 ? String(index) : "",
        label: `${field} = ${String(alternative)}`,
        decision: { [field]: alternative },
      });
      index += 1;
    }
  }
  // confirming the conservative defaults is also a legal correction
  options.push({
    key: index <= 9 ? String(index) : "",
    label: "confirm current fields",
    decision: confirmTiedFields(features),
  });
  return options;
}

export function confirmTiedFields(features: ChartFeatures): Record<string, unknown> {
  const confirmation: Record<string, unknown> = {};
  for (const field of features.tied_fields) {
    confirmation[field] = (features as unknown as Record<string, unknown>)[field];
  }
  return confirmation;
}

export function isLegalDecision(item: ReviewItem, decision: unknown): boolean {
  if (item.kind === "section") return SECTION_DECISIONS.includes(decision as never);
  if (item.kind === "image") return IMAGE_DECISIONS.includes(decision as never);
  if (typeof decision !== "object" || decision === null) return false;
  return Object.keys(decision).every((field) => field in FEATURE_ALTERNATIVES);
}
