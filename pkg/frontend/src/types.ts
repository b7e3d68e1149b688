/** Wire types for the review service JSON API. */

export type ReviewKind = "section" | "image" | "chart_feature";

export interface RuleFlags {
  ends_mid_sentence: boolean;
  unfinished_crossref: boolean;
  continuation_marker: boolean;
  too_short: boolean;
}

export interface JudgeEvidence {
  binary_answer: "Yes" | "No";
  binary_justification: string;
  likert: number;
  likert_justification: string;
  judge_id: string;
}

export interface ChartFeatures {
  chart_type: string;
  has_data_table: boolean;
  has_axis_labels: boolean;
  has_legend: boolean;
  num_y_axes: number;
  y_axis_starts_at_zero: boolean;
  tick_spacing_consistent: boolean;
  uses_3d: boolean;
  color_mode: string;
  tied_fields: string[];
}

export interface ReviewItem {
  item_id: string;
  kind: ReviewKind;
  row_id: number;
  payload_ref: string | null;
  status: string;
  evidence: {
    raw_title?: string;
    canonical_label?: string | null;
    rule_flags?: RuleFlags | null;
    judge?: JudgeEvidence | null;
    label?: string;
    file_name?: string;
    class_votes?: Record<string, string> | null;
    agreement?: [number, number] | null;
    final_class?: string | null;
    features?: ChartFeatures | null;
    filing_ref?: string;
  };
}

export interface QueuePage {
  items: ReviewItem[];
  next_cursor: string | null;
  pending_total: number;
}

export interface AdjudicationRequest {
  item_id: string;
  kind: ReviewKind;
  reviewer: string;
  decision: string | Record<string, unknown>;
  note: string;
}

export interface AdjudicationResponse {
  item_id: string;
  status: string;
  row: Record<string, unknown>;
}

export type ListingRow = Record<string, unknown>;

export interface ListingPage {
  rows: ListingRow[];
  total: number;
  next_cursor: string | null;
  export_token: string;
}
