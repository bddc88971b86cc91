/** Payload shapes mirrored from the review service API. */

export type Stage = "model_review" | "search_review" | "taxonomy";

export const STAGES: Stage[] = ["model_review", "search_review", "taxonomy"];

export interface CandidateView {
  source: string;
  language: string;
  title: string;
  score?: number;
  qid?: string;
  canonical_title?: string;
}

export interface QueueItem {
  mention_id: string;
  stage: Stage;
  surface: string;
  left_context: string;
  right_context: string;
  ne_type: string;
  doc_id: string;
  subcategory: string;
  candidates: CandidateView[];
  lease_token: string;
  expires_at: number;
}

export interface DecisionPayload {
  lease_token: string;
  action: "accept" | "reject" | "select" | "no_match" | "tag";
  index?: number;
  category?: string;
  factors?: string[];
  request_id?: string;
}

export interface DecisionResult {
  status: string;
  mention_id?: string;
  state?: string;
}

/** Coverage block: counts plus the service's one-decimal display strings. */
export interface CoverageSnapshot {
  total: number;
  model_labeled: number;
  search_labeled: number;
  unlabeled: number;
  pending: number;
  wapis_overlap: number;
  wapis_total: number;
  pct_model_labeled: string;
  pct_search_labeled: string;
  pct_unlabeled: string;
  pct_wapis_overlap: string;
  pct_wapis_total: string;
  pct_model_accuracy: string;
}

export interface ProgressPayload {
  finalized: boolean;
  states: Record<string, number>;
  stages: Record<Stage, number>;
  coverage: CoverageSnapshot;
}

/** Taxonomy vocabulary, in fixed display order (drives the key bindings). */
export const TAG_CATEGORIES = [
  "person",
  "fictional_character",
  "institution_company",
  "location",
  "book_title",
  "brand",
  "event",
  "show",
  "nomenclature",
  "magazine",
  "deity",
  "other",
] as const;

export const TAG_FACTORS = [
  "first_name_only",
  "last_name_only",
  "nickname",
  "name_insertion",
  "abbreviation",
  "no_context",
  "inexact_location",
  "translated_title",
  "misspelling",
  "none",
] as const;

export const CATEGORY_KEYS = "123456789abc"; // index-aligned with TAG_CATEGORIES
export const FACTOR_KEYS = "qwertyuiop"; // index-aligned with TAG_FACTORS
