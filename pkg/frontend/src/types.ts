/**
 * Mirrors of the pipeline HTTP API payloads. Field names and shapes match
 * the server exactly; the UI never recomputes any score it receives.
 */

export interface RunSummary {
  run_id: string;
  prompt: string;
  status: string;
  created_at: string;
  candidate_count: number;
  selected_count: number;
  human_selection: string[] | null;
}

export interface RubricVerdicts {
  caption_alignment: number;
  product_uniqueness: number;
  physical_realism: number;
  lighting_consistency: number;
}

export interface ScaleFactors {
  s_w: number;
  s_h: number;
}

/** One candidate as served by GET /api/runs/{id}/candidates. */
export interface CandidateCard {
  candidate_id: string;
  variant_id: string;
  seed: number;
  attempt: number;
  image_url: string;
  rubric: RubricVerdicts | null;
  gate: number | null;
  matched_pattern: number[] | null;
  aesthetic: number | null;
  clip_score: number | null;
  combined: number | null;
  flags: string[];
  pipeline_selected: boolean;
  position_slot: string | null;
  rotation_deg: number | null;
  scale: ScaleFactors | null;
}

export interface CandidatesPayload {
  run_id: string;
  status: string;
  selected: string[];
  human_selection: string[] | null;
  candidates: CandidateCard[];
}

export interface SelectionResponse {
  run_id: string;
  human_selection: string[];
}

/** Full run manifest; the UI only reads a few known keys. */
export interface RunManifest {
  run_id: string;
  status: string;
  prompt: string;
  selected: string[];
  human_selection: string[] | null;
  failures: { stage: string; error: string }[];
  [key: string]: unknown;
}
