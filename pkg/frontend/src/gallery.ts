/**
 * View-model logic for the run gallery: partitioning and ordering of
 * candidate cards, human-readable failure reasons, score histograms, and
 * the selection state machine. Everything here is derived from API
 * payloads verbatim — scores are never recomputed client-side.
 */

import type {
  CandidateCard,
  CandidatesPayload,
  SelectionResponse,
} from "./types.js";

export const RUBRIC_LABELS: Record<string, string> = {
  caption_alignment: "caption alignment",
  product_uniqueness: "product uniqueness",
  physical_realism: "physical realism",
  lighting_consistency: "lighting consistency",
};

export interface GalleryPartition {
  gated: CandidateCard[];
  rejected: CandidateCard[];
}

function byCombinedDesc(a: CandidateCard, b: CandidateCard): number {
  const ca = a.combined ?? -Infinity;
  const cb = b.combined ?? -Infinity;
  if (ca !== cb) {
    return cb - ca;
  }
  return a.candidate_id < b.candidate_id ? -1 : 1;
}

/** Gated (pipeline-selected) cards first, best combined score leading. */
export function partitionCards(payload: CandidatesPayload): GalleryPartition {
  const gated = payload.candidates.filter((c) => c.pipeline_selected);
  const rejected = payload.candidates.filter((c) => !c.pipeline_selected);
  gated.sort(byCombinedDesc);
  rejected.sort(byCombinedDesc);
  return { gated, rejected };
}

/** Why a card did not make the cut, phrased from the payload alone. */
export function failureReasons(card: CandidateCard): string[] {
  const reasons: string[] = [];
  if (card.rubric) {
    for (const [key, label] of Object.entries(RUBRIC_LABELS)) {
      if (card.rubric[key as keyof typeof card.rubric] === 0) {
        reasons.push(`failed ${label}`);
      }
    }
  } else {
    reasons.push("no quality report");
  }
  for (const flag of card.flags) {
    reasons.push(flag.replace(/_/g, " "));
  }
  if (reasons.length === 0) {
    reasons.push("ranked below the final selection");
  }
  return reasons;
}

/** Message for a gallery with nothing to feature, or null when there is. */
export function emptyStateMessage(payload: CandidatesPayload): string | null {
  if (payload.selected.length > 0) {
    return null;
  }
  if (payload.status === "failed") {
    return "run failed before producing a selection";
  }
  if (payload.candidates.length > 0) {
    return "no candidates passed quality control";
  }
  return "run produced no candidates";
}

/** Fixed-range histogram counts; null scores are skipped. */
export function histogram(
  values: (number | null)[],
  bins: number,
  lo: number,
  hi: number,
): number[] {
  if (bins < 1 || hi <= lo) {
    throw new Error("histogram needs bins >= 1 and hi > lo");
  }
  const counts = new Array<number>(bins).fill(0);
  for (const value of values) {
    if (value === null || Number.isNaN(value)) {
      continue;
    }
    const clamped = Math.min(Math.max(value, lo), hi);
    const index = Math.min(
      bins - 1,
      Math.floor(((clamped - lo) / (hi - lo)) * bins),
    );
    counts[index] += 1;
  }
  return counts;
}

/**
 * Selection state for one run. Draft edits are local; `committed` only ever
 * changes from a server response (no optimistic updates). While a submit is
 * in flight further submits are ignored, so a double-clicked confirm button
 * issues a single POST.
 */
export class SelectionModel {
  readonly gated: Set<string>;
  committed: string[] | null;
  inFlight = false;
  private draft: string[];

  constructor(gatedIds: string[], committed: string[] | null) {
    this.gated = new Set(gatedIds);
    this.committed = committed;
    this.draft = committed ? [...committed] : [];
  }

  /** Returns false (and changes nothing) for ids outside the gated set. */
  toggle(candidateId: string): boolean {
    if (!this.gated.has(candidateId)) {
      return false;
    }
    const index = this.draft.indexOf(candidateId);
    if (index >= 0) {
      this.draft.splice(index, 1);
    } else {
      this.draft.push(candidateId);
    }
    return true;
  }

  isChosen(candidateId: string): boolean {
    return this.draft.includes(candidateId);
  }

  draftIds(): string[] {
    return [...this.draft];
  }

  canConfirm(): boolean {
    return this.draft.length > 0 && !this.inFlight;
  }

  /** POST the draft; resolves null when debounced or nothing is chosen. */
  async submit(
    send: (ids: string[]) => Promise<SelectionResponse>,
  ): Promise<SelectionResponse | null> {
    if (!this.canConfirm()) {
      return null;
    }
    this.inFlight = true;
    try {
      const response = await send(this.draftIds());
      this.committed = response.human_selection;
      this.draft = [...response.human_selection];
      return response;
    } finally {
      this.inFlight = false;
    }
  }
}
