/**
 * In-memory stand-in for the pipeline HTTP API, used by the test suite.
 * Stores manifest-shaped records and derives candidate cards with the same
 * join the real server performs, including the selection subset rule and
 * FastAPI's `{detail}` error shape.
 */

import express from "express";
import type { Server } from "http";

interface StoredManifest {
  run_id: string;
  status: string;
  prompt: string;
  created_at: string;
  selected: string[];
  human_selection: string[] | null;
  candidates: {
    candidate_id: string;
    variant_id: string;
    seed: number;
    attempt: number;
    image: string;
  }[];
  quality_reports: {
    candidate_id: string;
    rubric: Record<string, number>;
    gate: number;
    matched_pattern: number[] | null;
    aesthetic: number;
    clip_score: number;
    combined: number;
    flags: string[];
  }[];
  plan: {
    variants: {
      variant_id: string;
      position_slot: string;
      rotation_deg: number;
      scale: { s_w: number; s_h: number };
    }[];
  };
  failures: { stage: string; error: string }[];
}

// 1x1 gray PNG, enough for an <img> and a content-type check.
const PNG_BYTES = Buffer.from(
  "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAAAAAA6fptVAAAACklEQVR4nGNiAAAABgADNjd8qAAAAABJRU5ErkJggg==",
  "base64",
);

const SLOTS = ["left", "center", "right"];
const ROTATIONS = [0, 15, 345];

function makeCompleteRun(): StoredManifest {
  const variants = [];
  const candidates = [];
  const reports = [];
  const combinedByIndex = [
    0.81, 0.52, 0.47, 0.78, 0.44, 0.74, 0.61, 0.7, 0.58,
  ];
  // indices 0, 3, 5, 7 pass everything; the rest fail in assorted ways
  const rubricByIndex: Record<string, number>[] = [
    { caption_alignment: 1, product_uniqueness: 1, physical_realism: 1, lighting_consistency: 1 },
    { caption_alignment: 0, product_uniqueness: 1, physical_realism: 1, lighting_consistency: 0 },
    { caption_alignment: 1, product_uniqueness: 0, physical_realism: 1, lighting_consistency: 1 },
    { caption_alignment: 1, product_uniqueness: 1, physical_realism: 1, lighting_consistency: 1 },
    { caption_alignment: 1, product_uniqueness: 1, physical_realism: 0, lighting_consistency: 1 },
    { caption_alignment: 1, product_uniqueness: 1, physical_realism: 1, lighting_consistency: 1 },
    { caption_alignment: 1, product_uniqueness: 1, physical_realism: 1, lighting_consistency: 1 },
    { caption_alignment: 1, product_uniqueness: 1, physical_realism: 1, lighting_consistency: 1 },
    { caption_alignment: 1, product_uniqueness: 1, physical_realism: 1, lighting_consistency: 1 },
  ];
  const flagsByIndex: string[][] = [
    [], [], [], [], [], [], ["aesthetic_backend_failed"], [], [],
  ];
  const selectedIndices = new Set([0, 3, 5, 7]);
  let index = 0;
  for (const slot of SLOTS) {
    for (const rotation of ROTATIONS) {
      const variantId = `${slot}_rot${rotation}`;
      variants.push({
        variant_id: variantId,
        position_slot: slot,
        rotation_deg: rotation,
        scale: { s_w: 0.25, s_h: 0.25 },
      });
      const candidateId = `${variantId}_a1_s0`;
      candidates.push({
        candidate_id: candidateId,
        variant_id: variantId,
        seed: 1000 + index,
        attempt: 1,
        image: `img${index.toString().padStart(2, "0")}.png`,
      });
      const gate = Object.values(rubricByIndex[index]).every((v) => v === 1)
        ? 1
        : 0;
      reports.push({
        candidate_id: candidateId,
        rubric: rubricByIndex[index],
        gate,
        matched_pattern: selectedIndices.has(index) ? [1, 1, 1, 1] : null,
        aesthetic: flagsByIndex[index].length > 0 ? 0.0 : 5.5 + index * 0.2,
        clip_score: 1.1 + index * 0.05,
        combined: combinedByIndex[index],
        flags: flagsByIndex[index],
      });
      index += 1;
    }
  }
  const selected = [...selectedIndices]
    .map((i) => candidates[i])
    .sort((a, b) => {
      const ra = reports.find((r) => r.candidate_id === a.candidate_id)!;
      const rb = reports.find((r) => r.candidate_id === b.candidate_id)!;
      return rb.combined - ra.combined;
    })
    .map((c) => c.candidate_id);
  return {
    run_id: "run-complete",
    status: "complete",
    prompt: "Shoe on the floor on an urban street at sunset",
    created_at: "2026-08-20T10:00:00Z",
    selected,
    human_selection: null,
    candidates,
    quality_reports: reports,
    plan: { variants },
    failures: [],
  };
}

function makeEmptySelectionRun(): StoredManifest {
  const base = makeCompleteRun();
  return {
    ...base,
    run_id: "run-empty",
    status: "empty_selection",
    prompt: "Red mug on a sandy beach",
    selected: [],
    human_selection: null,
    quality_reports: base.quality_reports.map((r) => ({
      ...r,
      rubric: { ...r.rubric, physical_realism: 0 },
      gate: 0,
      matched_pattern: null,
    })),
  };
}

function makeFailedRun(): StoredManifest {
  return {
    run_id: "run-failed",
    status: "failed",
    prompt: "Violin on the floor",
    created_at: "2026-08-20T11:00:00Z",
    selected: [],
    human_selection: null,
    candidates: [],
    quality_reports: [],
    plan: { variants: [] },
    failures: [
      {
        stage: "retrieve_products",
        error: "no product asset reached the similarity threshold",
      },
    ],
  };
}

export function buildFixtureRuns(): Map<string, StoredManifest> {
  const runs = new Map<string, StoredManifest>();
  for (const run of [makeCompleteRun(), makeEmptySelectionRun(), makeFailedRun()]) {
    runs.set(run.run_id, run);
  }
  return runs;
}

function candidatesPayload(m: StoredManifest) {
  const reports = new Map(m.quality_reports.map((r) => [r.candidate_id, r]));
  const variants = new Map(m.plan.variants.map((v) => [v.variant_id, v]));
  const selected = new Set(m.selected);
  return {
    run_id: m.run_id,
    status: m.status,
    selected: m.selected,
    human_selection: m.human_selection,
    candidates: m.candidates.map((c) => {
      const report = reports.get(c.candidate_id);
      const variant = variants.get(c.variant_id);
      return {
        candidate_id: c.candidate_id,
        variant_id: c.variant_id,
        seed: c.seed,
        attempt: c.attempt,
        image_url: `/api/images/${c.image}`,
        rubric: report?.rubric ?? null,
        gate: report?.gate ?? null,
        matched_pattern: report?.matched_pattern ?? null,
        aesthetic: report?.aesthetic ?? null,
        clip_score: report?.clip_score ?? null,
        combined: report?.combined ?? null,
        flags: report?.flags ?? [],
        pipeline_selected: selected.has(c.candidate_id),
        position_slot: variant?.position_slot ?? null,
        rotation_deg: variant?.rotation_deg ?? null,
        scale: variant?.scale ?? null,
      };
    }),
  };
}

export interface FixtureServer {
  url: string;
  runs: Map<string, StoredManifest>;
  close: () => Promise<void>;
}

export function startFixtureServer(): Promise<FixtureServer> {
  const runs = buildFixtureRuns();
  const app = express();
  app.use(express.json());

  app.get("/api/runs", (_req, res) => {
    const summaries = [...runs.values()]
      .sort((a, b) => (a.run_id < b.run_id ? -1 : 1))
      .map((m) => ({
        run_id: m.run_id,
        prompt: m.prompt,
        status: m.status,
        created_at: m.created_at,
        candidate_count: m.candidates.length,
        selected_count: m.selected.length,
        human_selection: m.human_selection,
      }));
    res.json(summaries);
  });

  app.get("/api/runs/:runId", (req, res) => {
    const m = runs.get(req.params.runId);
    if (!m) {
      res.status(404).json({ detail: `no run '${req.params.runId}'` });
      return;
    }
    res.json(m);
  });

  app.get("/api/runs/:runId/candidates", (req, res) => {
    const m = runs.get(req.params.runId);
    if (!m) {
      res.status(404).json({ detail: `no run '${req.params.runId}'` });
      return;
    }
    res.json(candidatesPayload(m));
  });

  app.get("/api/images/:name", (req, res) => {
    const known = [...runs.values()].some((m) =>
      m.candidates.some((c) => c.image === req.params.name),
    );
    if (!known || !req.params.name.endsWith(".png")) {
      res.status(404).json({ detail: "unknown image" });
      return;
    }
    res.type("image/png").send(PNG_BYTES);
  });

  app.post("/api/runs/:runId/selection", (req, res) => {
    const m = runs.get(req.params.runId);
    if (!m) {
      res.status(404).json({ detail: `no run '${req.params.runId}'` });
      return;
    }
    const body = req.body as { candidate_ids?: unknown };
    const requested = [
      ...new Set((body.candidate_ids as string[] | undefined) ?? []),
    ].map(String);
    const allowed = new Set(m.selected);
    const outside = requested.filter((c) => !allowed.has(c));
    if (outside.length > 0) {
      res.status(400).json({
        detail: `candidates [${outside.join(", ")}] are not in the pipeline-selected set`,
      });
      return;
    }
    m.human_selection = requested;
    res.json({ run_id: m.run_id, human_selection: requested });
  });

  return new Promise((resolve) => {
    const server: Server = app.listen(0, "127.0.0.1", () => {
      const address = server.address();
      const port = typeof address === "object" && address ? address.port : 0;
      resolve({
        url: `http://127.0.0.1:${port}`,
        runs,
        close: () =>
          new Promise<void>((done, fail) =>
            server.close((err) => (err ? fail(err) : done())),
          ),
      });
    });
  });
}
