/**
 * DOM layer. Builds the run browser and candidate gallery out of the
 * view-model in gallery.ts; all data displayed comes from API payloads
 * verbatim. Selection state is re-rendered from server responses only.
 */

import { ApiError, PipelineClient } from "./client.js";
import {
  SelectionModel,
  emptyStateMessage,
  failureReasons,
  histogram,
  partitionCards,
} from "./gallery.js";
import type { CandidateCard, CandidatesPayload, RunSummary } from "./types.js";

type Attrs = Record<string, string>;

function el(
  tag: string,
  attrs: Attrs = {},
  children: (Node | string)[] = [],
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function errorBanner(message: string, retry: () => void): HTMLElement {
  const button = el("button", { class: "retry" }, ["Retry"]);
  button.addEventListener("click", retry);
  return el("div", { class: "banner error" }, [message, button]);
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return err.detail;
  }
  return "cannot reach the pipeline server";
}

function scoreText(value: number | null, digits = 3): string {
  return value === null ? "–" : value.toFixed(digits);
}

function rubricBadges(card: CandidateCard): HTMLElement {
  const row = el("span", { class: "rubric" });
  if (!card.rubric) {
    row.append(el("span", { class: "muted" }, ["no report"]));
    return row;
  }
  for (const [key, value] of Object.entries(card.rubric)) {
    row.append(
      el("span", {
        class: `dot ${value === 1 ? "ok" : "bad"}`,
        title: key.replace(/_/g, " "),
      }),
    );
  }
  return row;
}

function gateBadge(card: CandidateCard): HTMLElement {
  if (card.gate === 1) {
    return el("span", { class: "badge gate-ok" }, ["gate ✓"]);
  }
  if (card.matched_pattern) {
    return el("span", { class: "badge pattern" }, [
      `pattern ${card.matched_pattern.join("")}`,
    ]);
  }
  return el("span", { class: "badge gate-bad" }, ["gate ✗"]);
}

function candidateTile(
  card: CandidateCard,
  model: SelectionModel,
  onToggle: () => void,
): HTMLElement {
  const tile = el("figure", {
    class: `card${card.pipeline_selected ? " gated" : " rejected"}`,
    "data-candidate": card.candidate_id,
  });
  tile.append(el("img", { src: card.image_url, alt: card.candidate_id }));
  const meta = el("figcaption");
  meta.append(
    el("div", { class: "card-head" }, [
      el("code", {}, [card.candidate_id]),
      gateBadge(card),
    ]),
    rubricBadges(card),
    el("div", { class: "scores" }, [
      `aesthetic ${scoreText(card.aesthetic, 2)} · clip ${scoreText(
        card.clip_score,
      )} · combined ${scoreText(card.combined)}`,
    ]),
    el("div", { class: "variant muted" }, [
      `${card.position_slot ?? "?"} / ${card.rotation_deg ?? "?"}° · scale ${
        card.scale ? `${card.scale.s_w}×${card.scale.s_h}` : "–"
      } · seed ${card.seed} · attempt ${card.attempt}`,
    ]),
  );
  if (card.pipeline_selected) {
    const label = el("label", { class: "pick" });
    const box = el("input", { type: "checkbox" }) as HTMLInputElement;
    box.checked = model.isChosen(card.candidate_id);
    box.addEventListener("change", () => {
      model.toggle(card.candidate_id);
      onToggle();
    });
    label.append(box, "final pick");
    meta.append(label);
    if (model.committed && model.committed.includes(card.candidate_id)) {
      meta.append(el("span", { class: "badge committed" }, ["committed"]));
    }
  } else {
    meta.append(
      el("ul", { class: "reasons" },
        failureReasons(card).map((r) => el("li", {}, [r]))),
    );
  }
  tile.append(meta);
  return tile;
}

function histogramBlock(title: string, counts: number[]): HTMLElement {
  const peak = Math.max(1, ...counts);
  const bars = el("div", { class: "bars" });
  for (const count of counts) {
    bars.append(
      el("span", {
        class: "bar",
        style: `height:${Math.round((count / peak) * 36)}px`,
        title: String(count),
      }),
    );
  }
  return el("div", { class: "hist" }, [
    el("h4", {}, [title]),
    bars,
  ]);
}

export function renderApp(root: HTMLElement, client: PipelineClient): void {
  const sidebar = el("nav", { class: "sidebar" });
  const main = el("main", { class: "content" });
  root.replaceChildren(el("div", { class: "layout" }, [sidebar, main]));

  let activeRun: string | null = null;

  async function loadRuns(): Promise<void> {
    sidebar.replaceChildren(el("p", { class: "muted" }, ["loading runs…"]));
    let runs: RunSummary[];
    try {
      runs = await client.listRuns();
    } catch (err) {
      sidebar.replaceChildren(errorBanner(describeError(err), loadRuns));
      return;
    }
    sidebar.replaceChildren(el("h2", {}, ["Runs"]));
    if (runs.length === 0) {
      sidebar.append(el("p", { class: "muted" }, ["no runs yet"]));
      return;
    }
    for (const run of runs) {
      const item = el("button", { class: "run-item", "data-run": run.run_id }, [
        el("span", { class: `status ${run.status}` }, [run.status]),
        el("span", { class: "prompt" }, [run.prompt || run.run_id]),
        el("span", { class: "muted" }, [
          `${run.selected_count}/${run.candidate_count} selected` +
            (run.human_selection ? " · reviewed" : ""),
        ]),
      ]);
      item.addEventListener("click", () => {
        activeRun = run.run_id;
        void loadGallery(run.run_id);
      });
      sidebar.append(item);
    }
  }

  async function loadGallery(runId: string): Promise<void> {
    main.replaceChildren(el("p", { class: "muted" }, ["loading candidates…"]));
    let payload: CandidatesPayload;
    try {
      payload = await client.getCandidates(runId);
    } catch (err) {
      main.replaceChildren(
        errorBanner(describeError(err), () => void loadGallery(runId)),
      );
      return;
    }
    renderGallery(runId, payload);
  }

  function renderGallery(runId: string, payload: CandidatesPayload): void {
    const { gated, rejected } = partitionCards(payload);
    const model = new SelectionModel(payload.selected, payload.human_selection);
    main.replaceChildren(
      el("header", { class: "run-head" }, [
        el("h2", {}, [`Run ${runId}`]),
        el("span", { class: `status ${payload.status}` }, [payload.status]),
      ]),
    );

    const empty = emptyStateMessage(payload);
    if (empty !== null) {
      main.append(el("p", { class: "empty-state" }, [empty]));
    }

    const confirmRow = el("div", { class: "confirm-row" });
    const confirm = el("button", { class: "confirm" }, [
      "Confirm selection",
    ]) as HTMLButtonElement;
    const note = el("span", { class: "confirm-note" });
    const syncConfirm = (): void => {
      confirm.disabled = !model.canConfirm();
      confirm.textContent = `Confirm selection (${model.draftIds().length})`;
    };
    confirm.addEventListener("click", () => {
      note.className = "confirm-note";
      note.textContent = "";
      void model
        .submit((ids) => client.submitSelection(runId, ids))
        .then((response) => {
          if (response === null) {
            return; // debounced duplicate click
          }
          note.className = "confirm-note ok";
          note.textContent =
            `saved selection of ${response.human_selection.length}`;
          void loadGallery(runId); // re-render from persisted state
        })
        .catch((err) => {
          note.className = "confirm-note bad";
          note.textContent = describeError(err);
          syncConfirm();
        });
      syncConfirm();
    });
    confirmRow.append(confirm, note);

    if (gated.length > 0) {
      const grid = el("section", { class: "grid gated-grid" });
      for (const card of gated) {
        grid.append(candidateTile(card, model, syncConfirm));
      }
      main.append(grid, confirmRow);
      syncConfirm();
    }

    if (rejected.length > 0) {
      const details = el("details", { class: "rejected-block" });
      details.append(
        el("summary", {}, [
          `${rejected.length} candidate(s) failed quality control`,
        ]),
      );
      const grid = el("section", { class: "grid" });
      for (const card of rejected) {
        grid.append(candidateTile(card, model, syncConfirm));
      }
      details.append(grid);
      main.append(details);
    }

    if (payload.candidates.length > 0) {
      const aesthetics = payload.candidates.map((c) => c.aesthetic);
      const combined = payload.candidates.map((c) => c.combined);
      main.append(
        el("section", { class: "analytics" }, [
          histogramBlock("aesthetic (0–10)", histogram(aesthetics, 10, 0, 10)),
          histogramBlock("combined (0–1)", histogram(combined, 10, 0, 1)),
        ]),
      );
    }
  }

  void loadRuns().then(() => {
    if (activeRun !== null) {
      void loadGallery(activeRun);
    }
  });
}
