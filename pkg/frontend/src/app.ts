/**
 * Browser entry point: wires the labeling and scoring views to the review
 * service the page was served from. All data comes from the service's JSON
 * API; this module only routes between views and holds the reviewer identity.
 */

import { ApiClient, newIdempotencyKey, type RunSummary } from "./api.js";
import { el, clear } from "./dom.js";
import { LabelingView, type LabelDraftValues } from "./labeling.js";
import { ReviewSession } from "./session.js";
import { ScoringView, type ScoreValues } from "./scoring.js";

type ViewName = "label" | "score";

const REVIEWER_KEY = "conflictlab.reviewer-id";

function getReviewerId(): string {
  try {
    return window.localStorage.getItem(REVIEWER_KEY) ?? "reviewer-1";
  } catch {
    return "reviewer-1";
  }
}

function setReviewerId(id: string): void {
  try {
    window.localStorage.setItem(REVIEWER_KEY, id);
  } catch {
    // Private-mode storage failures are non-fatal.
  }
}

async function allObservationIds(api: ApiClient): Promise<string[]> {
  const ids: string[] = [];
  let page = 1;
  for (;;) {
    const batch = await api.observations({ page, pageSize: 200 });
    ids.push(...batch.items.map((o) => o.id));
    if (page * batch.page_size >= batch.total) break;
    page += 1;
  }
  return ids;
}

class App {
  private readonly doc: Document;
  private readonly api: ApiClient;
  private readonly content: HTMLElement;
  private readonly navButtons = new Map<ViewName, HTMLButtonElement>();
  private reviewerId: string;
  private labeling: LabelingView | null = null;
  private scoring: ScoringView | null = null;

  constructor(doc: Document, root: HTMLElement) {
    this.doc = doc;
    this.api = new ApiClient("");
    this.reviewerId = getReviewerId();

    const reviewerInput = el(doc, "input", {
      attrs: { type: "text", value: this.reviewerId, "aria-label": "reviewer id" },
    });
    reviewerInput.addEventListener("change", () => {
      const next = reviewerInput.value.trim();
      if (next) {
        this.reviewerId = next;
        setReviewerId(next);
        void this.showView("label");
      }
    });

    const nav = el(doc, "nav", { className: "view-nav" });
    for (const [name, text] of [
      ["label", "Label triplets"],
      ["score", "Score model text"],
    ] as [ViewName, string][]) {
      const button = el(doc, "button", { text });
      button.addEventListener("click", () => void this.showView(name));
      this.navButtons.set(name, button);
      nav.append(button);
    }

    this.content = el(doc, "main");
    root.append(
      el(doc, "header", {
        className: "app-header",
        children: [
          el(doc, "h1", { text: "Conflict Review" }),
          nav,
          el(doc, "span", {
            className: "reviewer-box",
            children: ["reviewer: ", reviewerInput],
          }),
        ],
      }),
      this.content,
    );
  }

  private teardown(): void {
    if (this.labeling) {
      this.labeling.destroy();
      this.labeling = null;
    }
    this.scoring = null;
    clear(this.content);
  }

  async showView(name: ViewName): Promise<void> {
    this.teardown();
    for (const [key, button] of this.navButtons) {
      button.classList.toggle("active", key === name);
    }
    try {
      if (name === "label") await this.showLabeling();
      else await this.showScoring();
    } catch (err) {
      this.content.append(
        el(this.doc, "div", {
          className: "error-banner",
          text: `Could not load view: ${err instanceof Error ? err.message : String(err)}`,
        }),
      );
    }
  }

  private async showLabeling(): Promise<void> {
    const ids = await allObservationIds(this.api);
    const session = new ReviewSession<LabelDraftValues>(
      `conflictlab.label.${this.reviewerId}`,
      ids,
      window.localStorage,
      newIdempotencyKey,
    );
    this.labeling = new LabelingView({
      doc: this.doc,
      api: this.api,
      session,
      annotatorId: this.reviewerId,
      totalItems: ids.length,
    });
    this.content.append(this.labeling.root);
  }

  private async showScoring(): Promise<void> {
    const { runs } = await this.api.runs();
    const scoreable = runs.filter((r) => r.mode === "verdict_with_rationale");
    if (scoreable.length === 0) {
      this.content.append(
        el(this.doc, "p", {
          className: "hint",
          text: "No runs with model-written text to score. Evaluate a run in rationale mode first.",
        }),
      );
      return;
    }

    const runSelect = el(this.doc, "select", { attrs: { "aria-label": "run" } });
    for (const run of scoreable) {
      runSelect.append(
        el(this.doc, "option", {
          text: `${run.run_id} (${run.backend_id}, ${run.split})`,
          attrs: { value: run.run_id },
        }),
      );
    }
    const targetSelect = el(this.doc, "select", { attrs: { "aria-label": "target" } });
    for (const target of ["explanation", "recommendation"]) {
      targetSelect.append(el(this.doc, "option", { text: target, attrs: { value: target } }));
    }

    const holder = el(this.doc, "div");
    const rebuild = async () => {
      clear(holder);
      const runId = runSelect.value;
      const target = targetSelect.value as "explanation" | "recommendation";
      const run = scoreable.find((r) => r.run_id === runId) as RunSummary;
      holder.append(await this.buildScoring(run, target));
    };
    runSelect.addEventListener("change", () => void rebuild());
    targetSelect.addEventListener("change", () => void rebuild());

    this.content.append(
      el(this.doc, "div", {
        className: "panel",
        children: [
          el(this.doc, "label", { text: "Run: ", children: [runSelect] }),
          " ",
          el(this.doc, "label", { text: "Text to score: ", children: [targetSelect] }),
        ],
      }),
      holder,
    );
    await rebuild();
  }

  private async buildScoring(
    run: RunSummary,
    target: "explanation" | "recommendation",
  ): Promise<HTMLElement> {
    const { verdicts } = await this.api.verdicts(run.run_id);
    const texts = new Map<string, string>();
    for (const v of verdicts) {
      const text = target === "explanation" ? v.explanation : v.recommendation;
      if (text !== null && text !== "") texts.set(v.observation_id, text);
    }
    const ids = [...texts.keys()];
    const session = new ReviewSession<ScoreValues>(
      `conflictlab.score.${this.reviewerId}.${run.run_id}.${target}`,
      ids,
      window.localStorage,
      newIdempotencyKey,
    );
    this.scoring = new ScoringView({
      doc: this.doc,
      api: this.api,
      session,
      reviewerId: this.reviewerId,
      runId: run.run_id,
      target,
      texts,
      totalItems: ids.length,
    });
    return this.scoring.root;
  }
}

function boot(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const app = new App(document, root);
  void app.showView("label");
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", boot);
} else {
  boot();
}
