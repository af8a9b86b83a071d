/**
 * Scoring view: rate a model-written explanation or recommendation for one
 * observation at a time on a three-criterion 0–10 rubric (clarity, accuracy,
 * practical relevance). The running aggregate panel shows only numbers
 * returned by the service's aggregate endpoint — the UI never computes
 * aggregates itself.
 */

import { ApiClient, ApiError, type Aggregate } from "./api.js";
import { el, clear } from "./dom.js";
import { ReviewSession } from "./session.js";

export interface ScoreValues {
  clarity?: number;
  accuracy?: number;
  practical_relevance?: number;
}

export const CRITERIA: { field: keyof ScoreValues; label: string }[] = [
  { field: "clarity", label: "Clarity" },
  { field: "accuracy", label: "Accuracy" },
  { field: "practical_relevance", label: "Practical relevance" },
];

/** Client-side mirror of the service's rubric range check. */
export function isValidCriterion(value: unknown): value is number {
  return typeof value === "number" && Number.isInteger(value) && value >= 0 && value <= 10;
}

export function isCompleteScore(values: ScoreValues): values is Required<ScoreValues> {
  return CRITERIA.every(({ field }) => isValidCriterion(values[field]));
}

export interface ScoringOptions {
  doc: Document;
  api: ApiClient;
  session: ReviewSession<ScoreValues>;
  reviewerId: string;
  runId: string;
  target: "explanation" | "recommendation";
  /** Model-written text per observation id, from the run's verdicts. */
  texts: Map<string, string>;
  totalItems: number;
  onFinished?: () => void;
}

export class ScoringView {
  readonly root: HTMLElement;
  private readonly doc: Document;
  private readonly api: ApiClient;
  private readonly session: ReviewSession<ScoreValues>;
  private readonly reviewerId: string;
  private readonly runId: string;
  private readonly target: "explanation" | "recommendation";
  private readonly texts: Map<string, string>;
  private readonly totalItems: number;
  private readonly onFinished: (() => void) | undefined;

  private progress!: HTMLElement;
  private frameStrip!: HTMLElement;
  private modelText!: HTMLElement;
  private banner!: HTMLElement;
  private bannerText!: HTMLElement;
  private submitButton!: HTMLButtonElement;
  private aggregatePanel!: HTMLElement;
  private readonly inputs = new Map<keyof ScoreValues, HTMLInputElement>();

  private readonly pending = new Set<Promise<void>>();

  constructor(options: ScoringOptions) {
    this.doc = options.doc;
    this.api = options.api;
    this.session = options.session;
    this.reviewerId = options.reviewerId;
    this.runId = options.runId;
    this.target = options.target;
    this.texts = options.texts;
    this.totalItems = options.totalItems;
    this.onFinished = options.onFinished;
    this.root = this.build();
    this.render();
    void this.refreshAggregate();
  }

  private build(): HTMLElement {
    const doc = this.doc;
    this.progress = el(doc, "div", { className: "progress" });
    this.frameStrip = el(doc, "div", { className: "frame-strip" });
    this.modelText = el(doc, "pre", { className: "model-text" });

    this.bannerText = el(doc, "span", { className: "banner-text" });
    const retry = el(doc, "button", { text: "Retry" });
    retry.addEventListener("click", () => this.submit());
    this.banner = el(doc, "div", {
      className: "error-banner",
      attrs: { role: "alert" },
      children: [this.bannerText, retry],
    });
    this.banner.hidden = true;

    const criteria = el(doc, "div", { className: "criteria" });
    for (const { field, label } of CRITERIA) {
      criteria.append(this.buildStepper(field, label));
    }

    this.submitButton = el(doc, "button", {
      className: "submit-score",
      text: "Submit scores",
    });
    this.submitButton.addEventListener("click", () => this.submit());

    this.aggregatePanel = el(doc, "div", { className: "aggregate-panel" });

    return el(doc, "section", {
      className: "panel scoring-view",
      children: [
        this.progress,
        this.frameStrip,
        this.modelText,
        criteria,
        this.banner,
        el(doc, "div", {
          className: "decision-row",
          children: [
            this.submitButton,
            el(doc, "span", {
              className: "hint",
              text: "each criterion is a whole number from 0 to 10",
            }),
          ],
        }),
        this.aggregatePanel,
      ],
    });
  }

  private buildStepper(field: keyof ScoreValues, label: string): HTMLElement {
    const doc = this.doc;
    const input = el(doc, "input", {
      attrs: {
        type: "number",
        min: "0",
        max: "10",
        step: "1",
        inputmode: "numeric",
        "data-criterion": field,
        "aria-label": label,
      },
    });
    input.addEventListener("change", () => {
      const clamped = this.clampInput(input);
      this.setCriterion(field, clamped);
    });
    const minus = el(doc, "button", { text: "−", attrs: { "aria-label": `${label} down` } });
    minus.addEventListener("click", () => this.step(field, input, -1));
    const plus = el(doc, "button", { text: "+", attrs: { "aria-label": `${label} up` } });
    plus.addEventListener("click", () => this.step(field, input, +1));
    this.inputs.set(field, input);
    return el(doc, "div", {
      className: "criterion",
      children: [
        el(doc, "label", { text: label }),
        el(doc, "div", { className: "stepper", children: [minus, input, plus] }),
      ],
    });
  }

  /** Clamp whatever is in the box to an integer in [0, 10] (empty → unset). */
  private clampInput(input: HTMLInputElement): number | undefined {
    const raw = input.value.trim();
    if (raw === "") return undefined;
    const parsed = Number(raw);
    if (Number.isNaN(parsed)) {
      input.value = "";
      return undefined;
    }
    const clamped = Math.min(10, Math.max(0, Math.round(parsed)));
    input.value = String(clamped);
    return clamped;
  }

  private step(field: keyof ScoreValues, input: HTMLInputElement, delta: number): void {
    const base = input.value.trim() === "" ? (delta > 0 ? -1 : 11) : Number(input.value);
    const next = Math.min(10, Math.max(0, Math.round(base + delta)));
    input.value = String(next);
    this.setCriterion(field, next);
  }

  private setCriterion(field: keyof ScoreValues, value: number | undefined): void {
    const itemId = this.session.current;
    if (itemId === null) return;
    const draft = this.session.draft(itemId, {});
    const values: ScoreValues = { ...draft.values };
    if (value === undefined) delete values[field];
    else values[field] = value;
    this.session.updateDraft(itemId, values);
    this.updateSubmitState();
  }

  private updateSubmitState(): void {
    const itemId = this.session.current;
    if (itemId === null) {
      this.submitButton.disabled = true;
      return;
    }
    const draft = this.session.draftFor(itemId);
    this.submitButton.disabled = !(draft && isCompleteScore(draft.values));
  }

  /**
   * Submit the current item's scores. The item id is captured synchronously
   * and each click calls straight into the session's single-flight guard, so
   * rapid repeated clicks cannot double-submit.
   */
  submit(): void {
    const itemId = this.session.current;
    if (itemId === null) return;
    const draft = this.session.draftFor(itemId);
    if (!draft || !isCompleteScore(draft.values)) return;
    const task = this.doSubmit(itemId);
    this.pending.add(task);
    void task.finally(() => this.pending.delete(task));
  }

  private async doSubmit(itemId: string): Promise<void> {
    try {
      const result = await this.session.submit(itemId, (draft) => {
        if (!isCompleteScore(draft.values)) throw new Error("incomplete rubric");
        return this.api.postScore({
          reviewer_id: this.reviewerId,
          run_id: this.runId,
          observation_id: draft.itemId,
          target: this.target,
          clarity: draft.values.clarity,
          accuracy: draft.values.accuracy,
          practical_relevance: draft.values.practical_relevance,
          idempotency_key: draft.key,
        });
      });
      if (result.outcome === "submitted") {
        this.hideBanner();
        await this.refreshAggregate();
        this.render();
        if (this.session.current === null && this.onFinished) this.onFinished();
      }
    } catch (err) {
      this.showBanner(err);
    }
  }

  /** Resolves once every submission started so far has settled. */
  async settled(): Promise<void> {
    while (this.pending.size > 0) {
      await Promise.allSettled([...this.pending]);
    }
  }

  /** Pull the running aggregate from the service (the single source of truth). */
  async refreshAggregate(): Promise<void> {
    clear(this.aggregatePanel);
    const doc = this.doc;
    this.aggregatePanel.append(
      el(doc, "h3", { text: `Running aggregate — ${this.target} scores (from service)` }),
    );
    let aggregate: Aggregate;
    try {
      aggregate = await this.api.aggregate(this.runId, this.target);
    } catch (err) {
      const note =
        err instanceof ApiError && err.status === 404
          ? "No scores yet."
          : `Aggregate unavailable: ${err instanceof Error ? err.message : String(err)}`;
      this.aggregatePanel.append(el(doc, "p", { className: "hint agg-empty", text: note }));
      return;
    }
    this.aggregatePanel.append(
      el(doc, "div", { className: "agg-mean", text: aggregate.mean.toFixed(2) }),
      el(doc, "dl", {
        children: [
          el(doc, "dt", { text: "clarity" }),
          el(doc, "dd", {
            className: "agg-clarity",
            text: aggregate.per_criterion.clarity.toFixed(2),
          }),
          el(doc, "dt", { text: "accuracy" }),
          el(doc, "dd", {
            className: "agg-accuracy",
            text: aggregate.per_criterion.accuracy.toFixed(2),
          }),
          el(doc, "dt", { text: "practical relevance" }),
          el(doc, "dd", {
            className: "agg-practical",
            text: aggregate.per_criterion.practical_relevance.toFixed(2),
          }),
          el(doc, "dt", { text: "scores / reviewers" }),
          el(doc, "dd", {
            className: "agg-counts",
            text: `${aggregate.n_scores} / ${aggregate.n_reviewers}`,
          }),
        ],
      }),
    );
  }

  private showBanner(err: unknown): void {
    const message =
      err instanceof ApiError
        ? `Submission failed — ${err.detail}`
        : `Submission failed — ${err instanceof Error ? err.message : String(err)}`;
    this.bannerText.textContent = `${message}. Scores are kept locally; retry when ready.`;
    this.banner.hidden = false;
  }

  private hideBanner(): void {
    this.banner.hidden = true;
    this.bannerText.textContent = "";
  }

  render(): void {
    const itemId = this.session.current;
    clear(this.frameStrip);
    if (itemId === null) {
      this.progress.textContent = `All ${this.totalItems} items scored.`;
      this.progress.classList.add("done-note");
      this.modelText.textContent = "";
      for (const input of this.inputs.values()) {
        input.value = "";
        input.disabled = true;
      }
      this.submitButton.disabled = true;
      return;
    }
    this.progress.classList.remove("done-note");
    const doneCount = this.totalItems - this.session.remaining;
    this.progress.textContent = `Observation ${itemId} — ${doneCount} of ${this.totalItems} scored`;

    for (let i = 0; i < 3; i += 1) {
      const img = el(this.doc, "img", {
        attrs: { src: this.api.frameUrl(itemId, i), alt: `frame ${i + 1}` },
      });
      this.frameStrip.append(
        el(this.doc, "figure", {
          className: i === 2 ? "frame-emphasized" : "",
          children: [img],
        }),
      );
    }
    this.modelText.textContent = this.texts.get(itemId) ?? "(no model text for this item)";

    const draft = this.session.draftFor(itemId);
    for (const [field, input] of this.inputs.entries()) {
      input.disabled = false;
      const value = draft?.values[field];
      input.value = value === undefined ? "" : String(value);
    }
    this.updateSubmitState();
  }
}
