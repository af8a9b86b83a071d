/**
 * Labeling view: decide conflict / no-conflict for one frame triplet at a
 * time. Frames render side by side with the final frame emphasized (it is
 * the decision frame); an optional flip-book toggle cycles them in place.
 * Decisions go in by button click or the y / n keys.
 */

import { ApiClient, ApiError } from "./api.js";
import { el, clear } from "./dom.js";
import { ReviewSession } from "./session.js";

export interface LabelDraftValues {
  label?: "yes" | "no";
}

export interface LabelingOptions {
  doc: Document;
  api: ApiClient;
  session: ReviewSession<LabelDraftValues>;
  annotatorId: string;
  totalItems: number;
  onFinished?: () => void;
}

const FRAME_CAPTIONS = ["earliest frame", "middle frame", "decision frame"];

export class LabelingView {
  readonly root: HTMLElement;
  private readonly doc: Document;
  private readonly api: ApiClient;
  private readonly session: ReviewSession<LabelDraftValues>;
  private readonly annotatorId: string;
  private readonly totalItems: number;
  private readonly onFinished: (() => void) | undefined;

  private progress!: HTMLElement;
  private frameArea!: HTMLElement;
  private banner!: HTMLElement;
  private bannerText!: HTMLElement;
  private yesButton!: HTMLButtonElement;
  private noButton!: HTMLButtonElement;
  private flipToggle!: HTMLInputElement;

  private flipTimer: ReturnType<typeof setInterval> | null = null;
  private readonly pending = new Set<Promise<void>>();
  private readonly keyHandler = (event: KeyboardEvent) => this.onKey(event);

  constructor(options: LabelingOptions) {
    this.doc = options.doc;
    this.api = options.api;
    this.session = options.session;
    this.annotatorId = options.annotatorId;
    this.totalItems = options.totalItems;
    this.onFinished = options.onFinished;
    this.root = this.build();
    this.doc.addEventListener("keydown", this.keyHandler);
    this.render();
  }

  private build(): HTMLElement {
    const doc = this.doc;
    this.progress = el(doc, "div", { className: "progress" });
    this.frameArea = el(doc, "div", { className: "frame-strip" });
    this.bannerText = el(doc, "span", { className: "banner-text" });
    const retry = el(doc, "button", { text: "Retry" });
    retry.addEventListener("click", () => this.retry());
    this.banner = el(doc, "div", {
      className: "error-banner",
      attrs: { role: "alert", hidden: "" },
      children: [this.bannerText, retry],
    });
    this.banner.hidden = true;

    this.yesButton = el(doc, "button", {
      className: "decision yes",
      text: "Conflict (y)",
    });
    this.yesButton.addEventListener("click", () => this.choose("yes"));
    this.noButton = el(doc, "button", {
      className: "decision no",
      text: "No conflict (n)",
    });
    this.noButton.addEventListener("click", () => this.choose("no"));

    this.flipToggle = el(doc, "input", {
      attrs: { type: "checkbox", id: "flipbook-toggle" },
    });
    this.flipToggle.addEventListener("change", () => this.render());
    const toggleRow = el(doc, "div", {
      className: "toggle-row hint",
      children: [
        this.flipToggle,
        el(doc, "label", {
          text: " flip-book playback",
          attrs: { for: "flipbook-toggle" },
        }),
      ],
    });

    return el(doc, "section", {
      className: "panel labeling-view",
      children: [
        this.progress,
        this.frameArea,
        toggleRow,
        this.banner,
        el(doc, "div", {
          className: "decision-row",
          children: [
            this.yesButton,
            this.noButton,
            el(doc, "span", { className: "hint", text: "keyboard: y = conflict, n = no conflict" }),
          ],
        }),
      ],
    });
  }

  private onKey(event: KeyboardEvent): void {
    const key = event.key.toLowerCase();
    if (key === "y") this.choose("yes");
    else if (key === "n") this.choose("no");
  }

  /** Current item id, or null once the queue is empty. */
  get currentItem(): string | null {
    return this.session.current;
  }

  /**
   * Record a decision for the item showing right now. The item id is
   * captured synchronously, so rapid repeated presses all target the same
   * item and collapse into a single in-flight submission.
   */
  choose(label: "yes" | "no"): void {
    const itemId = this.session.current;
    if (itemId === null) return;
    this.session.draft(itemId, {});
    this.session.updateDraft(itemId, { label });
    const task = this.submitDraft(itemId);
    this.pending.add(task);
    void task.finally(() => this.pending.delete(task));
  }

  /** Re-submit the retained draft after a failure (same idempotency key). */
  retry(): void {
    const itemId = this.session.current;
    if (itemId === null) return;
    const draft = this.session.draftFor(itemId);
    if (!draft || draft.values.label === undefined) return;
    const task = this.submitDraft(itemId);
    this.pending.add(task);
    void task.finally(() => this.pending.delete(task));
  }

  private async submitDraft(itemId: string): Promise<void> {
    try {
      const result = await this.session.submit(itemId, (draft) => {
        const label = draft.values.label;
        if (label === undefined) throw new Error("no decision drafted");
        return this.api.postLabel({
          annotator_id: this.annotatorId,
          observation_id: draft.itemId,
          label,
          idempotency_key: draft.key,
        });
      });
      if (result.outcome === "submitted") {
        this.hideBanner();
        this.render();
        if (this.session.current === null && this.onFinished) this.onFinished();
      }
    } catch (err) {
      this.showBanner(err);
      this.render();
    }
  }

  /** Resolves once every submission started so far has settled. */
  async settled(): Promise<void> {
    while (this.pending.size > 0) {
      await Promise.allSettled([...this.pending]);
    }
  }

  private showBanner(err: unknown): void {
    const message =
      err instanceof ApiError
        ? `Submission failed — ${err.detail}`
        : `Submission failed — ${err instanceof Error ? err.message : String(err)}`;
    this.bannerText.textContent = `${message}. Your decision is kept locally; retry when ready.`;
    this.banner.hidden = false;
  }

  private hideBanner(): void {
    this.banner.hidden = true;
    this.bannerText.textContent = "";
  }

  render(): void {
    const itemId = this.session.current;
    this.stopFlip();
    clear(this.frameArea);
    if (itemId === null) {
      this.progress.textContent = `All ${this.totalItems} observations labeled.`;
      this.progress.classList.add("done-note");
      this.frameArea.className = "frame-strip";
      this.yesButton.disabled = true;
      this.noButton.disabled = true;
      return;
    }
    this.yesButton.disabled = false;
    this.noButton.disabled = false;
    this.progress.classList.remove("done-note");
    const doneCount = this.totalItems - this.session.remaining;
    this.progress.textContent = `Observation ${itemId} — ${doneCount} of ${this.totalItems} labeled`;

    if (this.flipToggle.checked) {
      this.renderFlipbook(itemId);
    } else {
      this.renderStrip(itemId);
    }
  }

  private renderStrip(itemId: string): void {
    this.frameArea.className = "frame-strip";
    for (let i = 0; i < 3; i += 1) {
      const img = el(this.doc, "img", {
        attrs: { src: this.api.frameUrl(itemId, i), alt: `frame ${i + 1}` },
      });
      const figure = el(this.doc, "figure", {
        className: i === 2 ? "frame-emphasized" : "",
        children: [img, el(this.doc, "figcaption", { text: FRAME_CAPTIONS[i] ?? "" })],
      });
      this.frameArea.append(figure);
    }
  }

  private renderFlipbook(itemId: string): void {
    this.frameArea.className = "frame-strip flipbook";
    const img = el(this.doc, "img", {
      attrs: { src: this.api.frameUrl(itemId, 0), alt: "flip-book frame" },
    });
    this.frameArea.append(
      el(this.doc, "figure", {
        children: [img, el(this.doc, "figcaption", { text: "flip-book playback" })],
      }),
    );
    let index = 0;
    this.flipTimer = setInterval(() => {
      index = (index + 1) % 3;
      img.setAttribute("src", this.api.frameUrl(itemId, index));
    }, 600);
  }

  private stopFlip(): void {
    if (this.flipTimer !== null) {
      clearInterval(this.flipTimer);
      this.flipTimer = null;
    }
  }

  destroy(): void {
    this.stopFlip();
    this.doc.removeEventListener("keydown", this.keyHandler);
  }

  // Test hooks kept off the DOM: the key the current draft would submit with.
  currentDraftKey(): string | null {
    const itemId = this.session.current;
    if (itemId === null) return null;
    return this.session.draftFor(itemId)?.key ?? null;
  }
}
