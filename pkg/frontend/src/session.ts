/**
 * Review queue with ack-gated advancement.
 *
 * An item leaves the queue only after a 2xx acknowledgment from the service.
 * Drafts (including their idempotency keys) are held locally and survive a
 * page reload, so an interrupted session resumes with unsubmitted work
 * intact and retries cannot double-submit.
 */

import type { Ack } from "./api.js";

export interface Draft<V> {
  itemId: string;
  /** Idempotency key minted once per draft; stable across retries. */
  key: string;
  values: V;
}

export type SubmitOutcome = "submitted" | "in-flight" | "already-done";

export interface SubmitResult {
  outcome: SubmitOutcome;
  ack?: Ack;
}

/** The subset of window.localStorage the session needs (injectable for tests). */
export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

interface PersistedState<V> {
  v: 1;
  drafts: [string, { key: string; values: V }][];
  done: string[];
}

export class ReviewSession<V> {
  private queue: string[];
  private readonly drafts = new Map<string, { key: string; values: V }>();
  private readonly done = new Set<string>();
  private readonly inFlight = new Set<string>();
  readonly acks = new Map<string, Ack>();

  constructor(
    private readonly storageKey: string,
    itemIds: string[],
    private readonly storage: StorageLike | null = null,
    private readonly keyFactory: () => string = () =>
      `key-${Date.now()}-${Math.random().toString(36).slice(2, 12)}`,
  ) {
    this.restore();
    this.queue = itemIds.filter((id) => !this.done.has(id));
  }

  get current(): string | null {
    return this.queue.length > 0 ? (this.queue[0] ?? null) : null;
  }

  get remaining(): number {
    return this.queue.length;
  }

  get completed(): number {
    return this.done.size;
  }

  isDone(itemId: string): boolean {
    return this.done.has(itemId);
  }

  isInFlight(itemId: string): boolean {
    return this.inFlight.has(itemId);
  }

  /** The draft for an item, minting one (with a fresh key) if none exists. */
  draft(itemId: string, initialValues: V): Draft<V> {
    let entry = this.drafts.get(itemId);
    if (!entry) {
      entry = { key: this.keyFactory(), values: initialValues };
      this.drafts.set(itemId, entry);
      this.persist();
    }
    return { itemId, key: entry.key, values: entry.values };
  }

  draftFor(itemId: string): Draft<V> | null {
    const entry = this.drafts.get(itemId);
    return entry ? { itemId, key: entry.key, values: entry.values } : null;
  }

  /** Update a draft's values in place; the idempotency key never changes. */
  updateDraft(itemId: string, values: V): Draft<V> {
    const entry = this.drafts.get(itemId);
    if (!entry) {
      const created = this.draft(itemId, values);
      return created;
    }
    entry.values = values;
    this.persist();
    return { itemId, key: entry.key, values: entry.values };
  }

  /**
   * Submit an item's draft through `send`.
   *
   * Single-flight per item: while one submission is pending, further calls
   * return "in-flight" without sending. The item leaves the queue only when
   * `send` resolves with a 2xx ack; on failure the draft (and its key) is
   * retained so a retry reuses the same idempotency key.
   */
  async submit(itemId: string, send: (draft: Draft<V>) => Promise<Ack>): Promise<SubmitResult> {
    if (this.done.has(itemId)) return { outcome: "already-done" };
    if (this.inFlight.has(itemId)) return { outcome: "in-flight" };
    const entry = this.drafts.get(itemId);
    if (!entry) throw new Error(`no draft for item ${itemId}`);
    this.inFlight.add(itemId);
    try {
      const ack = await send({ itemId, key: entry.key, values: entry.values });
      this.acks.set(itemId, ack);
      this.done.add(itemId);
      this.drafts.delete(itemId);
      this.queue = this.queue.filter((id) => id !== itemId);
      this.persist();
      return { outcome: "submitted", ack };
    } finally {
      this.inFlight.delete(itemId);
    }
  }

  private restore(): void {
    if (!this.storage) return;
    let raw: string | null = null;
    try {
      raw = this.storage.getItem(this.storageKey);
    } catch {
      return;
    }
    if (!raw) return;
    try {
      const state = JSON.parse(raw) as PersistedState<V>;
      if (state.v !== 1) return;
      for (const [id, entry] of state.drafts) this.drafts.set(id, entry);
      for (const id of state.done) this.done.add(id);
    } catch {
      // Corrupt persisted state: start clean rather than crash.
    }
  }

  private persist(): void {
    if (!this.storage) return;
    const state: PersistedState<V> = {
      v: 1,
      drafts: [...this.drafts.entries()].map(([id, e]) => [id, { key: e.key, values: e.values }]),
      done: [...this.done],
    };
    try {
      this.storage.setItem(this.storageKey, JSON.stringify(state));
    } catch {
      // Storage full or unavailable: keep working in memory.
    }
  }
}
