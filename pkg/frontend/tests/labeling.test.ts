// @vitest-environment jsdom
import { afterEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { LabelingView, type LabelDraftValues } from "../src/labeling.js";
import { ReviewSession } from "../src/session.js";

interface RecordedRequest {
  url: string;
  body: Record<string, unknown>;
}

/** ApiClient wired to a scriptable in-memory fetch. */
function fakeApi(handler: (url: string, init?: RequestInit) => Response): {
  api: ApiClient;
  posts: RecordedRequest[];
} {
  const posts: RecordedRequest[] = [];
  const api = new ApiClient("http://svc", (url, init) => {
    if (init?.method === "POST") {
      posts.push({ url, body: JSON.parse(String(init.body)) as Record<string, unknown> });
    }
    return Promise.resolve(handler(url, init));
  });
  return { api, posts };
}

function okAck(seq: number): Response {
  return new Response(JSON.stringify({ ok: true, seq, kind: "label", duplicate: false }), {
    status: 200,
    headers: { "Content-Type": "application/json" },
  });
}

function errorResponse(status: number, code: string, detail: string): Response {
  return new Response(JSON.stringify({ error: code, detail }), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

const views: LabelingView[] = [];

function makeView(
  api: ApiClient,
  items: string[],
): { view: LabelingView; session: ReviewSession<LabelDraftValues> } {
  const session = new ReviewSession<LabelDraftValues>("test.label", items);
  const view = new LabelingView({
    doc: document,
    api,
    session,
    annotatorId: "annotator-1",
    totalItems: items.length,
  });
  views.push(view);
  document.body.append(view.root);
  return { view, session };
}

afterEach(() => {
  for (const view of views.splice(0)) view.destroy();
  document.body.innerHTML = "";
});

function pressKey(key: string): void {
  document.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
}

describe("LabelingView", () => {
  it("shows the three frames in order with the decision frame emphasized", () => {
    const { api } = fakeApi(() => okAck(1));
    const { view } = makeView(api, ["obs-1"]);

    const figures = view.root.querySelectorAll(".frame-strip figure");
    expect(figures).toHaveLength(3);
    const sources = [...figures].map((f) => f.querySelector("img")?.getAttribute("src"));
    expect(sources).toEqual([
      "http://svc/api/observations/obs-1/frames/0",
      "http://svc/api/observations/obs-1/frames/1",
      "http://svc/api/observations/obs-1/frames/2",
    ]);
    expect(figures[0]?.classList.contains("frame-emphasized")).toBe(false);
    expect(figures[1]?.classList.contains("frame-emphasized")).toBe(false);
    expect(figures[2]?.classList.contains("frame-emphasized")).toBe(true);
  });

  it("labels via keyboard and advances only after the acknowledgment", async () => {
    const { api, posts } = fakeApi(() => okAck(1));
    const { view, session } = makeView(api, ["obs-1", "obs-2"]);

    pressKey("y");
    await view.settled();

    expect(posts).toHaveLength(1);
    expect(posts[0]?.url).toBe("http://svc/api/labels");
    expect(posts[0]?.body).toMatchObject({
      annotator_id: "annotator-1",
      observation_id: "obs-1",
      label: "yes",
    });
    expect(typeof posts[0]?.body["idempotency_key"]).toBe("string");
    expect(session.current).toBe("obs-2");

    pressKey("n");
    await view.settled();
    expect(posts).toHaveLength(2);
    expect(posts[1]?.body).toMatchObject({ observation_id: "obs-2", label: "no" });
    expect(session.current).toBeNull();
    expect(view.root.textContent).toContain("All 2 observations labeled");
  });

  it("collapses rapid repeated keypresses into one submission", async () => {
    const posts: RecordedRequest[] = [];
    let release!: () => void;
    const gate = new Promise<void>((resolve) => {
      release = resolve;
    });
    // The POST blocks until released, so every keypress lands mid-flight.
    const api = new ApiClient("http://svc", async (url, init) => {
      if (init?.method === "POST") {
        posts.push({ url, body: JSON.parse(String(init.body)) as Record<string, unknown> });
        await gate;
      }
      return okAck(posts.length);
    });

    const { view, session } = makeView(api, ["obs-1", "obs-2"]);
    pressKey("y");
    pressKey("y");
    pressKey("y");
    // All three presses happened while the first submission was in flight.
    release();
    await view.settled();

    expect(posts).toHaveLength(1);
    expect(session.current).toBe("obs-2");
  });

  it("surfaces a failed submission, keeps the item, and retries with the same key", async () => {
    let failing = true;
    const { api, posts } = fakeApi(() =>
      failing
        ? errorResponse(422, "RangeViolation", "label must be yes or no")
        : okAck(9),
    );
    const { view, session } = makeView(api, ["obs-1"]);

    pressKey("y");
    await view.settled();

    const banner = view.root.querySelector(".error-banner") as HTMLElement;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("label must be yes or no");
    expect(session.current).toBe("obs-1");
    const firstKey = posts[0]?.body["idempotency_key"];

    // A retained draft means the retry reuses the identical idempotency key.
    failing = false;
    (banner.querySelector("button") as HTMLButtonElement).click();
    await view.settled();

    expect(posts).toHaveLength(2);
    expect(posts[1]?.body["idempotency_key"]).toBe(firstKey);
    expect(session.current).toBeNull();
    expect(banner.hidden).toBe(true);
  });

  it("offers a flip-book toggle as an alternative to the side-by-side strip", () => {
    const { api } = fakeApi(() => okAck(1));
    const { view } = makeView(api, ["obs-1"]);

    const toggle = view.root.querySelector("#flipbook-toggle") as HTMLInputElement;
    toggle.checked = true;
    toggle.dispatchEvent(new Event("change"));

    expect(view.root.querySelectorAll(".flipbook img")).toHaveLength(1);

    toggle.checked = false;
    toggle.dispatchEvent(new Event("change"));
    expect(view.root.querySelectorAll(".frame-strip figure")).toHaveLength(3);
  });
});
