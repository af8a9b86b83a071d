// @vitest-environment jsdom
//
// Acceptance gate for the review UI, driven against the real review service:
//  - labels 10 observations via keyboard,
//  - submits two reviewers' rubric scores on 5 items and checks that the
//    service aggregate endpoint returns the hand-computed mean exactly,
//  - verifies rapid repeated clicks cannot double-submit,
//  - confirms the built bundle is served statically by the service.
import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, type VerdictRecord } from "../src/api.js";
import { LabelingView, type LabelDraftValues } from "../src/labeling.js";
import { ReviewSession } from "../src/session.js";
import { ScoringView, type ScoreValues } from "../src/scoring.js";

const FRONTEND_ROOT = dirname(dirname(fileURLToPath(import.meta.url)));
const DIST_DIR = join(FRONTEND_ROOT, "dist");

let workspace: string;
let server: ChildProcess | null = null;
let serverLog = "";
let base: string;
let api: ApiClient;
let runId: string;
let verdicts: VerdictRecord[];

function cli(...args: string[]): string {
  return execFileSync("conflictlab", args, { encoding: "utf-8" });
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

function readEvents(): { kind: string; payload: Record<string, unknown> }[] {
  const raw = readFileSync(join(workspace, "review", "events.jsonl"), "utf-8");
  const lines = raw.trim().split("\n");
  // Line 1 is the schema header; every later line is one event.
  return lines.slice(1).map((line) => JSON.parse(line) as ReturnType<typeof readEvents>[number]);
}

function pressKey(key: string): void {
  document.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
}

function setCriterion(view: ScoringView, field: string, value: number): void {
  const input = view.root.querySelector(`input[data-criterion="${field}"]`) as HTMLInputElement;
  input.value = String(value);
  input.dispatchEvent(new Event("change"));
}

function submitButton(view: ScoringView): HTMLButtonElement {
  return view.root.querySelector("button.submit-score") as HTMLButtonElement;
}

async function scoreItems(
  reviewerId: string,
  items: string[],
  rubric: { clarity: number; accuracy: number; practical_relevance: number },
  texts: Map<string, string>,
): Promise<ScoringView> {
  const session = new ReviewSession<ScoreValues>(`accept.score.${reviewerId}`, items);
  const view = new ScoringView({
    doc: document,
    api,
    session,
    reviewerId,
    runId,
    target: "explanation",
    texts,
    totalItems: items.length,
  });
  document.body.append(view.root);
  for (const item of items) {
    expect(session.current).toBe(item);
    setCriterion(view, "clarity", rubric.clarity);
    setCriterion(view, "accuracy", rubric.accuracy);
    setCriterion(view, "practical_relevance", rubric.practical_relevance);
    submitButton(view).click();
    await view.settled();
  }
  expect(session.current).toBeNull();
  view.root.remove();
  return view;
}

beforeAll(async () => {
  // A real workspace: 10 rendered observations, all in the test split, plus
  // one rationale-mode run so there is model text to score.
  workspace = mkdtempSync(join(tmpdir(), "review-ui-accept-"));
  cli("simulate", "--workspace", workspace, "--n", "10", "--balance", "0.5", "--seed", "11");
  cli("split", "--workspace", workspace, "--train", "0", "--val", "0", "--test", "10", "--seed", "1");
  cli(
    "eval",
    "--workspace",
    workspace,
    "--backend",
    "oracle",
    "--mode",
    "verdict_with_rationale",
    "--split",
    "test",
  );

  if (!existsSync(join(DIST_DIR, "index.html"))) {
    execFileSync("npm", ["run", "build"], { cwd: FRONTEND_ROOT });
  }

  const port = 21000 + Math.floor(Math.random() * 3000);
  base = `http://127.0.0.1:${port}`;
  server = spawn(
    "conflictlab",
    [
      "serve",
      "--workspace",
      workspace,
      "--host",
      "127.0.0.1",
      "--port",
      String(port),
      "--ui",
      DIST_DIR,
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk: Buffer) => {
    serverLog += chunk.toString();
  });
  server.stderr?.on("data", (chunk: Buffer) => {
    serverLog += chunk.toString();
  });

  let up = false;
  for (let attempt = 0; attempt < 240 && !up; attempt += 1) {
    try {
      const response = await fetch(`${base}/api/meta`);
      up = response.ok;
    } catch {
      await sleep(250);
    }
  }
  if (!up) throw new Error(`review service did not come up; log:\n${serverLog}`);

  api = new ApiClient(base);
  const runsPayload = await api.runs();
  expect(runsPayload.runs).toHaveLength(1);
  const run = runsPayload.runs[0];
  if (!run) throw new Error("no run found");
  runId = run.run_id;
  expect(run.mode).toBe("verdict_with_rationale");
  verdicts = (await api.verdicts(runId)).verdicts;
  expect(verdicts).toHaveLength(10);
}, 180_000);

afterAll(() => {
  if (server) server.kill("SIGTERM");
  if (workspace) rmSync(workspace, { recursive: true, force: true });
});

describe("review UI against the live service", () => {
  it("serves the built bundle statically at the service root", async () => {
    const shell = await (await fetch(`${base}/`)).text();
    expect(shell).toContain('<div id="app">');
    expect(shell).toContain("app.js");

    const script = await fetch(`${base}/app.js`);
    expect(script.ok).toBe(true);
    const css = await fetch(`${base}/styles.css`);
    expect(css.ok).toBe(true);
  });

  it("labels 10 observations via keyboard, one ack-gated submission each", async () => {
    const page = await api.observations({ page: 1, pageSize: 50 });
    expect(page.total).toBe(10);
    const ids = page.items.map((o) => o.id);

    const session = new ReviewSession<LabelDraftValues>("accept.label", ids);
    const view = new LabelingView({
      doc: document,
      api,
      session,
      annotatorId: "key-annotator",
      totalItems: ids.length,
    });
    document.body.append(view.root);

    // Alternate y / n across the whole queue, purely via the keyboard.
    const expected = new Map<string, string>();
    for (let i = 0; i < ids.length; i += 1) {
      const id = ids[i];
      if (!id) throw new Error("missing id");
      expect(session.current).toBe(id);
      const key = i % 2 === 0 ? "y" : "n";
      expected.set(id, key === "y" ? "yes" : "no");
      pressKey(key);
      await view.settled();
    }
    expect(session.current).toBeNull();
    expect(view.root.textContent).toContain("All 10 observations labeled");
    view.destroy();
    view.root.remove();

    const labelEvents = readEvents().filter((e) => e.kind === "label");
    expect(labelEvents).toHaveLength(10);
    for (const event of labelEvents) {
      expect(event.payload["annotator_id"]).toBe("key-annotator");
      const observationId = event.payload["observation_id"] as string;
      expect(event.payload["label"]).toBe(expected.get(observationId));
    }
  });

  it("returns the hand-computed aggregate mean, exactly, after two reviewers score 5 items", async () => {
    const texts = new Map<string, string>();
    for (const v of verdicts) {
      if (v.explanation) texts.set(v.observation_id, v.explanation);
    }
    expect(texts.size).toBe(10);
    const items = [...texts.keys()].sort().slice(0, 5);

    // Reviewer 1 gives every item (9, 9, 9) → item mean 9.0;
    // reviewer 2 gives every item (6, 7, 8) → item mean 7.0.
    // Hand-computed aggregate over 10 scores: (5·9 + 5·7) / 10 = 8.0.
    await scoreItems("reviewer-1", items, { clarity: 9, accuracy: 9, practical_relevance: 9 }, texts);
    await scoreItems("reviewer-2", items, { clarity: 6, accuracy: 7, practical_relevance: 8 }, texts);

    const aggregate = await api.aggregate(runId, "explanation");
    expect(aggregate.mean).toBe(8.0);
    expect(aggregate.per_criterion.clarity).toBe(7.5);
    expect(aggregate.per_criterion.accuracy).toBe(8.0);
    expect(aggregate.per_criterion.practical_relevance).toBe(8.5);
    expect(aggregate.n_scores).toBe(10);
    expect(aggregate.n_items).toBe(5);
    expect(aggregate.n_reviewers).toBe(2);

    const scoreEvents = readEvents().filter((e) => e.kind === "score");
    expect(scoreEvents).toHaveLength(10);
  });

  it("does not double-submit under rapid repeated clicks", async () => {
    const texts = new Map<string, string>();
    for (const v of verdicts) {
      if (v.explanation) texts.set(v.observation_id, v.explanation);
    }
    const freshItem = [...texts.keys()].sort()[5];
    if (!freshItem) throw new Error("needed a sixth scoreable item");

    const session = new ReviewSession<ScoreValues>("accept.rapid", [freshItem]);
    const view = new ScoringView({
      doc: document,
      api,
      session,
      reviewerId: "reviewer-1",
      runId,
      target: "explanation",
      texts,
      totalItems: 1,
    });
    document.body.append(view.root);

    setCriterion(view, "clarity", 9);
    setCriterion(view, "accuracy", 9);
    setCriterion(view, "practical_relevance", 9);
    const button = submitButton(view);
    button.click();
    button.click();
    button.click();
    button.click();
    button.click();
    await view.settled();
    view.root.remove();

    const ack = session.acks.get(freshItem);
    expect(ack?.ok).toBe(true);
    expect(ack?.duplicate).toBe(false);

    const mine = readEvents().filter(
      (e) =>
        e.kind === "score" &&
        e.payload["observation_id"] === freshItem &&
        e.payload["reviewer_id"] === "reviewer-1",
    );
    expect(mine).toHaveLength(1);
    expect(readEvents().filter((e) => e.kind === "score")).toHaveLength(11);
  });
});
