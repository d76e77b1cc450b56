// End-to-end flow against the real Python harness: a scripted session
// (the same client/session code the browser runs) answers a 5-pair
// manifest, after which the store must hold exactly 5 responses, all
// served payloads must pass the blinding scan, and a duplicate
// submission must be rejected with HTTP 409 exactly once.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { HarnessClient } from "../src/api.js";
import { AnnotationSession } from "../src/session.js";
import type { SubmitBody } from "../src/types.js";

const PYTHON = process.env.PYTHON ?? "python3";
const SYSTEM_NAMES = ["edit_system", "base_system"];

const SETUP_SCRIPT = `
import sys
from pathlib import Path
from sceneloop.harness.pairs import make_pairs

root = Path(sys.argv[1])
dir_a = root / "${SYSTEM_NAMES[0]}"
dir_b = root / "${SYSTEM_NAMES[1]}"
dir_a.mkdir(); dir_b.mkdir()
for i in range(5):
    (dir_a / f"scene_{i}.svg").write_text(f"<svg><!-- v1 {i} --></svg>")
    (dir_b / f"scene_{i}.svg").write_text(f"<svg><!-- v2 {i} --></svg>")
manifest = make_pairs(dir_a, dir_b, seed=7, goal_text="A room, where doors are blocked with large objects.")
manifest.save(root / "pairs.json", root / "truth.json")
print("ready")
`;

const SERVER_SCRIPT = `
import sys, threading
from sceneloop.harness.pairs import PairManifest
from sceneloop.harness.service import AnnotationService

manifest = PairManifest.load(sys.argv[1])
service = AnnotationService(manifest, sys.argv[2], sys.argv[3])
host, port = service.start()
print(f"PORT={port}", flush=True)
threading.Event().wait()
`;

let workDir: string;
let server: ChildProcess;
let base: string;
let storePath: string;

/** every byte served to the "browser" is captured for the blinding scan */
const servedPayloads: string[] = [];

function recordingFetch(input: string, init?: RequestInit): Promise<Response> {
  return fetch(input, init).then(async (response) => {
    const clone = response.clone();
    servedPayloads.push(await clone.text());
    return response;
  });
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "annotation_e2e_"));
  const setup = spawnSync(PYTHON, ["-c", SETUP_SCRIPT, workDir], { encoding: "utf-8" });
  expect(setup.status, setup.stderr).toBe(0);

  storePath = join(workDir, "responses.jsonl");
  const uiDir = join(__dirname, "..", "dist");
  server = spawn(PYTHON, ["-c", SERVER_SCRIPT, join(workDir, "pairs.json"), storePath, uiDir], {
    stdio: ["ignore", "pipe", "inherit"],
  });
  base = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("harness did not start")), 15000);
    server.stdout!.on("data", (chunk: Buffer) => {
      const match = /PORT=(\d+)/.exec(chunk.toString());
      if (match) {
        clearTimeout(timer);
        resolve(`http://127.0.0.1:${match[1]}`);
      }
    });
    server.on("exit", (code) => reject(new Error(`harness exited early (${code})`)));
  });
});

afterAll(() => {
  server?.kill();
  rmSync(workDir, { recursive: true, force: true });
});

describe("annotation flow against the live harness", () => {
  it("serves the built UI bundle", async () => {
    const page = await fetch(`${base}/`);
    expect(page.status).toBe(200);
    const html = await page.text();
    expect(html).toContain('id="app"');
    expect(html).toContain("/js/main.js");
    const js = await fetch(`${base}/js/main.js`);
    expect(js.status).toBe(200);
    servedPayloads.push(html, await js.text());
  });

  it("answers all 5 pairs end to end and stores exactly 5 responses", async () => {
    const client = new HarnessClient(base, recordingFetch);
    const session = new AnnotationSession(client, "e2e_tester");
    const submitted: SubmitBody[] = [];

    await session.start();
    let guard = 0;
    while (session.snapshot.phase !== "done" && guard < 20) {
      guard += 1;
      expect(session.snapshot.phase).toBe("choice");
      const pair = session.snapshot.pair!;
      // the "browser" loads both images
      servedPayloads.push(await (await fetch(base + pair.left_url)).text());
      servedPayloads.push(await (await fetch(base + pair.right_url)).text());
      session.selectChoice(guard % 2 === 0 ? "left" : "right");
      session.confirmChoice();
      session.setLikert(0, 6);
      session.setLikert(1, 5);
      session.setLikert(2, 6);
      submitted.push({
        pair_id: pair.pair_id,
        annotator_id: "e2e_tester",
        choice: guard % 2 === 0 ? "left" : "right",
        likert: [6, 5, 6],
      });
      await session.submit();
    }
    expect(session.snapshot.phase).toBe("done");
    expect(session.snapshot.answered).toBe(5);

    const lines = readFileSync(storePath, "utf-8").trim().split("\n");
    expect(lines.length).toBe(5);
    const stored = lines.map((line) => JSON.parse(line) as Record<string, unknown>);
    expect(new Set(stored.map((r) => r.pair_id)).size).toBe(5);
    for (const record of stored) {
      expect(record.annotator_id).toBe("e2e_tester");
      expect(record.likert).toEqual([6, 5, 6]);
      expect(typeof record.timestamp).toBe("string");
    }
    // what the session sent is what was stored
    const sentByPair = new Map(submitted.map((s) => [s.pair_id, s.choice]));
    for (const record of stored) {
      expect(record.choice).toBe(sentByPair.get(record.pair_id as string));
    }
  });

  it("rejects a duplicate submission with HTTP 409 exactly once", async () => {
    const pairId = JSON.parse(
      readFileSync(storePath, "utf-8").trim().split("\n")[0]!,
    ).pair_id as string;
    const duplicate = await fetch(`${base}/api/responses`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        pair_id: pairId,
        annotator_id: "e2e_tester",
        choice: "left",
        likert: [1, 1, 1],
      }),
    });
    servedPayloads.push(await duplicate.clone().text());
    expect(duplicate.status).toBe(409);
    // the store is unchanged: still exactly 5 responses
    expect(readFileSync(storePath, "utf-8").trim().split("\n").length).toBe(5);
  });

  it("keeps every served payload free of system identities", () => {
    expect(servedPayloads.length).toBeGreaterThan(10);
    const blob = servedPayloads.join("\n");
    for (const name of [...SYSTEM_NAMES, "truth", "left_system"]) {
      expect(blob).not.toContain(name);
    }
  });

  it("resumes server-side: a fresh session for the same annotator is done", async () => {
    const client = new HarnessClient(base, recordingFetch);
    const session = new AnnotationSession(client, "e2e_tester");
    await session.start();
    expect(session.snapshot.phase).toBe("done");
    expect(session.snapshot.answered).toBe(5);
  });
});
