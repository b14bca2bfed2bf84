/**
 * End-to-end: a mock endpoint answers with correct plans, the runner writes
 * completion records, and the Python CLI executes and scores them.
 */
import { execFileSync } from "node:child_process";
import { mkdtemp, readFile, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterEach, describe, expect, it } from "vitest";

import { runSuite } from "../src/runner.js";
import type { RunnerConfig } from "../src/types.js";
import { okCompletion, startMock, type MockEndpoint } from "./mock-server.js";

let mock: MockEndpoint | undefined;

afterEach(async () => {
  await mock?.close();
  mock = undefined;
});

function python(args: string[], input?: string): string {
  return execFileSync("python3", args, {
    encoding: "utf-8",
    input,
    stdio: ["pipe", "pipe", "pipe"],
  });
}

const CANONICAL_PLANS_SNIPPET = `
import json, sys
from pathlib import Path
from questforge.dsl import unparse
from questforge.taskgen import canonical_solution

suite = Path(sys.argv[1])
plans = {}
for task_file in sorted((suite / "tasks").glob("*.json")):
    task = json.loads(task_file.read_text())
    plans[task["id"]] = unparse(canonical_solution(task))
print(json.dumps(plans))
`;

describe("records flow through the scoring pipeline", () => {
  it("3-task manifest -> records -> exec -> score", async () => {
    const work = await mkdtemp(join(tmpdir(), "qfe2e-"));

    // a small real suite from the toy world
    const spec = join(work, "spec.json");
    await writeFile(
      spec,
      JSON.stringify({ per_bracket_count: 3, seed: 5, brackets: [2] }),
    );
    const suiteDir = join(work, "suite");
    python(["-m", "questforge.cli", "generate", "toy", "--spec", spec, "--out", suiteDir]);

    const manifest = JSON.parse(await readFile(join(suiteDir, "manifest.json"), "utf-8"));
    expect(manifest.tasks.length).toBe(3);

    // correct plans for each task; the mock model matches an incoming prompt
    // back to its task id by comparing against the rendered prompt files
    const plans = JSON.parse(
      python(["-c", CANONICAL_PLANS_SNIPPET, suiteDir]),
    ) as Record<string, string>;
    const promptText: Record<string, string> = {};
    for (const t of manifest.tasks as { id: string }[]) {
      promptText[t.id] = await readFile(join(suiteDir, "prompts", `${t.id}.txt`), "utf-8");
    }
    mock = await startMock((_i, body) => {
      const prompt = (body.messages as { content: string }[])[0].content;
      const taskId = Object.keys(promptText).find((id) => promptText[id] === prompt);
      if (!taskId) return { status: 500, json: { error: "unknown prompt" } };
      return {
        status: 200,
        json: okCompletion("Here is the plan:\n```python\n" + plans[taskId] + "```\n"),
      };
    });

    const config: RunnerConfig = {
      endpoint: mock.url,
      model: "mock-model",
      retry: { maxAttempts: 2, backoffMs: 1 },
      concurrency: 2,
    };
    const records = join(work, "records");
    const result = await runSuite(
      join(suiteDir, "manifest.json"),
      join(suiteDir, "prompts"),
      records,
      config,
    );
    expect(result.written.length).toBe(3);

    // records through `exec --record`, then `score`
    const runDir = join(work, "run");
    for (const t of manifest.tasks as { id: string }[]) {
      python([
        "-m", "questforge.cli", "exec", "toy",
        "--task", join(suiteDir, "tasks", `${t.id}.json`),
        "--record", join(records, `${t.id}.record.json`),
        "--out", runDir,
      ]);
    }
    python([
      "-m", "questforge.cli", "score", runDir,
      "--manifest", join(suiteDir, "manifest.json"),
    ]);

    const summary = JSON.parse(await readFile(join(runDir, "summary.json"), "utf-8"));
    expect(summary.overall.success_pct).toBe(100.0);
    expect(summary.overall.tokens_mean).toBe(100); // copied from the mock usage
  }, 120_000);
});
