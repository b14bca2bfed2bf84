import { mkdir, readFile, rename, writeFile } from "node:fs/promises";
import { existsSync } from "node:fs";
import { basename, join } from "node:path";

import { chatComplete } from "./client.js";
import type { CompletionRecord, RunnerConfig, SuiteManifest } from "./types.js";

async function writeRecordAtomic(path: string, record: CompletionRecord): Promise<void> {
  const tmp = `${path}.tmp-${process.pid}`;
  await writeFile(tmp, JSON.stringify(record, null, 1) + "\n", "utf-8");
  await rename(tmp, path); // atomic on POSIX: readers never see partial records
}

export async function runPrompt(
  taskId: string,
  promptFile: string,
  config: RunnerConfig,
): Promise<CompletionRecord> {
  const prompt = await readFile(promptFile, "utf-8");
  try {
    const completion = await chatComplete(prompt, config);
    return {
      task_id: taskId,
      prompt_file: basename(promptFile),
      model: config.model,
      status: "ok",
      text: completion.text,
      token_usage: completion.tokenUsage,
      latency_ms: completion.latencyMs,
      attempts: completion.attempts,
      error: null,
    };
  } catch (error) {
    // failed records are persisted, never dropped: reruns can retry them
    return {
      task_id: taskId,
      prompt_file: basename(promptFile),
      model: config.model,
      status: "failed",
      text: null,
      token_usage: null,
      latency_ms: 0,
      attempts: config.retry.maxAttempts,
      error: error instanceof Error ? error.message : String(error),
    };
  }
}

export interface SuiteRunResult {
  written: string[];
  skipped: string[];
  failed: string[];
}

/**
 * One record per manifest task, honoring the concurrency limit. Existing
 * record files are skipped, so an interrupted run resumes with zero repeat
 * calls.
 */
export async function runSuite(
  manifestPath: string,
  promptsDir: string,
  outDir: string,
  config: RunnerConfig,
): Promise<SuiteRunResult> {
  const manifest = JSON.parse(await readFile(manifestPath, "utf-8")) as SuiteManifest;
  await mkdir(outDir, { recursive: true });

  const queue = manifest.tasks.map((t) => t.id);
  const result: SuiteRunResult = { written: [], skipped: [], failed: [] };

  async function worker(): Promise<void> {
    for (;;) {
      const taskId = queue.shift();
      if (taskId === undefined) return;
      const recordPath = join(outDir, `${taskId}.record.json`);
      if (existsSync(recordPath)) {
        result.skipped.push(taskId);
        continue;
      }
      const record = await runPrompt(taskId, join(promptsDir, `${taskId}.txt`), config);
      await writeRecordAtomic(recordPath, record);
      (record.status === "ok" ? result.written : result.failed).push(taskId);
    }
  }

  const workers = Array.from({ length: Math.max(1, config.concurrency) }, () => worker());
  await Promise.all(workers);
  result.written.sort();
  result.skipped.sort();
  result.failed.sort();
  return result;
}
