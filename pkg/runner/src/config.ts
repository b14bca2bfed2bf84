import { readFile } from "node:fs/promises";

import type { RunnerConfig } from "./types.js";

interface RawConfig {
  endpoint?: unknown;
  model?: unknown;
  auth_token_env?: unknown;
  max_output_tokens?: unknown;
  reasoning_effort?: unknown;
  retry?: { max_attempts?: unknown; backoff_ms?: unknown };
  concurrency?: unknown;
}

export async function loadConfig(path: string): Promise<RunnerConfig> {
  const raw = JSON.parse(await readFile(path, "utf-8")) as RawConfig;
  if (typeof raw.endpoint !== "string" || !raw.endpoint) {
    throw new Error(`${path}: 'endpoint' must be a non-empty string`);
  }
  if (typeof raw.model !== "string" || !raw.model) {
    throw new Error(`${path}: 'model' must be a non-empty string`);
  }
  const concurrency = raw.concurrency === undefined ? 1 : Number(raw.concurrency);
  if (!Number.isInteger(concurrency) || concurrency < 1) {
    throw new Error(`${path}: 'concurrency' must be an integer >= 1`);
  }
  const maxAttempts = Number(raw.retry?.max_attempts ?? 3);
  const backoffMs = Number(raw.retry?.backoff_ms ?? 500);
  if (!Number.isInteger(maxAttempts) || maxAttempts < 1) {
    throw new Error(`${path}: retry.max_attempts must be an integer >= 1`);
  }
  return {
    endpoint: raw.endpoint,
    model: raw.model,
    authTokenEnv: typeof raw.auth_token_env === "string" ? raw.auth_token_env : undefined,
    maxOutputTokens:
      raw.max_output_tokens === undefined ? undefined : Number(raw.max_output_tokens),
    reasoningEffort:
      typeof raw.reasoning_effort === "string" ? raw.reasoning_effort : undefined,
    retry: { maxAttempts, backoffMs },
    concurrency,
  };
}

/** Secrets come from the environment only; config files never hold tokens. */
export function resolveToken(config: RunnerConfig): string | undefined {
  if (!config.authTokenEnv) return undefined;
  return process.env[config.authTokenEnv];
}
