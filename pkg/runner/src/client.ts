import { resolveToken } from "./config.js";
import type { RunnerConfig, TokenUsage } from "./types.js";

export interface Completion {
  text: string;
  tokenUsage: TokenUsage | null;
  latencyMs: number;
  attempts: number;
}

const RETRYABLE_STATUS = new Set([408, 429, 500, 502, 503, 504]);

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

class HttpStatusError extends Error {
  constructor(readonly status: number, body: string) {
    super(`HTTP ${status}: ${body.slice(0, 200)}`);
  }
}

function isRetryable(error: unknown): boolean {
  if (error instanceof HttpStatusError) return RETRYABLE_STATUS.has(error.status);
  // fetch network failures (connection refused/reset, aborted sockets)
  return error instanceof TypeError || (error instanceof Error && error.name === "AbortError");
}

async function callOnce(prompt: string, config: RunnerConfig): Promise<Omit<Completion, "attempts" | "latencyMs">> {
  const headers: Record<string, string> = { "content-type": "application/json" };
  const token = resolveToken(config);
  if (token) headers.authorization = `Bearer ${token}`;

  const body: Record<string, unknown> = {
    model: config.model,
    messages: [{ role: "user", content: prompt }],
  };
  if (config.maxOutputTokens !== undefined) body.max_tokens = config.maxOutputTokens;
  if (config.reasoningEffort !== undefined) body.reasoning_effort = config.reasoningEffort;

  const response = await fetch(config.endpoint, {
    method: "POST",
    headers,
    body: JSON.stringify(body),
  });
  const payload = await response.text();
  if (!response.ok) throw new HttpStatusError(response.status, payload);

  const doc = JSON.parse(payload) as {
    choices?: { message?: { content?: string } }[];
    usage?: { prompt_tokens?: number; completion_tokens?: number; total_tokens?: number };
  };
  const text = doc.choices?.[0]?.message?.content;
  if (typeof text !== "string") {
    throw new HttpStatusError(502, "response has no choices[0].message.content");
  }
  const usage = doc.usage;
  const tokenUsage: TokenUsage | null = usage
    ? {
        prompt: usage.prompt_tokens ?? null,
        completion: usage.completion_tokens ?? null,
        total: usage.total_tokens ?? null,
      }
    : null;
  return { text, tokenUsage };
}

/**
 * One chat completion with exponential-backoff retries on transient failures.
 * Permanent failures (4xx other than 408/429) are thrown immediately.
 */
export async function chatComplete(prompt: string, config: RunnerConfig): Promise<Completion> {
  const started = Date.now();
  let lastError: unknown;
  for (let attempt = 1; attempt <= config.retry.maxAttempts; attempt++) {
    try {
      const result = await callOnce(prompt, config);
      return { ...result, latencyMs: Date.now() - started, attempts: attempt };
    } catch (error) {
      lastError = error;
      if (!isRetryable(error) || attempt === config.retry.maxAttempts) break;
      await sleep(config.retry.backoffMs * 2 ** (attempt - 1));
    }
  }
  throw lastError;
}
