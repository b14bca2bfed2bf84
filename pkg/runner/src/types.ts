export interface RetryPolicy {
  /** Total attempts including the first (>= 1). */
  maxAttempts: number;
  /** Base delay in ms; attempt n waits base * 2^(n-1). */
  backoffMs: number;
}

export interface RunnerConfig {
  /** Full chat-completions URL, e.g. http://host/v1/chat/completions */
  endpoint: string;
  model: string;
  /** Name of the environment variable holding the bearer token (never the token itself). */
  authTokenEnv?: string;
  maxOutputTokens?: number;
  /** Passed through as `reasoning_effort` when set. */
  reasoningEffort?: string;
  retry: RetryPolicy;
  concurrency: number;
}

export interface TokenUsage {
  prompt: number | null;
  completion: number | null;
  total: number | null;
}

/** One record per task; the Python CLI consumes these via `exec --record`. */
export interface CompletionRecord {
  task_id: string;
  prompt_file: string;
  model: string;
  status: "ok" | "failed";
  /** Raw completion text, byte-exact as returned; never post-processed here. */
  text: string | null;
  token_usage: TokenUsage | null;
  latency_ms: number;
  attempts: number;
  error: string | null;
}

export interface SuiteManifest {
  tasks: { id: string }[];
}
