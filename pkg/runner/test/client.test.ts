import { afterEach, describe, expect, it } from "vitest";

import { chatComplete } from "../src/client.js";
import type { RunnerConfig } from "../src/types.js";
import { okCompletion, startMock, type MockEndpoint } from "./mock-server.js";

let mock: MockEndpoint | undefined;

afterEach(async () => {
  await mock?.close();
  mock = undefined;
  delete process.env.TEST_RUNNER_TOKEN;
});

function config(endpoint: string, overrides: Partial<RunnerConfig> = {}): RunnerConfig {
  return {
    endpoint,
    model: "mock-model",
    retry: { maxAttempts: 3, backoffMs: 1 },
    concurrency: 1,
    ...overrides,
  };
}

describe("chatComplete", () => {
  it("returns the text and token usage verbatim", async () => {
    mock = await startMock(() => ({ status: 200, json: okCompletion("hello plan", 321) }));
    const result = await chatComplete("prompt text", config(mock.url));
    expect(result.text).toBe("hello plan");
    expect(result.tokenUsage).toEqual({ prompt: 311, completion: 10, total: 321 });
    expect(result.attempts).toBe(1);
    expect(mock.calls[0].body).toMatchObject({
      model: "mock-model",
      messages: [{ role: "user", content: "prompt text" }],
    });
  });

  it("retries transient 500s and succeeds", async () => {
    mock = await startMock((index) =>
      index < 2
        ? { status: 500, json: { error: "boom" } }
        : { status: 200, json: okCompletion("after retries") },
    );
    const result = await chatComplete("p", config(mock.url));
    expect(result.text).toBe("after retries");
    expect(result.attempts).toBe(3);
    expect(mock.calls.length).toBe(3);
  });

  it("gives up after max attempts", async () => {
    mock = await startMock(() => ({ status: 503, json: { error: "down" } }));
    await expect(chatComplete("p", config(mock.url))).rejects.toThrow("HTTP 503");
    expect(mock.calls.length).toBe(3);
  });

  it("does not retry permanent 4xx failures", async () => {
    mock = await startMock(() => ({ status: 400, json: { error: "bad request" } }));
    await expect(chatComplete("p", config(mock.url))).rejects.toThrow("HTTP 400");
    expect(mock.calls.length).toBe(1);
  });

  it("sends the bearer token from the named env var only", async () => {
    process.env.TEST_RUNNER_TOKEN = "sekret";
    mock = await startMock(() => ({ status: 200, json: okCompletion("ok") }));
    await chatComplete("p", config(mock.url, { authTokenEnv: "TEST_RUNNER_TOKEN" }));
    expect(mock.calls[0].authorization).toBe("Bearer sekret");
  });

  it("passes max_tokens and reasoning_effort through", async () => {
    mock = await startMock(() => ({ status: 200, json: okCompletion("ok") }));
    await chatComplete(
      "p",
      config(mock.url, { maxOutputTokens: 777, reasoningEffort: "high" }),
    );
    expect(mock.calls[0].body).toMatchObject({ max_tokens: 777, reasoning_effort: "high" });
  });
});
