// Test helpers: recorded API fixtures and a fixture-backed fetch stub.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURE_DIR = join(
  dirname(fileURLToPath(import.meta.url)),
  "fixtures",
);

export interface Recorded {
  status: number;
  body: unknown;
}

export function fixture(name: string): Recorded {
  return JSON.parse(
    readFileSync(join(FIXTURE_DIR, `${name}.json`), "utf-8"),
  ) as Recorded;
}

/** fetch stub replaying recorded responses keyed by "METHOD path". */
export function fetchFromFixtures(
  routes: Record<string, Recorded>,
): typeof fetch {
  return (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    const recorded = routes[`${method} ${url}`];
    if (!recorded) throw new Error(`no fixture for ${method} ${url}`);
    return {
      ok: recorded.status >= 200 && recorded.status < 300,
      status: recorded.status,
      json: async () => recorded.body,
    } as Response;
  }) as typeof fetch;
}

/** Minimal element stand-in so the controller runs without a browser. */
export class FakeElement {
  value = "";
  disabled = false;
  innerHTML = "";
  private listeners: Record<string, Array<(event: unknown) => void>> = {};

  addEventListener(type: string, handler: (event: unknown) => void): void {
    (this.listeners[type] ??= []).push(handler);
  }

  async fire(type: string, event: unknown = {}): Promise<void> {
    for (const handler of this.listeners[type] ?? []) handler(event);
    // let the controller's promise chain settle
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

export function fakeElements() {
  return {
    query: new FakeElement(),
    start: new FakeElement(),
    refine: new FakeElement(),
    send: new FakeElement(),
    close: new FakeElement(),
    timeline: new FakeElement(),
    errors: new FakeElement(),
  };
}
