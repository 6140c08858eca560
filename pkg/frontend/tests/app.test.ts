// Controller tests: the console driven end-to-end against recorded API
// responses, with a fetch stub replaying the fixtures.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiError, RetrievalApi } from "../src/api.js";
import { ConsoleApp } from "../src/app.js";
import type { SessionReport, StartResponse } from "../src/types.js";
import { fakeElements, fetchFromFixtures, fixture } from "./helpers.js";

const start = fixture("start");
const sid = (start.body as StartResponse).session_id;

const ROUTES = {
  ["POST /sessions"]: start,
  [`POST /sessions/${sid}/feedback`]: fixture("feedback"),
  [`POST /sessions/${sid}/reveal`]: fixture("reveal"),
  [`GET /sessions/${sid}`]: fixture("report"),
  [`DELETE /sessions/${sid}`]: fixture("close"),
};

function makeApp(routes: Record<string, { status: number; body: unknown }>) {
  vi.stubGlobal("fetch", fetchFromFixtures(routes));
  const el = fakeElements();
  const app = new ConsoleApp(
    new RetrievalApi(""),
    el as unknown as ConstructorParameters<typeof ConsoleApp>[1],
  );
  return { app, el };
}

describe("console controller", () => {
  beforeEach(() => vi.useRealTimers());
  afterEach(() => vi.unstubAllGlobals());

  it("empty query keeps start disabled", async () => {
    const { el } = makeApp(ROUTES);
    expect(el.start.disabled).toBe(true);
    el.query.value = "Upper: red jacket";
    await el.query.fire("input");
    expect(el.start.disabled).toBe(false);
  });

  it("start renders the round-0 grid from the server payload", async () => {
    const { app, el } = makeApp(ROUTES);
    el.query.value = "Upper: red jacket";
    await el.start.fire("click");
    expect(app.sessionView?.sessionId).toBe(sid);
    expect(el.timeline.innerHTML).toContain('data-round="0"');
    expect(el.timeline.innerHTML).toContain("gallery/p0.jpg");
    expect(el.send.disabled).toBe(false);
  });

  it("refine appends a round and clears the input", async () => {
    const { app, el } = makeApp(ROUTES);
    el.query.value = "Upper: red jacket";
    await el.start.fire("click");
    el.refine.value = "Lower: blue jeans";
    await el.send.fire("click");
    expect(app.sessionView?.rounds).toHaveLength(2);
    expect(el.timeline.innerHTML).toContain('data-round="1"');
    expect(el.refine.value).toBe("");
  });

  it("unparseable initial query surfaces the 422 inline", async () => {
    const { app, el } = makeApp({
      ["POST /sessions"]: fixture("start_unparseable_422"),
    });
    el.query.value = "no slots here";
    await el.start.fire("click");
    expect(app.sessionView).toBeNull();
    expect(el.errors.innerHTML).toContain('data-error="parse_failure"');
  });

  it("feedback after close surfaces the 409", async () => {
    const { el } = makeApp({
      ...ROUTES,
      [`POST /sessions/${sid}/feedback`]: fixture("feedback_closed_409"),
    });
    el.query.value = "Upper: red jacket";
    await el.start.fire("click");
    el.refine.value = "Head: hat";
    await el.send.fire("click");
    expect(el.errors.innerHTML).toContain('data-error="session_closed"');
  });

  it("reveal pins the clicked candidate", async () => {
    const { app, el } = makeApp(ROUTES);
    el.query.value = "Upper: red jacket";
    await el.start.fire("click");
    const card = {
      closest: () => ({
        getAttribute: () => "gallery/p0.jpg",
      }),
    };
    await el.timeline.fire("click", { target: card });
    expect(app.sessionView?.revealed).toEqual(["gallery/p0.jpg"]);
    expect(el.timeline.innerHTML).toContain("pinned");
  });

  it("unknown reveal key shows a 404 toast and pins nothing", async () => {
    const { app, el } = makeApp({
      ...ROUTES,
      [`POST /sessions/${sid}/reveal`]: fixture("reveal_unknown_404"),
    });
    el.query.value = "Upper: red jacket";
    await el.start.fire("click");
    const card = {
      closest: () => ({ getAttribute: () => "gallery/ghost.jpg" }),
    };
    await el.timeline.fire("click", { target: card });
    expect(el.errors.innerHTML).toContain('data-error="not_found"');
    expect(app.sessionView?.revealed).toEqual([]);
  });

  it("close disables refinement controls", async () => {
    const { app, el } = makeApp(ROUTES);
    el.query.value = "Upper: red jacket";
    await el.start.fire("click");
    await el.close.fire("click");
    expect(app.sessionView?.closed).toBe(true);
    expect(el.send.disabled).toBe(true);
    expect(el.timeline.innerHTML).toContain("session closed");
  });

  it("network failure shows a retry banner", async () => {
    vi.stubGlobal("fetch", async () => {
      throw new Error("connection refused");
    });
    const el = fakeElements();
    const app = new ConsoleApp(
      new RetrievalApi(""),
      el as unknown as ConstructorParameters<typeof ConsoleApp>[1],
    );
    el.query.value = "Upper: red jacket";
    await el.start.fire("click");
    expect(app.sessionView).toBeNull();
    expect(el.errors.innerHTML).toContain("retry");
  });
});

describe("api client", () => {
  afterEach(() => vi.unstubAllGlobals());

  it("replays the recorded report verbatim", async () => {
    vi.stubGlobal("fetch", fetchFromFixtures(ROUTES));
    const api = new RetrievalApi("");
    const report = await api.getReport(sid);
    expect(report).toEqual(fixture("report").body as SessionReport);
  });

  it("non-2xx becomes an ApiError carrying the server code", async () => {
    vi.stubGlobal(
      "fetch",
      fetchFromFixtures({
        [`POST /sessions/${sid}/feedback`]: fixture("feedback_closed_409"),
      }),
    );
    const api = new RetrievalApi("");
    const failure = api.submitFeedback(sid, "Head: hat");
    await expect(failure).rejects.toBeInstanceOf(ApiError);
    await expect(failure).rejects.toMatchObject({
      status: 409,
      code: "session_closed",
    });
  });

  it("idempotent reveal fixture reports a stable count", () => {
    expect(fixture("reveal").body).toEqual(fixture("reveal_again").body);
  });
});
