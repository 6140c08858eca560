import { describe, expect, it } from "vitest";

import {
  escapeHtml,
  formatScore,
  renderErrorBanner,
  renderRankBadge,
  renderScoreBreakdown,
  renderTimeline,
} from "../src/render.js";
import { applyFeedback, applyReveal, viewFromStart } from "../src/state.js";
import type {
  FeedbackResponse,
  RankedCandidate,
  StartResponse,
} from "../src/types.js";
import { fixture } from "./helpers.js";

const start = fixture("start").body as StartResponse;
const feedback = fixture("feedback").body as FeedbackResponse;

describe("score display mirrors the server exactly", () => {
  it("every rendered score equals the recorded server value", () => {
    for (const candidate of start.ranking) {
      const html = renderScoreBreakdown(candidate.scores);
      for (const [label, value] of Object.entries(candidate.scores)) {
        expect(html).toContain(
          `data-score="${label}">${formatScore(value)}</td>`,
        );
      }
    }
  });

  it("rank badges carry the server-reported ranks", () => {
    const view = viewFromStart(start);
    const html = renderTimeline(view);
    for (const candidate of start.ranking) {
      expect(html).toContain(`data-rank="${candidate.rank}"`);
    }
    expect(start.ranking.map((c: RankedCandidate) => c.rank)).toEqual([
      1, 2, 3,
    ]);
  });

  it("no number is invented: grid shows one card per server candidate", () => {
    const html = renderTimeline(viewFromStart(start));
    const cards = html.match(/class="candidate/g) ?? [];
    expect(cards.length).toBe(start.ranking.length);
  });
});

describe("timeline", () => {
  it("refine appends exactly one round", () => {
    let view = viewFromStart(start);
    view = applyFeedback(view, "Lower: blue jeans", feedback);
    const html = renderTimeline(view);
    expect(html.match(/<section class="round"/g)?.length).toBe(2);
    expect(html).toContain('data-round="0"');
    expect(html).toContain('data-round="1"');
    expect(html).toContain("Lower: blue jeans");
  });

  it("rank movement arrows compare against the previous round only", () => {
    let view = viewFromStart(start);
    view = applyFeedback(view, "Lower: blue jeans", feedback);
    const html = renderTimeline(view);
    // round 0 never shows movement
    const round0 = html.slice(0, html.indexOf('data-round="1"'));
    expect(round0).not.toContain("movement");
  });

  it("pinned candidate renders once even after repeated reveals", () => {
    let view = viewFromStart(start);
    view = applyReveal(view, "gallery/p0.jpg");
    view = applyReveal(view, "gallery/p0.jpg");
    const html = renderTimeline(view);
    expect(html.match(/class="pin"/g)?.length).toBe(1);
    expect(view.revealed).toEqual(["gallery/p0.jpg"]);
  });

  it("closed sessions carry a closing note", () => {
    const view = { ...viewFromStart(start), closed: true };
    expect(renderTimeline(view)).toContain("session closed");
  });
});

describe("primitives", () => {
  it("escapes markup in user-controlled text", () => {
    expect(escapeHtml('<img src=x onerror="a">')).not.toContain("<img");
  });

  it("badge shows upward movement", () => {
    expect(renderRankBadge(1, 3)).toContain("▲2");
    expect(renderRankBadge(3, 1)).toContain("▼2");
    expect(renderRankBadge(2, 2)).not.toContain("movement");
  });

  it("error banner exposes the stable error code", () => {
    const html = renderErrorBanner("session_closed", "session 's0' is closed");
    expect(html).toContain('data-error="session_closed"');
    expect(html).toContain("retry");
  });
});
