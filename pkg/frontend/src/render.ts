// HTML rendering for the console. String-based so the same functions are
// exercised head-less in tests and in the browser.

import type {
  RankedCandidate,
  ScoreBreakdown,
  SessionView,
} from "./types.js";
import { previousRank } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Server value rendered verbatim; no client-side rounding tricks. */
export function formatScore(value: number): string {
  return value.toFixed(4);
}

export function renderRankBadge(
  rank: number,
  previous: number | null,
): string {
  let movement = "";
  if (previous !== null && previous !== rank) {
    const up = previous > rank;
    movement = `<span class="movement ${up ? "up" : "down"}">${
      up ? "▲" : "▼"
    }${Math.abs(previous - rank)}</span>`;
  }
  return `<span class="rank-badge" data-rank="${rank}">#${rank}</span>${movement}`;
}

export function renderScoreBreakdown(scores: ScoreBreakdown): string {
  const rows = (
    [
      ["s_txt", scores.s_txt],
      ["s_img", scores.s_img],
      ["s_init", scores.s_init],
      ["s_sctxt", scores.s_sctxt],
      ["s_final", scores.s_final],
    ] as const
  )
    .map(
      ([label, value]) =>
        `<tr><td>${label}</td><td class="score" data-score="${label}">` +
        `${formatScore(value)}</td></tr>`,
    )
    .join("");
  return `<table class="scores">${rows}</table>`;
}

export function renderCandidateCard(
  candidate: RankedCandidate,
  options: { previousRank: number | null; pinned: boolean },
): string {
  const pin = options.pinned
    ? '<span class="pin" title="confirmed match">📌</span>'
    : "";
  return (
    `<div class="candidate${options.pinned ? " pinned" : ""}" ` +
    `data-image-key="${escapeHtml(candidate.image_key)}">` +
    renderRankBadge(candidate.rank, options.previousRank) +
    pin +
    `<div class="thumb" title="${escapeHtml(candidate.image_key)}">` +
    `${escapeHtml(candidate.image_key)}</div>` +
    `<div class="identity">${escapeHtml(candidate.identity)}</div>` +
    renderScoreBreakdown(candidate.scores) +
    `</div>`
  );
}

export function renderRound(view: SessionView, roundIndex: number): string {
  const round = view.rounds[roundIndex];
  if (!round) throw new Error(`no round ${roundIndex} in view`);
  const header =
    round.feedback === null
      ? `<h3>round 0 — initial query</h3>`
      : `<h3>round ${round.index} — ${escapeHtml(round.feedback)}</h3>`;
  const cards = round.ranking
    .map((candidate) =>
      renderCandidateCard(candidate, {
        previousRank: previousRank(view, roundIndex, candidate.image_key),
        pinned: view.revealed.includes(candidate.image_key),
      }),
    )
    .join("");
  return (
    `<section class="round" data-round="${round.index}">` +
    `${header}<div class="grid">${cards}</div></section>`
  );
}

/** Whole-session timeline, newest round last. */
export function renderTimeline(view: SessionView): string {
  const rounds = view.rounds
    .map((_, index) => renderRound(view, index))
    .join("");
  const closed = view.closed
    ? '<p class="closed-note">session closed</p>'
    : "";
  return `<div class="timeline" data-session="${escapeHtml(view.sessionId)}">${rounds}${closed}</div>`;
}

export function renderErrorBanner(code: string, detail: string): string {
  return (
    `<div class="error-banner" role="alert" data-error="${escapeHtml(code)}">` +
    `${escapeHtml(detail)}<button class="retry">retry</button></div>`
  );
}
