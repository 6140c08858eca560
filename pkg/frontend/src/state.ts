// Pure view-model reducers: each server response folds into the SessionView.
// No scores are computed here — the view is a verbatim mirror of what the
// server reported, which is what the snapshot tests pin down.

import type {
  FeedbackResponse,
  SessionReport,
  SessionView,
  StartResponse,
} from "./types.js";

export function viewFromStart(response: StartResponse): SessionView {
  return {
    sessionId: response.session_id,
    rounds: [{ index: 0, feedback: null, ranking: response.ranking }],
    revealed: [],
    closed: false,
  };
}

export function applyFeedback(
  view: SessionView,
  feedbackText: string,
  response: FeedbackResponse,
): SessionView {
  if (response.round !== view.rounds.length) {
    throw new Error(
      `round mismatch: server says ${response.round}, view has ${view.rounds.length} rounds`,
    );
  }
  return {
    ...view,
    rounds: [
      ...view.rounds,
      { index: response.round, feedback: feedbackText, ranking: response.ranking },
    ],
  };
}

export function applyReveal(view: SessionView, imageKey: string): SessionView {
  if (view.revealed.includes(imageKey)) return view; // idempotent pin
  return { ...view, revealed: [...view.revealed, imageKey] };
}

export function applyClose(view: SessionView): SessionView {
  return { ...view, closed: true };
}

/** Rebuild the whole view from a server report (source of truth). */
export function viewFromReport(report: SessionReport): SessionView {
  return {
    sessionId: report.session_id,
    rounds: report.rounds.map((round) => ({
      index: round.r,
      feedback: round.feedback,
      ranking: round.ranking,
    })),
    revealed: [...report.revealed],
    closed: report.closed,
  };
}

/** Rank of a candidate in the previous round, for movement arrows. */
export function previousRank(
  view: SessionView,
  roundIndex: number,
  imageKey: string,
): number | null {
  if (roundIndex === 0) return null;
  const prev = view.rounds[roundIndex - 1];
  if (!prev) return null;
  const hit = prev.ranking.find((c) => c.image_key === imageKey);
  return hit ? hit.rank : null;
}
