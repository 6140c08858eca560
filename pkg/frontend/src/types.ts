// Server wire types for the retrieval console.
//
// Every number rendered in the UI comes straight from these payloads; the
// console never re-scores or re-ranks anything client-side.

/** Per-candidate score components as reported by the server. */
export interface ScoreBreakdown {
  s_txt: number;
  s_img: number;
  s_init: number;
  s_sctxt: number;
  s_final: number;
}

/** One ranked gallery candidate. */
export interface RankedCandidate {
  image_key: string;
  identity: string;
  rank: number;
  scores: ScoreBreakdown;
}

export interface StartResponse {
  session_id: string;
  ranking: RankedCandidate[];
}

export interface FeedbackResponse {
  round: number;
  ranking: RankedCandidate[];
}

export interface RevealResponse {
  revealed_count: number;
}

/** One round of the server-side session report. */
export interface ReportRound {
  r: number;
  feedback: string | null;
  ranking: RankedCandidate[];
}

export interface SessionReport {
  session_id: string;
  rounds: ReportRound[];
  revealed: string[];
  closed: boolean;
}

/** Error body for every non-2xx response. */
export interface ApiErrorBody {
  error: string;
  detail: string;
}

// ---------------------------------------------------------------------------
// Client-side view model (a mirror of server state, nothing derived)

export interface RoundView {
  index: number;
  /** Feedback text that produced this round; null for round 0. */
  feedback: string | null;
  ranking: RankedCandidate[];
}

export interface SessionView {
  sessionId: string;
  rounds: RoundView[];
  /** Image keys the operator has confirmed, in reveal order. */
  revealed: string[];
  closed: boolean;
}
