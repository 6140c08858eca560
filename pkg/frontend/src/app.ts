// Console controller: wires DOM events to the API client and re-renders the
// timeline after every server response. One active session per tab; all
// requests for that session run through a single promise chain.

import { ApiError, RetrievalApi } from "./api.js";
import {
  applyClose,
  applyFeedback,
  applyReveal,
  viewFromStart,
} from "./state.js";
import { renderErrorBanner, renderTimeline } from "./render.js";
import type { SessionView } from "./types.js";

interface Elements {
  query: HTMLInputElement;
  start: HTMLButtonElement;
  refine: HTMLInputElement;
  send: HTMLButtonElement;
  close: HTMLButtonElement;
  timeline: HTMLElement;
  errors: HTMLElement;
}

export class ConsoleApp {
  private view: SessionView | null = null;
  private chain: Promise<void> = Promise.resolve();

  constructor(
    private readonly api: RetrievalApi,
    private readonly el: Elements,
  ) {
    el.start.addEventListener("click", () => this.enqueue(() => this.start()));
    el.send.addEventListener("click", () => this.enqueue(() => this.refine()));
    el.close.addEventListener("click", () => this.enqueue(() => this.close()));
    el.query.addEventListener("input", () => this.syncControls());
    el.timeline.addEventListener("click", (event) => {
      const card = (event.target as HTMLElement).closest?.(".candidate");
      const key = card?.getAttribute("data-image-key");
      if (key) this.enqueue(() => this.reveal(key));
    });
    this.syncControls();
  }

  /** Serialize requests so feedback/reveal never race within the session. */
  private enqueue(task: () => Promise<void>): Promise<void> {
    this.chain = this.chain.then(task, task);
    return this.chain;
  }

  private syncControls(): void {
    this.el.start.disabled = this.el.query.value.trim() === "";
    const active = this.view !== null && !this.view.closed;
    this.el.send.disabled = !active;
    this.el.close.disabled = !active;
  }

  private redraw(): void {
    this.el.timeline.innerHTML = this.view ? renderTimeline(this.view) : "";
    this.syncControls();
  }

  private showError(error: unknown): void {
    const code = error instanceof ApiError ? error.code : "network";
    const detail =
      error instanceof Error ? error.message : "request failed";
    this.el.errors.innerHTML = renderErrorBanner(code, detail);
  }

  private async start(): Promise<void> {
    const q0 = this.el.query.value.trim();
    if (!q0) return;
    try {
      this.view = viewFromStart(await this.api.startSession(q0));
      this.el.errors.innerHTML = "";
      this.redraw();
    } catch (error) {
      this.showError(error);
    }
  }

  private async refine(): Promise<void> {
    if (!this.view || this.view.closed) return;
    const text = this.el.refine.value.trim();
    if (!text) return;
    try {
      const response = await this.api.submitFeedback(
        this.view.sessionId,
        text,
      );
      this.view = applyFeedback(this.view, text, response);
      this.el.refine.value = "";
      this.el.errors.innerHTML = "";
      this.redraw();
    } catch (error) {
      this.showError(error);
    }
  }

  private async reveal(imageKey: string): Promise<void> {
    if (!this.view || this.view.closed) return;
    try {
      await this.api.reveal(this.view.sessionId, imageKey);
      this.view = applyReveal(this.view, imageKey);
      this.redraw();
    } catch (error) {
      this.showError(error);
    }
  }

  private async close(): Promise<void> {
    if (!this.view) return;
    try {
      await this.api.closeSession(this.view.sessionId);
      this.view = applyClose(this.view);
      this.redraw();
    } catch (error) {
      this.showError(error);
    }
  }

  /** Test hook: current immutable view. */
  get sessionView(): SessionView | null {
    return this.view;
  }
}

export function mount(root: Document, baseUrl = ""): ConsoleApp {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = root.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  };
  return new ConsoleApp(new RetrievalApi(baseUrl), {
    query: byId<HTMLInputElement>("query"),
    start: byId<HTMLButtonElement>("start"),
    refine: byId<HTMLInputElement>("refine"),
    send: byId<HTMLButtonElement>("send"),
    close: byId<HTMLButtonElement>("close"),
    timeline: byId("timeline"),
    errors: byId("errors"),
  });
}

declare const document: Document | undefined;
if (typeof document !== "undefined" && document.getElementById("timeline")) {
  mount(document);
}
