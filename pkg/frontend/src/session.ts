// Annotation session state machine, kept free of DOM concerns so it can
// be driven headlessly. All persistence is server-side: reloading a tab
// resumes at the next unanswered pair for the same annotator id.
//
// Default flow is two passes per pair (binary choice, then the three
// Likert ratings); SAME_SCREEN collapses them onto one screen. One
// Response carrying both is POSTed per pair.

import { HarnessClient, HttpError, NetworkError } from "./api.js";
import type { Choice, LikertTriple, PairView } from "./types.js";
import { isDone } from "./types.js";

export type Phase = "loading" | "choice" | "likert" | "submitting" | "done" | "error";

export interface SessionConfig {
  sameScreen?: boolean;
}

export interface SessionState {
  phase: Phase;
  pair: PairView | null;
  choice: Choice | null;
  likert: (number | null)[];
  answered: number;
  total: number;
  /** inline validation/server message shown without advancing */
  notice: string | null;
  /** network failure banner with retry affordance */
  offline: boolean;
}

export class AnnotationSession {
  private state: SessionState = {
    phase: "loading",
    pair: null,
    choice: null,
    likert: [null, null, null],
    answered: 0,
    total: 0,
    notice: null,
    offline: false,
  };
  private listeners: Array<(s: SessionState) => void> = [];
  private lastAction: (() => Promise<void>) | null = null;

  constructor(
    private readonly client: HarnessClient,
    private readonly annotatorId: string,
    private readonly config: SessionConfig = {},
  ) {}

  get snapshot(): SessionState {
    return { ...this.state, likert: [...this.state.likert] };
  }

  onChange(listener: (s: SessionState) => void): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.snapshot);
    }
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    this.lastAction = () => this.loadNext();
    this.update({ phase: "loading", offline: false, notice: null });
    let next;
    try {
      next = await this.client.fetchNext(this.annotatorId);
    } catch (err) {
      this.fail(err);
      return;
    }
    if (isDone(next)) {
      this.update({
        phase: "done",
        pair: null,
        answered: next.progress.answered,
        total: next.progress.total,
      });
      return;
    }
    this.update({
      phase: "choice",
      pair: next,
      choice: null,
      likert: [null, null, null],
      answered: next.progress.answered,
      total: next.progress.total,
      notice: null,
    });
  }

  selectChoice(choice: Choice): void {
    if (this.state.phase !== "choice" && this.state.phase !== "likert") {
      return;
    }
    this.update({ choice, notice: null });
  }

  /** Separate-pass mode: move from the binary choice to the ratings. */
  confirmChoice(): boolean {
    if (this.state.phase !== "choice") {
      return false;
    }
    if (this.config.sameScreen) {
      return true; // nothing to advance; submit happens from this screen
    }
    if (this.state.choice === null) {
      this.update({ notice: "Pick the scene that better satisfies the goal first." });
      return false;
    }
    this.update({ phase: "likert", notice: null });
    return true;
  }

  setLikert(question: number, value: number): void {
    if (question < 0 || question > 2 || value < 1 || value > 7) {
      return;
    }
    const likert = [...this.state.likert];
    likert[question] = value;
    this.update({ likert, notice: null });
  }

  private validate(): string | null {
    if (this.state.choice === null) {
      return "Pick the scene that better satisfies the goal first.";
    }
    if (this.state.likert.some((v) => v === null)) {
      return "Answer all three rating questions (1-7).";
    }
    return null;
  }

  async submit(): Promise<void> {
    if (this.state.phase === "submitting") {
      return; // double-submit guard
    }
    if (this.state.phase !== "likert" && !(this.config.sameScreen && this.state.phase === "choice")) {
      return;
    }
    const problem = this.validate();
    if (problem !== null) {
      this.update({ notice: problem });
      return;
    }
    const pair = this.state.pair;
    if (pair === null) {
      return;
    }
    const body = {
      pair_id: pair.pair_id,
      annotator_id: this.annotatorId,
      choice: this.state.choice as Choice,
      likert: this.state.likert as LikertTriple,
    };
    const phaseBefore = this.state.phase;
    this.lastAction = () => this.submit();
    this.update({ phase: "submitting", offline: false });
    try {
      await this.client.submit(body);
    } catch (err) {
      if (err instanceof HttpError) {
        // 400/409: surface inline on the same screen, never advance
        this.update({ phase: phaseBefore, notice: err.message });
      } else {
        this.fail(err);
      }
      return;
    }
    await this.loadNext();
  }

  /** Re-run the interrupted request after a network failure. */
  async retry(): Promise<void> {
    if (this.lastAction !== null) {
      await this.lastAction();
    }
  }

  private fail(err: unknown): void {
    const message =
      err instanceof NetworkError
        ? "Cannot reach the annotation server."
        : String(err);
    this.update({ phase: "error", offline: true, notice: message });
  }
}
