/** Client-side mirror of the walkthrough state.
 *
 * The mirror is only ever written from server responses, so the cursor it
 * shows can lag the server for a moment but can never run ahead of it. UI
 * components render from here and call the API for every mutation.
 */

import type {
  CoverageReport,
  EditorInfo,
  GuideAnchor,
  GuideSession,
  SessionEnvelope,
} from "./api.js";

export interface ViewState {
  changeId: string;
  reviewerId: string;
  session: GuideSession | null;
  currentAnchor: GuideAnchor | null;
  report: CoverageReport | null;
  editor: EditorInfo | null;
}

export type Listener = (state: ViewState) => void;

export class Store {
  private state: ViewState;
  private listeners: Listener[] = [];

  constructor(changeId: string, reviewerId: string) {
    this.state = {
      changeId,
      reviewerId,
      session: null,
      currentAnchor: null,
      report: null,
      editor: null,
    };
  }

  get view(): ViewState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  /** Accept a session envelope exactly as the server returned it. */
  applySession(envelope: SessionEnvelope): void {
    this.state = {
      ...this.state,
      session: envelope.session,
      currentAnchor: envelope.current_anchor ?? null,
    };
    this.emit();
  }

  applyReport(report: CoverageReport): void {
    this.state = { ...this.state, report };
    this.emit();
  }

  applyEditor(editor: EditorInfo): void {
    this.state = { ...this.state, editor };
    this.emit();
  }
}
