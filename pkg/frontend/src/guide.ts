/** Guided walkthrough panel.
 *
 * Renders the ordered anchor list, highlights the anchor the server says
 * the session is on, and keeps the single "Next" control adjacent to that
 * highlighted stop. All cursor movement round-trips through the server;
 * the panel renders only confirmed state.
 */

import { ApiClient } from "./api.js";
import type { ChangeDetail } from "./api.js";
import { Store } from "./state.js";

export class GuidePanel {
  readonly element: HTMLElement;
  private change: ChangeDetail | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly store: Store,
    private readonly onServerChange: () => Promise<void>,
  ) {
    this.element = document.createElement("section");
    this.element.className = "guide-panel";
    this.store.subscribe(() => this.render());
  }

  async load(): Promise<void> {
    this.change = await this.api.getChange(this.store.view.changeId);
    this.render();
  }

  private async start(): Promise<void> {
    const { changeId, reviewerId } = this.store.view;
    const envelope = await this.api.startSession(changeId, reviewerId);
    this.store.applySession(envelope);
    await this.onServerChange();
  }

  private async next(): Promise<void> {
    const session = this.store.view.session;
    if (!session) {
      return;
    }
    const envelope = await this.api.advance(session.id);
    this.store.applySession(envelope);
    if (envelope.session.state === "completed") {
      const { report } = await this.api.sessionReport(envelope.session.id);
      this.store.applyReport(report);
    }
    await this.onServerChange();
  }

  private render(): void {
    const { session, report } = this.store.view;
    this.element.replaceChildren();

    const heading = document.createElement("h2");
    heading.textContent = this.change
      ? `Walkthrough: ${this.change.title}`
      : "Walkthrough";
    this.element.appendChild(heading);

    if (!this.change) {
      return;
    }
    if (!this.change.has_guide) {
      const note = document.createElement("p");
      note.className = "guide-missing";
      note.textContent = "The author did not attach a guide to this change.";
      this.element.appendChild(note);
      return;
    }

    if (!session) {
      const startButton = document.createElement("button");
      startButton.className = "guide-start";
      startButton.textContent = "Start walkthrough";
      startButton.addEventListener("click", () => {
        void this.start();
      });
      this.element.appendChild(startButton);
    }

    const list = document.createElement("ol");
    list.className = "anchor-list";
    for (const anchor of this.change.anchors) {
      const item = document.createElement("li");
      item.className = "anchor";
      item.dataset.index = String(anchor.index);

      const label = document.createElement("span");
      label.className = "anchor-label";
      label.textContent = `${anchor.file_path} · hunk ${anchor.hunk_index} — ${anchor.explanation}`;
      item.appendChild(label);

      const onThisAnchor =
        session !== null &&
        session.state === "in_progress" &&
        session.cursor === anchor.index;
      if (onThisAnchor) {
        // Distinct border marks the active stop; the Next control sits
        // immediately beside it rather than in a far-away toolbar.
        item.classList.add("anchor-current");
        item.style.border = "2px solid #4a5d96";
        const nextButton = document.createElement("button");
        nextButton.className = "guide-next";
        nextButton.textContent = "Next";
        nextButton.addEventListener("click", () => {
          void this.next();
        });
        item.appendChild(nextButton);
      }
      if (session !== null && session.visited[anchor.index]) {
        item.classList.add("anchor-visited");
      }
      list.appendChild(item);
    }
    this.element.appendChild(list);

    if (session && session.state === "completed") {
      // Completion is stated in the same quiet tone as the rest of the
      // panel: finishing the walk is the baseline, not an achievement.
      const done = document.createElement("p");
      done.className = "guide-complete neutral";
      done.textContent = report
        ? `Walkthrough finished: ${report.anchors_visited} of ${report.anchors_total} stops visited.`
        : "Walkthrough finished.";
      this.element.appendChild(done);
    }
  }
}
