/** Comment editor.
 *
 * The textarea is enabled exactly when the server's comment gate says so;
 * the component never decides locally. A scaffold button inserts the
 * structured template verbatim, and the contextual advice list is rendered
 * expanded from the first paint so it cannot go unseen.
 */

import { ApiClient, ApiError } from "./api.js";
import { Store } from "./state.js";

export class CommentEditor {
  readonly element: HTMLElement;
  private textarea: HTMLTextAreaElement;
  private scaffoldButton: HTMLButtonElement;
  private submitButton: HTMLButtonElement;
  private gateNote: HTMLElement;
  private adviceBox: HTMLDetailsElement;
  private lintBox: HTMLElement;
  private postedBox: HTMLElement;

  constructor(
    private readonly api: ApiClient,
    private readonly store: Store,
  ) {
    this.element = document.createElement("section");
    this.element.className = "comment-editor";

    const heading = document.createElement("h2");
    heading.textContent = "Leave a comment";
    this.element.appendChild(heading);

    this.gateNote = document.createElement("p");
    this.gateNote.className = "gate-note";
    this.element.appendChild(this.gateNote);

    // Advice ships open: collapsing it is the reader's choice, not the
    // default.
    this.adviceBox = document.createElement("details");
    this.adviceBox.className = "advice";
    this.adviceBox.open = true;
    const summary = document.createElement("summary");
    summary.textContent = "Advice for writing review comments";
    this.adviceBox.appendChild(summary);
    this.element.appendChild(this.adviceBox);

    this.textarea = document.createElement("textarea");
    this.textarea.className = "comment-text";
    this.textarea.rows = 10;
    this.element.appendChild(this.textarea);

    const controls = document.createElement("div");
    controls.className = "editor-controls";
    this.scaffoldButton = document.createElement("button");
    this.scaffoldButton.className = "insert-scaffold";
    this.scaffoldButton.textContent = "Insert template";
    this.scaffoldButton.addEventListener("click", () => this.insertScaffold());
    controls.appendChild(this.scaffoldButton);

    this.submitButton = document.createElement("button");
    this.submitButton.className = "submit-comment";
    this.submitButton.textContent = "Post comment";
    this.submitButton.addEventListener("click", () => {
      void this.submit();
    });
    controls.appendChild(this.submitButton);
    this.element.appendChild(controls);

    this.lintBox = document.createElement("div");
    this.lintBox.className = "lint-results";
    this.element.appendChild(this.lintBox);

    this.postedBox = document.createElement("ul");
    this.postedBox.className = "posted-comments";
    this.element.appendChild(this.postedBox);

    this.store.subscribe(() => this.render());
  }

  /** Pull the gate, scaffold, and advice from the server. */
  async refresh(): Promise<void> {
    const { changeId, reviewerId } = this.store.view;
    const editor = await this.api.commentEditor(changeId, reviewerId);
    this.store.applyEditor(editor);
  }

  private insertScaffold(): void {
    const editor = this.store.view.editor;
    if (!editor) {
      return;
    }
    const existing = this.textarea.value;
    this.textarea.value = existing
      ? `${existing}\n${editor.scaffold}`
      : editor.scaffold;
  }

  private async submit(): Promise<void> {
    const { changeId, reviewerId } = this.store.view;
    this.lintBox.replaceChildren();
    try {
      const { comment, lint } = await this.api.postComment(
        changeId,
        reviewerId,
        this.textarea.value,
      );
      this.textarea.value = "";
      const posted = document.createElement("li");
      posted.className = "posted-comment";
      posted.dataset.commentId = comment.id;
      posted.textContent = comment.raw_text;
      this.postedBox.appendChild(posted);
      this.renderLint(lint.findings.map((f) => `${f.rule_id}: ${f.message}`));
    } catch (error) {
      if (error instanceof ApiError && error.errorName === "GuideInProgress") {
        // Keep the draft; just restate the gate.
        this.renderLint([error.message]);
        await this.refresh();
        return;
      }
      throw error;
    }
  }

  private renderLint(lines: string[]): void {
    this.lintBox.replaceChildren();
    for (const line of lines) {
      const item = document.createElement("p");
      item.className = "lint-line";
      item.textContent = line;
      this.lintBox.appendChild(item);
    }
  }

  private render(): void {
    const editor = this.store.view.editor;
    if (!editor) {
      this.textarea.disabled = true;
      this.submitButton.disabled = true;
      this.scaffoldButton.disabled = true;
      this.gateNote.textContent = "Loading…";
      return;
    }
    const enabled = editor.can_comment;
    this.textarea.disabled = !enabled;
    this.submitButton.disabled = !enabled;
    this.scaffoldButton.disabled = !enabled;
    this.gateNote.dataset.reason = editor.reason;
    this.gateNote.textContent = enabled
      ? "Comments are open."
      : "Finish your walkthrough before commenting.";

    const keep = this.adviceBox.open;
    this.adviceBox.replaceChildren();
    const summary = document.createElement("summary");
    summary.textContent = "Advice for writing review comments";
    this.adviceBox.appendChild(summary);
    const list = document.createElement("ul");
    for (const item of editor.advice) {
      const entry = document.createElement("li");
      entry.className = "advice-item";
      entry.textContent = item.text;
      list.appendChild(entry);
    }
    this.adviceBox.appendChild(list);
    this.adviceBox.open = keep;
  }
}
