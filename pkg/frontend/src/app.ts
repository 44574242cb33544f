/** Application shell: wires the panels to one API client. */

import { ApiClient } from "./api.js";
import { CommentEditor } from "./editor.js";
import { GuidePanel } from "./guide.js";
import { HeartbeatLoop, ReminderPanel, systemClock } from "./reminders.js";
import type { Clock } from "./reminders.js";
import { Store } from "./state.js";

export interface AppOptions {
  baseUrl: string;
  token?: string;
  changeId: string;
  reviewerId: string;
  clock?: Clock;
  heartbeatSeconds?: number;
}

export class App {
  readonly api: ApiClient;
  readonly store: Store;
  readonly guide: GuidePanel;
  readonly editor: CommentEditor;
  readonly reminders: ReminderPanel;
  private loop: HeartbeatLoop | null = null;
  private timerId: ReturnType<typeof setInterval> | null = null;

  constructor(private readonly options: AppOptions) {
    this.api = new ApiClient(options.baseUrl, options.token);
    this.store = new Store(options.changeId, options.reviewerId);
    this.editor = new CommentEditor(this.api, this.store);
    this.guide = new GuidePanel(this.api, this.store, () =>
      this.editor.refresh(),
    );
    this.reminders = new ReminderPanel();
  }

  /** Mount everything and load initial server state. */
  async mount(root: HTMLElement): Promise<void> {
    root.replaceChildren();
    root.appendChild(this.reminders.element);
    root.appendChild(this.guide.element);
    root.appendChild(this.editor.element);
    await this.guide.load();
    await this.editor.refresh();
    this.store.subscribe(() => this.armHeartbeats());
    this.armHeartbeats();
  }

  private armHeartbeats(): void {
    const session = this.store.view.session;
    if (!session || this.loop) {
      return;
    }
    this.loop = new HeartbeatLoop(
      this.api,
      session.id,
      this.options.clock ?? systemClock,
      () => document.hasFocus(),
      (reminders) => this.reminders.show(reminders),
    );
    const cadence = (this.options.heartbeatSeconds ?? 30) * 1000;
    this.timerId = setInterval(() => {
      void this.loop?.tick();
    }, cadence);
  }

  unmount(): void {
    if (this.timerId !== null) {
      clearInterval(this.timerId);
      this.timerId = null;
    }
    this.loop = null;
  }
}

/** Browser entry point: reads settings from query string or data attributes. */
export function bootFromDocument(): void {
  const params = new URLSearchParams(window.location.search);
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const app = new App({
    baseUrl: params.get("api") ?? root.dataset.api ?? "http://127.0.0.1:8787",
    token: params.get("token") ?? root.dataset.token ?? undefined,
    changeId: params.get("change") ?? root.dataset.change ?? "ch-1",
    reviewerId: params.get("reviewer") ?? root.dataset.reviewer ?? "",
  });
  void app.mount(root);
}
