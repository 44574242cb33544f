/** Focused-time heartbeats and halt notices.
 *
 * The loop counts a tick's elapsed time only when the tab was focused for
 * that whole tick, stamps every heartbeat with its own timestamp, and keeps
 * unsent heartbeats in a queue. Because the server treats a re-sent stamp
 * as already processed, flushing the queue after an outage can never double
 * count a minute.
 */

import { ApiClient } from "./api.js";
import type { HaltReminder } from "./api.js";

export interface Clock {
  now(): Date;
}

export const systemClock: Clock = { now: () => new Date() };

interface PendingBeat {
  deltaSeconds: number;
  at: string;
}

export class HeartbeatLoop {
  private lastTick: Date;
  private wasFocused: boolean;
  private queue: PendingBeat[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly clock: Clock,
    private readonly isFocused: () => boolean,
    private readonly onReminders: (reminders: HaltReminder[]) => void,
  ) {
    this.lastTick = clock.now();
    this.wasFocused = isFocused();
  }

  /** Call on a steady cadence (e.g. every 30s) from the host timer. */
  async tick(): Promise<void> {
    const now = this.clock.now();
    const focusedNow = this.isFocused();
    const elapsed = (now.getTime() - this.lastTick.getTime()) / 1000;
    this.lastTick = now;

    // Only a tick that began and ended focused counts as review time.
    if (elapsed > 0 && focusedNow && this.wasFocused) {
      this.queue.push({ deltaSeconds: elapsed, at: now.toISOString() });
    }
    this.wasFocused = focusedNow;
    await this.flush();
  }

  /** How many heartbeats are waiting (0 when the connection is healthy). */
  get pending(): number {
    return this.queue.length;
  }

  private async flush(): Promise<void> {
    while (this.queue.length > 0) {
      const beat = this.queue[0];
      let result;
      try {
        result = await this.api.heartbeat(
          this.sessionId,
          beat.deltaSeconds,
          beat.at,
        );
      } catch {
        // Offline or failed: keep the beat queued with its original
        // stamp and try again on a later tick.
        return;
      }
      this.queue.shift();
      if (result.reminders.length > 0) {
        this.onReminders(result.reminders);
      }
    }
  }
}

/** Renders halt notices; one element per reminder the server issued. */
export class ReminderPanel {
  readonly element: HTMLElement;

  constructor() {
    this.element = document.createElement("aside");
    this.element.className = "halt-notices";
  }

  show(reminders: HaltReminder[]): void {
    for (const reminder of reminders) {
      const notice = document.createElement("p");
      notice.className = "halt-notice";
      notice.dataset.ordinal = String(reminder.ordinal);
      notice.textContent = reminder.message;
      this.element.appendChild(notice);
    }
  }
}
