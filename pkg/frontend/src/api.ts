/** Typed client for the review service HTTP API.
 *
 * The whole UI talks to the backend exclusively through this module, and
 * the only piece of configuration is the base URL (plus an optional access
 * token sent as the X-Review-Token header).
 */

export interface GuideAnchor {
  index: number;
  file_path: string;
  hunk_index: number;
  explanation: string;
  highlight: [number, number] | null;
}

export interface GuideSession {
  id: string;
  change_id: string;
  reviewer_id: string;
  cursor: number;
  visited: boolean[];
  state: "not_started" | "in_progress" | "completed";
  started_at: string | null;
  completed_at: string | null;
  last_activity_at: string | null;
  bookmarks: [string, number][];
}

export interface CoverageReport {
  anchors_total: number;
  anchors_visited: number;
  unvisited_anchors: number[];
  unanchored_hunks: [string, number][];
  duration_seconds: number | null;
}

export interface LintFinding {
  rule_id: string;
  severity: string;
  message: string;
  span: [number, number] | null;
}

export interface LintReport {
  findings: LintFinding[];
  passed: boolean;
}

export interface StoredComment {
  id: string;
  change_id: string;
  author_id: string;
  problem: string;
  rationale: string;
  suggestions: string[];
  raw_text: string;
  file_path: string | null;
  line: number | null;
  [extra: string]: unknown;
}

export interface AdviceItem {
  id: string;
  context: string;
  text: string;
  [extra: string]: unknown;
}

export interface EditorInfo {
  scaffold: string;
  advice: AdviceItem[];
  can_comment: boolean;
  reason: string;
}

export interface ChangeDetail {
  id: string;
  repo_id: string;
  author_id: string;
  title: string;
  status: string;
  files: unknown[];
  anchors: GuideAnchor[];
  has_guide: boolean;
  comments: StoredComment[];
}

export interface HaltReminder {
  session_id: string;
  ordinal: number;
  message: string;
}

export interface ActivityTimer {
  session_id: string;
  accumulated_seconds: number;
  threshold_seconds: number;
  reminders_sent: number;
  last_heartbeat: string | null;
}

export interface SessionEnvelope {
  session: GuideSession;
  current_anchor?: GuideAnchor;
}

export interface HeartbeatResult {
  timer: ActivityTimer;
  reminders: HaltReminder[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly errorName: string,
    detail: string,
  ) {
    super(detail);
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    public readonly baseUrl: string,
    private readonly token?: string,
    fetchFn?: FetchLike,
  ) {
    const impl = fetchFn ?? (globalThis.fetch as FetchLike | undefined);
    if (!impl) {
      throw new Error("no fetch implementation available");
    }
    this.fetchFn = impl.bind(globalThis) as FetchLike;
  }

  private headers(): Record<string, string> {
    const headers: Record<string, string> = {
      "Content-Type": "application/json",
    };
    if (this.token) {
      headers["X-Review-Token"] = this.token;
    }
    return headers;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const data = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiError(
        response.status,
        typeof data.error === "string" ? data.error : "Error",
        typeof data.detail === "string" ? data.detail : response.statusText,
      );
    }
    return data as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  getChange(changeId: string): Promise<ChangeDetail> {
    return this.request("GET", `/changes/${changeId}`);
  }

  startSession(changeId: string, reviewerId: string): Promise<SessionEnvelope> {
    return this.request("POST", `/changes/${changeId}/guide/sessions`, {
      reviewer_id: reviewerId,
    });
  }

  advance(sessionId: string): Promise<SessionEnvelope> {
    return this.request("POST", `/guide/sessions/${sessionId}/advance`, {});
  }

  addBookmark(
    sessionId: string,
    filePath: string,
    line: number,
  ): Promise<{ session: GuideSession }> {
    return this.request("POST", `/guide/sessions/${sessionId}/bookmarks`, {
      file_path: filePath,
      line,
    });
  }

  sessionReport(
    sessionId: string,
  ): Promise<{ session: GuideSession; report: CoverageReport }> {
    return this.request("GET", `/guide/sessions/${sessionId}/report`);
  }

  commentEditor(changeId: string, reviewerId: string): Promise<EditorInfo> {
    const query = new URLSearchParams({ reviewer_id: reviewerId });
    return this.request("GET", `/changes/${changeId}/comment-editor?${query}`);
  }

  postComment(
    changeId: string,
    reviewerId: string,
    rawText: string,
    filePath?: string,
    line?: number,
  ): Promise<{ comment: StoredComment; lint: LintReport }> {
    return this.request("POST", `/changes/${changeId}/comments`, {
      reviewer_id: reviewerId,
      raw_text: rawText,
      file_path: filePath ?? null,
      line: line ?? null,
    });
  }

  lint(rawText: string): Promise<LintReport> {
    return this.request("POST", "/comments/lint", { raw_text: rawText });
  }

  searchSnippets(
    changeId: string,
    q: string,
    k = 5,
  ): Promise<{ results: unknown[] }> {
    const query = new URLSearchParams({ q, k: String(k) });
    return this.request("GET", `/changes/${changeId}/snippets?${query}`);
  }

  heartbeat(
    sessionId: string,
    deltaSeconds: number,
    at?: string,
  ): Promise<HeartbeatResult> {
    const body: Record<string, unknown> = { delta_seconds: deltaSeconds };
    if (at !== undefined) {
      body.at = at;
    }
    return this.request("POST", `/sessions/${sessionId}/heartbeat`, body);
  }
}
