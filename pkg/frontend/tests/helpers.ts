/** Shared wiring for the UI tests.
 *
 * The suite runs against a real service process (started by
 * global-setup.ts) on a dedicated port, so every assertion here exercises
 * the actual HTTP surface rather than a mock.
 */

import type { ChangeDetail, GuideSession } from "../src/api.js";

export const BASE_URL = "http://127.0.0.1:8807";
export const TOKEN = "ui-test-token";

/** Three hunks across two files; one guide stop per hunk. */
export const THREE_STOP_DIFF = `diff --git a/src/app.py b/src/app.py
--- a/src/app.py
+++ b/src/app.py
@@ -10,3 +10,4 @@
 def handler(req):
-    return req.value
+    value = req.value
+    return value
 # end
@@ -30,2 +31,3 @@
 def teardown():
+    close_pool()
     return None
diff --git a/src/util.py b/src/util.py
--- a/src/util.py
+++ b/src/util.py
@@ -1,2 +1,3 @@
 import os
+import sys
 import json
`;

export const THREE_STOP_ANCHORS = [
  { file_path: "src/app.py", hunk_index: 0, explanation: "return value" },
  { file_path: "src/app.py", hunk_index: 1, explanation: "pool teardown" },
  { file_path: "src/util.py", hunk_index: 0, explanation: "new import" },
];

function authHeaders(): Record<string, string> {
  return { "Content-Type": "application/json", "X-Review-Token": TOKEN };
}

async function serverCall<T>(
  method: string,
  path: string,
  body?: unknown,
): Promise<T> {
  const response = await fetch(`${BASE_URL}${path}`, {
    method,
    headers: authHeaders(),
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const data = await response.json();
  if (!response.ok) {
    throw new Error(`${method} ${path} -> ${response.status}: ${JSON.stringify(data)}`);
  }
  return data as T;
}

/** Create a guided change on the running service; returns its id. */
export async function createChange(title: string): Promise<string> {
  const change = await serverCall<{ id: string }>("POST", "/changes", {
    repo_id: "demo/repo",
    author_id: "author-ui",
    title,
    diff: THREE_STOP_DIFF,
    anchors: THREE_STOP_ANCHORS,
  });
  return change.id;
}

/** Start a walkthrough session out-of-band (as another tab would). */
export async function startSessionRaw(
  changeId: string,
  reviewerId: string,
): Promise<GuideSession> {
  const envelope = await serverCall<{ session: GuideSession }>(
    "POST",
    `/changes/${changeId}/guide/sessions`,
    { reviewer_id: reviewerId },
  );
  return envelope.session;
}

/** The server's view of a session, read fresh over HTTP. */
export async function fetchSession(sessionId: string): Promise<GuideSession> {
  const body = await serverCall<{ session: GuideSession }>(
    "GET",
    `/guide/sessions/${sessionId}/report`,
  );
  return body.session;
}

export async function fetchChange(changeId: string): Promise<ChangeDetail> {
  return serverCall<ChangeDetail>("GET", `/changes/${changeId}`);
}

/** Poll until `probe` returns truthy (and return that value) or time out. */
export async function waitUntil<T>(
  probe: () => T | Promise<T>,
  timeoutMs = 8000,
  intervalMs = 25,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  for (;;) {
    try {
      const value = await probe();
      if (value) {
        return value;
      }
    } catch (error) {
      lastError = error;
    }
    if (Date.now() > deadline) {
      throw new Error(
        `condition not met within ${timeoutMs}ms` +
          (lastError ? `; last error: ${String(lastError)}` : ""),
      );
    }
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
