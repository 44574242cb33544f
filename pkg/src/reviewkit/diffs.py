"""Unified diff parsing and serialization.

Accepts both plain POSIX ``---`` / ``+++`` diffs and git-extended diffs
(``diff --git`` headers, mode lines, rename metadata, binary file notices).
Parsed diffs serialize back to git-style text, and serializing then
re-parsing yields a structurally identical result.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from .errors import ReviewKitError

# Line tags used inside hunks.
CONTEXT = "context"
ADD = "add"
DEL = "del"

LINE_TAGS = (CONTEXT, ADD, DEL)

# File change kinds.
ADDED = "added"
DELETED = "deleted"
MODIFIED = "modified"
RENAMED = "renamed"

FILE_KINDS = (ADDED, DELETED, MODIFIED, RENAMED)

_TAG_PREFIX = {CONTEXT: " ", ADD: "+", DEL: "-"}
_PREFIX_TAG = {" ": CONTEXT, "+": ADD, "-": DEL}

RE_HUNK_HEADER = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")
RE_DIFF_GIT = re.compile(r"^diff --git (?:a/)?(.+?) (?:b/)?(.+)$")
RE_BINARY = re.compile(r"^Binary files? (.+) and (.+) differ$")
RE_RENAME_FROM = re.compile(r"^rename from (.+)$")
RE_RENAME_TO = re.compile(r"^rename to (.+)$")


class MalformedDiff(ReviewKitError):
    """Raised when diff text cannot be parsed.

    Carries the 1-based line number of the offending line and a short
    reason string.
    """

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


@dataclass
class Hunk:
    """One contiguous block of changes within a file diff.

    ``lines`` holds ``(tag, text)`` pairs where the tag is one of
    ``context``, ``add``, ``del`` and the text excludes the prefix
    character and the trailing newline.
    """

    old_start: int
    old_len: int
    new_start: int
    new_len: int
    lines: list[tuple[str, str]] = field(default_factory=list)

    def validate(self) -> None:
        """Check that header counts agree with the body lines."""
        old_seen = sum(1 for tag, _ in self.lines if tag in (CONTEXT, DEL))
        new_seen = sum(1 for tag, _ in self.lines if tag in (CONTEXT, ADD))
        if old_seen != self.old_len:
            raise ValueError(
                f"hunk old side has {old_seen} lines, header says {self.old_len}"
            )
        if new_seen != self.new_len:
            raise ValueError(
                f"hunk new side has {new_seen} lines, header says {self.new_len}"
            )
        for tag, _ in self.lines:
            if tag not in LINE_TAGS:
                raise ValueError(f"unknown line tag {tag!r}")

    def added_lines(self) -> int:
        return sum(1 for tag, _ in self.lines if tag == ADD)

    def deleted_lines(self) -> int:
        return sum(1 for tag, _ in self.lines if tag == DEL)

    def to_dict(self) -> dict:
        return {
            "old_start": self.old_start,
            "old_len": self.old_len,
            "new_start": self.new_start,
            "new_len": self.new_len,
            "lines": [[tag, text] for tag, text in self.lines],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Hunk":
        return cls(
            old_start=data["old_start"],
            old_len=data["old_len"],
            new_start=data["new_start"],
            new_len=data["new_len"],
            lines=[(tag, text) for tag, text in data["lines"]],
        )


@dataclass
class FileDiff:
    """All changes to one file within a change.

    ``old_path`` is ``None`` for added files, ``new_path`` is ``None`` for
    deleted files. Binary files carry no hunks.
    """

    old_path: str | None
    new_path: str | None
    kind: str
    hunks: list[Hunk] = field(default_factory=list)
    binary: bool = False

    def validate(self) -> None:
        if self.kind not in FILE_KINDS:
            raise ValueError(f"unknown file kind {self.kind!r}")
        if self.old_path is None and self.new_path is None:
            raise ValueError("file diff needs at least one path")
        if self.kind == ADDED and self.old_path is not None:
            raise ValueError("added file must not have an old path")
        if self.kind == DELETED and self.new_path is not None:
            raise ValueError("deleted file must not have a new path")
        if self.kind in (MODIFIED, RENAMED) and (
            self.old_path is None or self.new_path is None
        ):
            raise ValueError(f"{self.kind} file needs both paths")
        if self.binary and self.hunks:
            raise ValueError("binary file diff cannot carry hunks")
        for hunk in self.hunks:
            hunk.validate()

    @property
    def display_path(self) -> str:
        """The path the file is known by after the change."""
        path = self.new_path if self.new_path is not None else self.old_path
        assert path is not None
        return path

    def to_dict(self) -> dict:
        return {
            "old_path": self.old_path,
            "new_path": self.new_path,
            "kind": self.kind,
            "binary": self.binary,
            "hunks": [h.to_dict() for h in self.hunks],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FileDiff":
        return cls(
            old_path=data["old_path"],
            new_path=data["new_path"],
            kind=data["kind"],
            binary=data.get("binary", False),
            hunks=[Hunk.from_dict(h) for h in data.get("hunks", [])],
        )


class _FileBuilder:
    """Accumulates header metadata and hunks for one file entry."""

    def __init__(self, git_old: str | None = None, git_new: str | None = None):
        self.git_old = git_old
        self.git_new = git_new
        self.old_path: str | None = None
        self.new_path: str | None = None
        self.header_seen = False
        self.is_new = False
        self.is_deleted = False
        self.is_rename = False
        self.binary = False
        self.hunks: list[Hunk] = []

    def finish(self) -> FileDiff:
        old_path = self.old_path if self.header_seen else self.git_old
        new_path = self.new_path if self.header_seen else self.git_new
        if self.is_new:
            old_path = None
            new_path = new_path or self.git_new
        if self.is_deleted:
            new_path = None
            old_path = old_path or self.git_old
        if self.is_rename:
            kind = RENAMED
        elif self.is_new or old_path is None:
            kind = ADDED
        elif self.is_deleted or new_path is None:
            kind = DELETED
        elif old_path != new_path:
            kind = RENAMED
        else:
            kind = MODIFIED
        diff = FileDiff(
            old_path=old_path,
            new_path=new_path,
            kind=kind,
            hunks=self.hunks,
            binary=self.binary,
        )
        diff.validate()
        return diff


def _header_path(raw: str) -> str | None:
    """Extract the path from a ``---`` / ``+++`` header body.

    Git appends a tab plus timestamp in some configurations; the path ends
    at the first tab. ``/dev/null`` marks a missing side. Leading ``a/``
    and ``b/`` prefixes are stripped.
    """
    path = raw.split("\t", 1)[0].strip()
    if path == "/dev/null":
        return None
    if path.startswith("a/") or path.startswith("b/"):
        path = path[2:]
    return path


def _strip_binary_label(raw: str) -> str | None:
    return _header_path(raw)


def parse_unified_diff(text: str) -> list[FileDiff]:
    """Parse unified diff text into a list of :class:`FileDiff`.

    Raises :class:`MalformedDiff` with the offending line number when hunk
    headers disagree with their bodies, a hunk is truncated, or a hunk
    appears before any file header.
    """
    lines = text.splitlines()
    files: list[FileDiff] = []
    builder: _FileBuilder | None = None

    def flush() -> None:
        nonlocal builder
        if builder is not None:
            files.append(builder.finish())
            builder = None

    i = 0
    n = len(lines)
    while i < n:
        line = lines[i]
        git_match = RE_DIFF_GIT.match(line)
        if git_match:
            flush()
            builder = _FileBuilder(git_old=git_match.group(1), git_new=git_match.group(2))
            i += 1
            continue
        if line.startswith("--- ") and i + 1 < n and lines[i + 1].startswith("+++ "):
            if builder is None or builder.header_seen or builder.hunks:
                flush()
                builder = _FileBuilder()
            builder.old_path = _header_path(line[4:])
            builder.new_path = _header_path(lines[i + 1][4:])
            builder.header_seen = True
            i += 2
            continue
        hunk_match = RE_HUNK_HEADER.match(line)
        if hunk_match:
            if builder is None:
                raise MalformedDiff(i + 1, "hunk header before any file header")
            old_start = int(hunk_match.group(1))
            old_len = int(hunk_match.group(2)) if hunk_match.group(2) is not None else 1
            new_start = int(hunk_match.group(3))
            new_len = int(hunk_match.group(4)) if hunk_match.group(4) is not None else 1
            hunk, i = _parse_hunk_body(lines, i + 1, old_start, old_len, new_start, new_len)
            builder.hunks.append(hunk)
            continue
        if line.startswith("@@"):
            raise MalformedDiff(i + 1, "malformed hunk header")
        if builder is not None:
            if line.startswith("new file mode"):
                builder.is_new = True
            elif line.startswith("deleted file mode"):
                builder.is_deleted = True
            else:
                rename_from = RE_RENAME_FROM.match(line)
                rename_to = RE_RENAME_TO.match(line)
                binary = RE_BINARY.match(line)
                if rename_from:
                    builder.is_rename = True
                    builder.old_path = rename_from.group(1)
                elif rename_to:
                    builder.is_rename = True
                    builder.new_path = rename_to.group(1)
                elif binary:
                    builder.binary = True
                    if not builder.header_seen:
                        old = _strip_binary_label(binary.group(1))
                        new = _strip_binary_label(binary.group(2))
                        if old is None:
                            builder.is_new = True
                        if new is None:
                            builder.is_deleted = True
                # Other metadata (index, mode, similarity) is ignored.
        i += 1

    flush()
    return files


def _parse_hunk_body(
    lines: list[str],
    start: int,
    old_start: int,
    old_len: int,
    new_start: int,
    new_len: int,
) -> tuple[Hunk, int]:
    """Consume hunk body lines until both header counts are satisfied.

    Returns the hunk and the index of the first line past it. ``\\ No
    newline at end of file`` markers are treated as metadata and dropped.
    """
    body: list[tuple[str, str]] = []
    old_seen = 0
    new_seen = 0
    i = start
    n = len(lines)
    while old_seen < old_len or new_seen < new_len:
        if i >= n:
            raise MalformedDiff(
                n, f"hunk truncated: expected -{old_len},+{new_len} lines"
            )
        line = lines[i]
        if line.startswith("\\"):
            i += 1
            continue
        if line == "":
            # Some tools strip the single space off empty context lines.
            tag, text = CONTEXT, ""
        elif line[0] in _PREFIX_TAG:
            tag, text = _PREFIX_TAG[line[0]], line[1:]
        else:
            raise MalformedDiff(i + 1, f"unexpected line in hunk body: {line[:30]!r}")
        if tag in (CONTEXT, DEL):
            old_seen += 1
            if old_seen > old_len:
                raise MalformedDiff(i + 1, "hunk body longer than old-side count")
        if tag in (CONTEXT, ADD):
            new_seen += 1
            if new_seen > new_len:
                raise MalformedDiff(i + 1, "hunk body longer than new-side count")
        body.append((tag, text))
        i += 1
    # A no-newline marker directly after the last counted line belongs
    # to this hunk.
    if i < n and lines[i].startswith("\\"):
        i += 1
    return Hunk(old_start, old_len, new_start, new_len, body), i


def _iter_file_lines(diff: FileDiff) -> Iterator[str]:
    old_label = f"a/{diff.old_path}" if diff.old_path is not None else "/dev/null"
    new_label = f"b/{diff.new_path}" if diff.new_path is not None else "/dev/null"
    git_old = diff.old_path if diff.old_path is not None else diff.new_path
    git_new = diff.new_path if diff.new_path is not None else diff.old_path
    yield f"diff --git a/{git_old} b/{git_new}"
    if diff.kind == ADDED:
        yield "new file mode 100644"
    elif diff.kind == DELETED:
        yield "deleted file mode 100644"
    elif diff.kind == RENAMED:
        yield f"rename from {diff.old_path}"
        yield f"rename to {diff.new_path}"
    if diff.binary:
        yield f"Binary files {old_label} and {new_label} differ"
        return
    if not diff.hunks:
        return
    yield f"--- {old_label}"
    yield f"+++ {new_label}"
    for hunk in diff.hunks:
        yield (
            f"@@ -{hunk.old_start},{hunk.old_len}"
            f" +{hunk.new_start},{hunk.new_len} @@"
        )
        for tag, text in hunk.lines:
            yield _TAG_PREFIX[tag] + text


def serialize_diff(files: list[FileDiff]) -> str:
    """Render file diffs back to git-style unified diff text."""
    out: list[str] = []
    for diff in files:
        diff.validate()
        out.extend(_iter_file_lines(diff))
    if not out:
        return ""
    return "\n".join(out) + "\n"
