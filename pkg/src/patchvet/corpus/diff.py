"""Unified-diff hunk parsing."""

from __future__ import annotations

import re
from dataclasses import dataclass

CONTEXT, ADD, REMOVE = "context", "add", "remove"

HUNK_HEADER = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@ ?(.*)$")
_GIT_HEADER = re.compile(r"^diff --git a/(\S+) b/(\S+)")


@dataclass(frozen=True)
class DiffHunk:
    file_path_old: str
    file_path_new: str
    old_start: int
    old_len: int
    new_start: int
    new_len: int
    section_heading: str | None
    lines: tuple[tuple[str, str], ...]

    @property
    def added(self) -> list[str]:
        return [t for k, t in self.lines if k == ADD]

    @property
    def removed(self) -> list[str]:
        return [t for k, t in self.lines if k == REMOVE]

    def is_consistent(self) -> bool:
        old = sum(1 for k, _ in self.lines if k != ADD)
        new = sum(1 for k, _ in self.lines if k != REMOVE)
        return old == self.old_len and new == self.new_len

    @property
    def path(self) -> str:
        return self.file_path_new if self.file_path_new != "/dev/null" else self.file_path_old


@dataclass(frozen=True)
class DiffDiagnostic:
    line_no: int
    message: str


def _strip_path(raw: str) -> str:
    path = raw.split("\t", 1)[0].strip()
    if path.startswith(("a/", "b/")):
        path = path[2:]
    return path


def is_diff_start(lines: list[str], i: int) -> bool:
    line = lines[i]
    if line.startswith("diff --git ") or line.startswith("Index: "):
        return True
    if HUNK_HEADER.match(line):
        return True
    return line.startswith("--- ") and i + 1 < len(lines) and lines[i + 1].startswith("+++ ")


def parse_hunks(text: str, diagnostics: list[DiffDiagnostic] | None = None) -> list[DiffHunk]:
    """Extract every well-formed hunk from *text*.

    A hunk whose body does not match its declared ranges is skipped and
    reported through *diagnostics*.
    """
    lines = text.splitlines()
    hunks: list[DiffHunk] = []
    old_path = new_path = ""
    i = 0
    while i < len(lines):
        line = lines[i]
        git = _GIT_HEADER.match(line)
        if git:
            old_path, new_path = git.group(1), git.group(2)
            i += 1
            continue
        if line.startswith("--- ") and i + 1 < len(lines) and lines[i + 1].startswith("+++ "):
            old_path = _strip_path(line[4:])
            new_path = _strip_path(lines[i + 1][4:])
            i += 2
            continue
        if not line.startswith("@@"):
            i += 1
            continue

        m = HUNK_HEADER.match(line)
        if not m:
            _note(diagnostics, i, f"malformed hunk header: {line!r}")
            i += 1
            continue
        old_start, new_start = int(m.group(1)), int(m.group(3))
        old_len = int(m.group(2)) if m.group(2) is not None else 1
        new_len = int(m.group(4)) if m.group(4) is not None else 1
        heading = m.group(5).strip() or None
        header_line = i
        i += 1

        body: list[tuple[str, str]] = []
        old_seen = new_seen = 0
        ok = True
        while old_seen < old_len or new_seen < new_len:
            if i >= len(lines):
                ok = False
                break
            cur = lines[i]
            if cur.startswith("\\"):
                i += 1
                continue
            tag = cur[:1]
            if tag == "+":
                body.append((ADD, cur[1:]))
                new_seen += 1
            elif tag == "-":
                body.append((REMOVE, cur[1:]))
                old_seen += 1
            elif tag == " " or cur == "":
                body.append((CONTEXT, cur[1:]))
                old_seen += 1
                new_seen += 1
            else:
                ok = False
                break
            if old_seen > old_len or new_seen > new_len:
                ok = False
                break
            i += 1
        while i < len(lines) and lines[i].startswith("\\"):
            i += 1

        if not ok:
            _note(diagnostics, header_line, "hunk body does not match its declared ranges")
            continue
        hunks.append(
            DiffHunk(old_path, new_path, old_start, old_len, new_start, new_len, heading, tuple(body))
        )
    return hunks


def _note(diagnostics, line_no, message):
    if diagnostics is not None:
        diagnostics.append(DiffDiagnostic(line_no, message))
