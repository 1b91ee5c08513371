"""Patch proposals, series, and buggy/fix pairs."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable

from patchvet.corpus.diff import DiffDiagnostic, DiffHunk, is_diff_start, parse_hunks
from patchvet.corpus.messages import EmailMessage
from patchvet.errors import PreconditionError

_BRACKET = re.compile(r"\[([^\]]*)\]")
_INDEX = re.compile(r"(\d+)\s*/\s*(\d+)")


@dataclass(frozen=True)
class Patch:
    message_id: str
    subject: str
    author: str
    date: datetime | None
    commit_message: str
    diff: tuple[DiffHunk, ...]
    series_index: tuple[int, int] | None
    body: str

    @property
    def text(self) -> str:
        return self.body

    @property
    def diff_text(self) -> str:
        """The body from the '---' separator or first diff line onward."""
        lines = self.body.splitlines()
        for i, line in enumerate(lines):
            if line.rstrip() == "---" or is_diff_start(lines, i):
                return "\n".join(lines[i:])
        return ""

    @property
    def files(self) -> list[str]:
        seen: dict[str, None] = {}
        for h in self.diff:
            seen.setdefault(h.path)
        return list(seen)

    @property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.commit_message.encode())
        h.update(b"\0")
        h.update(self.body.encode())
        return h.hexdigest()

    @property
    def title(self) -> str:
        return strip_subject_tags(self.subject)


@dataclass(frozen=True)
class CoverLetter:
    message: EmailMessage
    total: int

    @property
    def message_id(self) -> str:
        return self.message.message_id


@dataclass(frozen=True)
class PatchSeries:
    cover_letter: CoverLetter | None
    patches: tuple[Patch, ...]

    @property
    def series_id(self) -> str:
        if self.cover_letter is not None:
            return self.cover_letter.message_id
        return self.patches[0].message_id if self.patches else ""


@dataclass(frozen=True)
class PatchPair:
    buggy: Patch
    fix: Patch
    label: str

    def __post_init__(self):
        if self.buggy.message_id == self.fix.message_id:
            raise PreconditionError("buggy and fix patch must be distinct messages")


def series_index(subject: str) -> tuple[int, int] | None:
    """Parse ``[PATCH v3 2/7]``-style tags. Returns (index, total)."""
    for tag in _BRACKET.findall(subject):
        upper = tag.upper()
        if "PATCH" not in upper and "RFC" not in upper:
            continue
        m = _INDEX.search(tag)
        if m:
            return int(m.group(1)), int(m.group(2))
    return None


def strip_subject_tags(subject: str) -> str:
    s = re.sub(r"^\s*(re:\s*)+", "", subject, flags=re.I)
    return _BRACKET.sub("", s, count=0).strip()


def split_commit_message(body: str) -> str:
    """Body text before the first '---' separator or diff marker."""
    lines = body.splitlines()
    for i, line in enumerate(lines):
        if line.rstrip() == "---" or is_diff_start(lines, i):
            return "\n".join(lines[:i]).strip()
    return body.strip()


def parse_patch(
    message: EmailMessage, diagnostics: list[DiffDiagnostic] | None = None
) -> Patch | CoverLetter | None:
    """Classify a message as a patch, a cover letter, or neither."""
    index = series_index(message.subject)
    saw_header = any(line.startswith("@@") for line in message.body.splitlines())
    hunks = parse_hunks(message.body, diagnostics)
    if hunks:
        return Patch(
            message_id=message.message_id,
            subject=message.subject,
            author=message.author,
            date=message.date,
            commit_message=split_commit_message(message.body),
            diff=tuple(hunks),
            series_index=index,
            body=message.body,
        )
    if index is not None and index[0] == 0 and not saw_header:
        return CoverLetter(message, index[1])
    return None


def is_patch_subject(subject: str) -> bool:
    return any("PATCH" in tag.upper() for tag in _BRACKET.findall(subject))


def assemble_series(messages: Iterable[EmailMessage]) -> PatchSeries:
    cover = None
    patches = []
    for msg in messages:
        item = parse_patch(msg)
        if isinstance(item, CoverLetter) and cover is None:
            cover = item
        elif isinstance(item, Patch):
            patches.append(item)
    if any(p.series_index is not None for p in patches):
        patches.sort(key=lambda p: p.series_index[0] if p.series_index else 0)
    return PatchSeries(cover, tuple(patches))
