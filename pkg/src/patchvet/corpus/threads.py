"""Reply-graph reconstruction over parsed messages."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable

from patchvet.corpus.messages import EmailMessage, references_consistent

log = logging.getLogger(__name__)

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def _order_key(msg: EmailMessage):
    return (msg.date or _EPOCH, msg.message_id)


@dataclass(frozen=True)
class DiscussionThread:
    root_id: str
    members: tuple[EmailMessage, ...]
    reply_edges: dict[str, str] = field(compare=False)

    @property
    def root(self) -> EmailMessage:
        return self.members[0]

    @property
    def replies(self) -> tuple[EmailMessage, ...]:
        return self.members[1:]

    def __len__(self) -> int:
        return len(self.members)

    def children(self, message_id: str) -> list[str]:
        return sorted(c for c, p in self.reply_edges.items() if p == message_id)


@dataclass
class ThreadingReport:
    """Diagnostics collected while threading (never fatal)."""

    cycle_breaks: list[tuple[str, str]] = field(default_factory=list)
    duplicates: list[str] = field(default_factory=list)
    reference_mismatches: list[str] = field(default_factory=list)


def resolve_parent(msg: EmailMessage, known: set[str] | dict) -> str | None:
    """In-Reply-To wins when present in the corpus; otherwise the last
    resolvable References entry."""
    if msg.in_reply_to and msg.in_reply_to in known and msg.in_reply_to != msg.message_id:
        return msg.in_reply_to
    for ref in reversed(msg.references):
        if ref in known and ref != msg.message_id:
            return ref
    return None


def build_threads(
    messages: Iterable[EmailMessage], report: ThreadingReport | None = None
) -> list[DiscussionThread]:
    """Group messages into threads (connected components of the reply graph).

    Messages with an unresolvable parent become roots. Reply cycles are
    broken by dropping the parent edge of the latest-dated message in the
    cycle. Threads are ordered by root date, then root message-id; members
    are ordered root first, then by date and message-id.
    """
    report = report if report is not None else ThreadingReport()
    by_id: dict[str, EmailMessage] = {}
    for msg in messages:
        if msg.message_id in by_id:
            report.duplicates.append(msg.message_id)
            log.warning("duplicate message-id %s ignored", msg.message_id)
            continue
        by_id[msg.message_id] = msg
        if not references_consistent(msg):
            report.reference_mismatches.append(msg.message_id)

    parent: dict[str, str] = {}
    for mid in sorted(by_id):
        p = resolve_parent(by_id[mid], by_id)
        if p is not None:
            parent[mid] = p

    _break_cycles(parent, by_id, report)

    roots: dict[str, str] = {}

    def find_root(mid: str) -> str:
        path = []
        while mid not in roots and mid in parent:
            path.append(mid)
            mid = parent[mid]
        root = roots.get(mid, mid)
        for node in path:
            roots[node] = root
        roots[mid] = root
        return root

    groups: dict[str, list[EmailMessage]] = {}
    for mid in by_id:
        groups.setdefault(find_root(mid), []).append(by_id[mid])

    threads = []
    for root_id, members in groups.items():
        rest = sorted((m for m in members if m.message_id != root_id), key=_order_key)
        edges = {m.message_id: parent[m.message_id] for m in rest}
        threads.append(DiscussionThread(root_id, (by_id[root_id], *rest), edges))
    threads.sort(key=lambda t: _order_key(t.root))
    return threads


def _break_cycles(parent: dict[str, str], by_id: dict[str, EmailMessage], report: ThreadingReport) -> None:
    state: dict[str, int] = {}  # 1 = on current walk, 2 = done
    for start in sorted(parent):
        if state.get(start):
            continue
        walk = []
        node = start
        while node is not None and not state.get(node):
            state[node] = 1
            walk.append(node)
            node = parent.get(node)
        if node is not None and state.get(node) == 1:
            cycle = walk[walk.index(node):]
            victim = max(cycle, key=lambda m: _order_key(by_id[m]))
            report.cycle_breaks.append((victim, parent[victim]))
            log.warning("reply cycle broken at %s -> %s", victim, parent[victim])
            del parent[victim]
        for n in walk:
            state[n] = 2
