"""The four rule-generation stages: extract, filter, categorize, consolidate."""

from __future__ import annotations

import logging
from typing import Sequence

from patchvet.corpus.threads import DiscussionThread
from patchvet.errors import PatchvetError
from patchvet.llmgate import CompletionRequest, Gateway, GatewayError, StructuredOutputError
from patchvet.rulegen.audit import AuditLog
from patchvet.rulegen.models import MERGE_THRESHOLD, Category, RawRule, Rule, Source, normalize_ws

log = logging.getLogger(__name__)

FILTER_REASONS = ("vague", "redundant", "overlapping", "communication-convention")
MAX_BODY_CHARS = 6000
MERGE_CANDIDATES_PER_PROMPT = 30

_NULL_AUDIT = AuditLog()


class RuleStageError(PatchvetError):
    def __init__(self, stage: str, thread_id: str, cause: Exception):
        super().__init__(f"{stage} failed for thread {thread_id}: {cause}")
        self.stage = stage
        self.thread_id = thread_id


def thread_transcript(thread: DiscussionThread) -> str:
    blocks = []
    for m in thread.members:
        body = m.body.strip()
        if len(body) > MAX_BODY_CHARS:
            body = body[:MAX_BODY_CHARS] + "\n[...]"
        parent = thread.reply_edges.get(m.message_id)
        head = f"[message-id: {m.message_id}]\nFrom: {m.author}\nSubject: {m.subject}"
        if parent:
            head += f"\nIn reply to: {parent}"
        blocks.append(f"{head}\n\n{body}")
    return "\n\n=====\n\n".join(blocks)


def numbered(items: Sequence[str]) -> str:
    return "\n".join(f"{i}. {normalize_ws(text)}" for i, text in enumerate(items, 1))


def extract_rules(thread: DiscussionThread, gateway: Gateway, audit: AuditLog | None = None) -> list[RawRule]:
    """Ask the model for rules discussed in *thread*, keeping only provenance
    that points at messages of this thread."""
    audit = audit or _NULL_AUDIT
    if not thread.replies:
        return []
    request = CompletionRequest(
        "rule_extract", {"thread_id": thread.root_id, "transcript": thread_transcript(thread)}
    )
    try:
        doc = gateway.complete_structured(request, {"rules": "list"})
    except (GatewayError, StructuredOutputError) as exc:
        raise RuleStageError("extract", thread.root_id, exc) from exc

    authors = {m.message_id: m.author for m in thread.members}
    out = []
    for item in doc["rules"]:
        if not isinstance(item, dict):
            continue
        content = str(item.get("content") or "").strip()
        ids = [str(i).strip("<> ") for i in item.get("message_ids") or []]
        sources = frozenset(Source(i, authors[i]) for i in ids if i in authors)
        if not normalize_ws(content) or not sources:
            audit.record("extract", "dropped", thread=thread.root_id, content=content, cited=ids)
            continue
        out.append(RawRule(content, sources))
    audit.record("extract", "extracted", thread=thread.root_id, count=len(out))
    return out


def _batches(seq, size):
    for i in range(0, len(seq), size):
        yield seq[i : i + size]


def filter_rules(
    rules: Sequence[RawRule], gateway: Gateway, batch_size: int = 20, audit: AuditLog | None = None
) -> list[RawRule]:
    """Drop non-substantive rules. A batch whose verdict cannot be obtained
    passes through unfiltered."""
    audit = audit or _NULL_AUDIT
    kept: list[RawRule] = []
    for batch in _batches(list(rules), batch_size):
        request = CompletionRequest("rule_filter", {"rules": numbered([r.content for r in batch])})
        try:
            doc = gateway.complete_structured(request, {"remove": "list"})
        except (GatewayError, StructuredOutputError) as exc:
            log.warning("filter batch kept unfiltered: %s", exc)
            audit.record("filter", "unfiltered-batch", size=len(batch), error=str(exc))
            kept.extend(batch)
            continue
        drop: dict[int, str] = {}
        for item in doc["remove"]:
            try:
                idx, reason = int(item["index"]), str(item["reason"])
            except (KeyError, TypeError, ValueError):
                continue
            if 1 <= idx <= len(batch) and reason in FILTER_REASONS:
                drop.setdefault(idx - 1, reason)
            else:
                audit.record("filter", "ignored-verdict", verdict=item)
        for i, rule in enumerate(batch):
            if i in drop:
                audit.record("filter", "removed", content=rule.content, reason=drop[i])
            else:
                kept.append(rule)
    return kept


def categorize_rules(
    rules: Sequence[RawRule], gateway: Gateway, batch_size: int = 20, audit: AuditLog | None = None
) -> list[Rule]:
    """Assign Logic or Convention to each rule; unplaceable rules default to Logic."""
    audit = audit or _NULL_AUDIT
    out: list[Rule] = []
    for batch in _batches(list(rules), batch_size):
        request = CompletionRequest("rule_categorize", {"rules": numbered([r.content for r in batch])})
        verdicts: dict[int, Category] = {}
        try:
            doc = gateway.complete_structured(request, {"categories": "list"})
            for item in doc["categories"]:
                try:
                    idx, cat = int(item["index"]) - 1, Category(str(item["category"]).strip().capitalize())
                except (KeyError, TypeError, ValueError):
                    continue
                if 0 <= idx < len(batch):
                    verdicts.setdefault(idx, cat)
        except (GatewayError, StructuredOutputError) as exc:
            log.warning("categorize batch failed: %s", exc)
        for i, raw in enumerate(batch):
            cat = verdicts.get(i)
            if cat is None:
                audit.record("categorize", "defaulted", content=raw.content, category=Category.LOGIC.value)
                cat = Category.LOGIC
            out.append(Rule.from_raw(raw, cat))
    counts = {c.value: sum(1 for r in out if r.category is c) for c in Category}
    audit.record("categorize", "counts", **counts)
    return out


def merge_pair(target: Rule, incoming: Rule, merged_content: str) -> Rule:
    return Rule(
        content=merged_content.strip(),
        category=target.category,
        sources=target.sources | incoming.sources,
        history=target.history + incoming.history + (target.content, incoming.content),
    )


def consolidate_rules(
    existing: Sequence[Rule],
    incoming: Sequence[Rule],
    gateway: Gateway,
    threshold: float = MERGE_THRESHOLD,
    audit: AuditLog | None = None,
) -> list[Rule]:
    """Fold *incoming* into *existing*.

    Only rules below *threshold* diversity are merge sources or targets,
    and only within one category. Any failure while asking about a merge
    leaves the rules unmerged.
    """
    audit = audit or _NULL_AUDIT
    current = list(existing)
    for rule in incoming:
        if not rule.mergeable(threshold):
            current.append(rule)
            audit.record("consolidate", "kept-high-diversity", content=rule.content, diversity=rule.diversity_level)
            continue
        slots = [i for i, r in enumerate(current) if r.category is rule.category and r.mergeable(threshold)]
        merged = False
        for chunk in _batches(slots, MERGE_CANDIDATES_PER_PROMPT):
            match = _ask_merge(rule, [current[i] for i in chunk], gateway, audit)
            if match is None:
                continue
            pos, content = chunk[match[0]], match[1]
            target = current[pos]
            current[pos] = merge_pair(target, rule, content)
            audit.record(
                "consolidate",
                "merged",
                target=target.content,
                incoming=rule.content,
                merged=content,
                diversity=current[pos].diversity_level,
            )
            merged = True
            break
        if not merged:
            current.append(rule)
    return current


def _ask_merge(rule: Rule, candidates: list[Rule], gateway: Gateway, audit: AuditLog):
    request = CompletionRequest(
        "rule_merge",
        {
            "category": rule.category.value,
            "rule": normalize_ws(rule.content),
            "candidates": numbered([c.content for c in candidates]),
        },
    )
    try:
        doc = gateway.complete_structured(request, {"match": "int?", "merged_content": "str?"})
    except (GatewayError, StructuredOutputError) as exc:
        audit.record("consolidate", "merge-check-failed", content=rule.content, error=str(exc))
        return None
    idx, content = doc.get("match"), doc.get("merged_content")
    if idx is None:
        return None
    if not (1 <= idx <= len(candidates)) or not content or not normalize_ws(content):
        audit.record("consolidate", "merge-verdict-rejected", content=rule.content, verdict=doc)
        return None
    return idx - 1, content
