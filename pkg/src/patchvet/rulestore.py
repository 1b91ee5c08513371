"""Versioned rule-set files.

A rule-set file is UTF-8 JSON lines: one metadata document, then one
document per rule. Keys are sorted so files diff cleanly.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from patchvet.errors import PatchvetError
from patchvet.rulegen.models import Category, Rule, Source, compute_diversity_level

SCHEMA_VERSION = 1


class RuleStoreError(PatchvetError):
    pass


class SchemaVersionError(RuleStoreError):
    def __init__(self, found):
        super().__init__(f"unsupported rule-set schema_version {found!r} (this reader knows {SCHEMA_VERSION})")
        self.found = found


class RuleInvariantError(RuleStoreError):
    def __init__(self, rule_id: str, problems: list[str]):
        super().__init__(f"rule {rule_id} violates invariants: {'; '.join(problems)}")
        self.rule_id = rule_id
        self.problems = problems


def default_created_at() -> datetime:
    """Current UTC time, or SOURCE_DATE_EPOCH when set for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return datetime.fromtimestamp(int(epoch), timezone.utc)
    return datetime.now(timezone.utc).replace(microsecond=0)


@dataclass(frozen=True)
class RuleSetSnapshot:
    rules: tuple[Rule, ...] = ()
    generation_config_digest: str = ""
    created_at: datetime = field(default_factory=default_created_at)
    schema_version: int = SCHEMA_VERSION

    @property
    def digest(self) -> str:
        """Content digest over the rules only, independent of metadata."""
        h = hashlib.sha256()
        for rule in self.rules:
            h.update(_dumps(rule_to_doc(rule)).encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()

    def by_id(self) -> dict[str, Rule]:
        return {r.rule_id: r for r in self.rules}


def _dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(", ", ": "))


def rule_to_doc(rule: Rule) -> dict:
    return {
        "content": rule.content,
        "category": rule.category.value,
        "sources": [{"message_id": s.message_id, "author": s.author} for s in sorted(rule.sources)],
        "history": list(rule.history),
        "diversity_level": rule.diversity_level,
    }


def rule_from_doc(doc: dict, line_no: int = 0) -> Rule:
    try:
        rule = Rule(
            content=doc["content"],
            category=Category(doc["category"]),
            sources=frozenset(Source(s["message_id"], s["author"]) for s in doc["sources"]),
            history=tuple(doc.get("history", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise RuleStoreError(f"line {line_no}: malformed rule document: {exc}") from exc
    problems = rule.problems()
    if problems:
        raise RuleInvariantError(rule.rule_id, problems)
    stored = doc.get("diversity_level")
    if stored is not None and not math.isclose(stored, rule.diversity_level, rel_tol=0, abs_tol=1e-9):
        raise RuleInvariantError(
            rule.rule_id, [f"stored diversity_level {stored} != derived {rule.diversity_level}"]
        )
    return rule


def check_rule(rule: Rule) -> None:
    problems = rule.problems()
    if not problems:
        try:
            compute_diversity_level(rule.nr_authors, rule.nr_msgid)
        except ValueError as exc:
            problems = [str(exc)]
    if problems:
        raise RuleInvariantError(rule.rule_id, problems)


def save(snapshot: RuleSetSnapshot, path: str | Path) -> Path:
    for rule in snapshot.rules:
        check_rule(rule)
    header = {
        "schema_version": snapshot.schema_version,
        "created_at": snapshot.created_at.isoformat(),
        "generation_config_digest": snapshot.generation_config_digest,
        "rule_count": len(snapshot.rules),
    }
    lines = [_dumps(header)] + [_dumps(rule_to_doc(r)) for r in snapshot.rules]
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    tmp.replace(path)
    return path


def load(path: str | Path) -> RuleSetSnapshot:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise RuleStoreError(f"{path}: empty rule-set file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise RuleStoreError(f"{path}: bad header: {exc}") from exc
    if header.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionError(header.get("schema_version"))
    rules = []
    for no, line in enumerate(lines[1:], 2):
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RuleStoreError(f"{path}:{no}: {exc}") from exc
        rules.append(rule_from_doc(doc, no))
    count = header.get("rule_count")
    if count is not None and count != len(rules):
        raise RuleStoreError(f"{path}: header says {count} rules, found {len(rules)}")
    return RuleSetSnapshot(
        rules=tuple(rules),
        generation_config_digest=header.get("generation_config_digest", ""),
        created_at=datetime.fromisoformat(header["created_at"]),
        schema_version=SCHEMA_VERSION,
    )


def query(
    snapshot: RuleSetSnapshot | Iterable[Rule],
    category: Category | str | None = None,
    text: str | None = None,
) -> list[Rule]:
    """Rules matching *category* and containing *text* (case-insensitive),
    by diversity level descending, then content."""
    rules = snapshot.rules if isinstance(snapshot, RuleSetSnapshot) else tuple(snapshot)
    if category is not None:
        category = Category(category)
        rules = [r for r in rules if r.category is category]
    if text:
        needle = " ".join(text.lower().split())
        rules = [r for r in rules if needle in " ".join(r.content.lower().split())]
    return sorted(rules, key=lambda r: (-r.diversity_level, r.content))
