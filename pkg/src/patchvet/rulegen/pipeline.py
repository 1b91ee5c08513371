"""Streaming rule generation over discussion threads."""

from __future__ import annotations

import csv
import logging
import random
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence, TextIO

from patchvet.corpus.threads import DiscussionThread
from patchvet.llmgate import Gateway
from patchvet.rulegen.audit import AuditLog
from patchvet.rulegen.models import MERGE_THRESHOLD, Category, Rule
from patchvet.rulegen.stages import (
    RuleStageError,
    categorize_rules,
    consolidate_rules,
    extract_rules,
    filter_rules,
)

log = logging.getLogger(__name__)

PROGRESS_COLUMNS = [
    "thread_index",
    "extracted",
    "filtered",
    "logic",
    "convention",
    "consolidated_logic",
    "consolidated_convention",
]


@dataclass(frozen=True)
class ProgressRow:
    thread_index: int
    extracted: int
    filtered: int
    logic: int
    convention: int
    consolidated_logic: int
    consolidated_convention: int


class RuleGenerator:
    """Runs extract -> filter -> categorize -> consolidate thread by thread.

    Counts in each :class:`ProgressRow` are cumulative, so the last row is
    the stage profile of the whole run.
    """

    def __init__(
        self,
        gateway: Gateway,
        batch_size: int = 20,
        merge_threshold: float = MERGE_THRESHOLD,
        audit: AuditLog | None = None,
        rules: Sequence[Rule] = (),
    ):
        self.gateway = gateway
        self.batch_size = batch_size
        self.merge_threshold = merge_threshold
        self.audit = audit or AuditLog()
        self.rules: list[Rule] = list(rules)
        self.rows: list[ProgressRow] = []
        self.failed_threads: list[str] = []
        self._totals = dict(extracted=0, filtered=0, logic=0, convention=0)

    def process(self, thread: DiscussionThread) -> ProgressRow:
        try:
            raw = extract_rules(thread, self.gateway, self.audit)
        except RuleStageError as exc:
            log.warning("%s", exc)
            self.audit.record("extract", "thread-failed", thread=thread.root_id, error=str(exc))
            self.failed_threads.append(thread.root_id)
            raw = []
        kept = filter_rules(raw, self.gateway, self.batch_size, self.audit) if raw else []
        categorized = categorize_rules(kept, self.gateway, self.batch_size, self.audit) if kept else []
        self.rules = consolidate_rules(self.rules, categorized, self.gateway, self.merge_threshold, self.audit)

        t = self._totals
        t["extracted"] += len(raw)
        t["filtered"] += len(kept)
        t["logic"] += sum(1 for r in categorized if r.category is Category.LOGIC)
        t["convention"] += sum(1 for r in categorized if r.category is Category.CONVENTION)
        row = ProgressRow(
            thread_index=len(self.rows) + 1,
            consolidated_logic=sum(1 for r in self.rules if r.category is Category.LOGIC),
            consolidated_convention=sum(1 for r in self.rules if r.category is Category.CONVENTION),
            **t,
        )
        self.rows.append(row)
        return row

    def run(self, threads: Iterable[DiscussionThread]) -> list[Rule]:
        for thread in threads:
            self.process(thread)
        return self.rules


def write_progress_csv(rows: Sequence[ProgressRow], out: TextIO, config_digest: str = "") -> None:
    out.write(f"# config-digest: {config_digest}\n")
    writer = csv.DictWriter(out, PROGRESS_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(asdict(row))


def sample_for_audit(rules: Sequence[Rule], n: int = 50, seed: int = 0) -> list[Rule]:
    ordered = sorted(rules, key=lambda r: (r.category.value, r.content))
    return random.Random(seed).sample(ordered, min(n, len(ordered)))


def audit_checklist(rules: Sequence[Rule]) -> str:
    """Markdown checklist for a manual validity review of sampled rules."""
    lines = [
        "# Rule validity review",
        "",
        "Keep a rule only if it guides a developer on how to use a specific",
        "feature to implement a particular function.",
        "",
    ]
    for i, r in enumerate(rules, 1):
        lines.append(f"## {i}. {r.rule_id} ({r.category.value}, diversity {r.diversity_level:.2f})")
        lines.append("")
        lines.append(r.content)
        lines.append("")
        lines.append("- [ ] valid")
        lines.append("- [ ] invalid, reason: ")
        lines.append("")
    return "\n".join(lines)
