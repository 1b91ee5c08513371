"""Issue reports produced by patch validation."""

from __future__ import annotations

from dataclasses import dataclass, field

from patchvet.rulegen.models import Rule

RULE_BASED, RULE_FREE = "rule_based", "rule_free"


@dataclass(frozen=True)
class ChangeSummary:
    patch_message_id: str
    summary: str
    touched_symbols: tuple[str, ...]
    touched_files: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class Issue:
    """One finding on one patch.

    Identity (not value) equality, so the batch filter can prove that what
    it keeps is a subset of what it was given.
    """

    title: str
    description: str
    code_excerpt: str | None
    patch_message_id: str
    rules_used: tuple[Rule, ...] = ()
    severity_hint: str | None = None

    def to_doc(self) -> dict:
        return {
            "title": self.title,
            "description": self.description,
            "code_excerpt": self.code_excerpt,
            "patch_message_id": self.patch_message_id,
            "severity_hint": self.severity_hint,
            "rules_used": [
                {
                    "rule_id": r.rule_id,
                    "content": r.content,
                    "category": r.category.value,
                    "sources": [{"message_id": s.message_id, "author": s.author} for s in sorted(r.sources)],
                }
                for r in self.rules_used
            ],
        }


@dataclass(frozen=True)
class FilteredIssue:
    issue: Issue
    reason: str


@dataclass(frozen=True)
class ValidationReport:
    series_id: str
    issues: tuple[Issue, ...] = ()
    filtered: tuple[FilteredIssue, ...] = ()
    rule_set_digest: str = ""
    config: dict = field(default_factory=dict)
    unfiltered: bool = False
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        kept = {id(i) for i in self.issues}
        if any(id(f.issue) in kept for f in self.filtered):
            raise ValueError("an issue cannot be both retained and filtered out")

    def to_doc(self) -> dict:
        return {
            "series_id": self.series_id,
            "rule_set_digest": self.rule_set_digest,
            "config": dict(sorted(self.config.items())),
            "unfiltered": self.unfiltered,
            "warnings": list(self.warnings),
            "issues": [i.to_doc() for i in self.issues],
            "filtered": [dict(f.issue.to_doc(), reason=f.reason) for f in self.filtered],
        }
