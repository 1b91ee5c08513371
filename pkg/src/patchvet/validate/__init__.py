from patchvet.validate.models import (
    RULE_BASED,
    RULE_FREE,
    ChangeSummary,
    FilteredIssue,
    Issue,
    ValidationReport,
)
from patchvet.validate.pipeline import ValidationConfig, review_patch, validate_series
from patchvet.validate.report import render_report, report_json
from patchvet.validate.stages import (
    BATCH_FILTER_REASONS,
    IssueBatch,
    Ranking,
    ValidationError,
    batch_filter,
    generate_issue_sets,
    generate_issues,
    rank_rules,
    summarize_changes,
)

__all__ = [
    "BATCH_FILTER_REASONS",
    "RULE_BASED",
    "RULE_FREE",
    "ChangeSummary",
    "FilteredIssue",
    "Issue",
    "IssueBatch",
    "Ranking",
    "ValidationConfig",
    "ValidationError",
    "ValidationReport",
    "batch_filter",
    "generate_issue_sets",
    "generate_issues",
    "rank_rules",
    "render_report",
    "report_json",
    "review_patch",
    "summarize_changes",
    "validate_series",
]
