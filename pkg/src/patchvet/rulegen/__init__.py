from patchvet.rulegen.audit import AuditLog
from patchvet.rulegen.models import (
    MERGE_THRESHOLD,
    Category,
    RawRule,
    Rule,
    Source,
    compute_diversity_level,
)
from patchvet.rulegen.pipeline import ProgressRow, RuleGenerator, write_progress_csv
from patchvet.rulegen.stages import (
    RuleStageError,
    categorize_rules,
    consolidate_rules,
    extract_rules,
    filter_rules,
)

__all__ = [
    "MERGE_THRESHOLD",
    "AuditLog",
    "Category",
    "ProgressRow",
    "RawRule",
    "Rule",
    "RuleGenerator",
    "RuleStageError",
    "Source",
    "categorize_rules",
    "compute_diversity_level",
    "consolidate_rules",
    "extract_rules",
    "filter_rules",
    "write_progress_csv",
]
