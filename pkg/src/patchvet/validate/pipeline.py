"""Per-series validation: stages 1-3 per patch in parallel, then the batch filter."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

from patchvet.codectx import DEFAULT_BUDGET, PatchContext, SymbolIndex, extract_symbols, fetch_context
from patchvet.corpus.patches import Patch, PatchSeries
from patchvet.llmgate import Gateway
from patchvet.rulestore import RuleSetSnapshot
from patchvet.validate.models import RULE_BASED, RULE_FREE, ChangeSummary, ValidationReport
from patchvet.validate.stages import (
    DEFAULT_TOP_R,
    IssueBatch,
    Ranking,
    ValidationError,
    batch_filter,
    generate_issue_sets,
    rank_rules,
    summarize_changes,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ValidationConfig:
    mode: str = RULE_BASED
    top_r: int = DEFAULT_TOP_R
    context_budget: int = DEFAULT_BUDGET
    rank_with_context: bool = True
    temperature: float = 0.0
    concurrency: int = 4

    def __post_init__(self):
        if self.mode not in (RULE_BASED, RULE_FREE):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class PatchReview:
    patch: Patch
    context: PatchContext
    summary: ChangeSummary | None = None
    ranking: Ranking | None = None
    batches: list[IssueBatch] | None = None
    error: str | None = None


def patch_context(patch: Patch, index: SymbolIndex | None, budget: int) -> PatchContext:
    if index is None:
        return PatchContext((), ())
    return fetch_context(extract_symbols(patch), index, budget)


def review_patch(
    patch: Patch,
    snapshot: RuleSetSnapshot | None,
    index: SymbolIndex | None,
    gateway: Gateway,
    config: ValidationConfig = ValidationConfig(),
    n: int = 1,
) -> PatchReview:
    """Stages 1-3 for one patch, producing *n* candidate issue sets."""
    review = PatchReview(patch, patch_context(patch, index, config.context_budget))
    rules = snapshot.rules if snapshot is not None else ()
    if config.mode == RULE_BASED and not rules:
        review.batches = [IssueBatch(warnings=["empty rule set; no rule-based issues possible"]) for _ in range(n)]
        return review
    try:
        review.summary = summarize_changes(patch, review.context, gateway)
    except ValidationError as exc:
        log.warning("%s", exc)
        review.error = str(exc)
        review.batches = [IssueBatch(warnings=[str(exc)]) for _ in range(n)]
        return review
    ranked = ()
    if config.mode == RULE_BASED:
        review.ranking = rank_rules(
            review.summary, rules, review.context if config.rank_with_context else None, gateway, config.top_r
        )
        ranked = review.ranking.rules
    review.batches = generate_issue_sets(
        patch, ranked, review.context, gateway, config.mode, review.summary, n, config.temperature
    )
    return review


def validate_series(
    series: PatchSeries,
    snapshot: RuleSetSnapshot | None,
    index: SymbolIndex | None,
    gateway: Gateway,
    config: ValidationConfig = ValidationConfig(),
) -> ValidationReport:
    with ThreadPoolExecutor(max_workers=max(1, config.concurrency)) as pool:
        reviews = list(pool.map(lambda p: review_patch(p, snapshot, index, gateway, config), series.patches))
    issues, warnings = [], []
    for r in reviews:
        batch = r.batches[0]
        issues.extend(batch.issues)
        warnings.extend(batch.warnings)
        warnings.extend(f"{r.patch.message_id}: rejected issue {t!r}: {why}" for t, why in batch.rejected)
        if r.ranking is not None and r.ranking.fallback:
            warnings.append(f"{r.patch.message_id}: rule ranking used the diversity fallback")
    ids = dict(asdict(config), provider=gateway.provider_name)
    ids.pop("concurrency")
    return batch_filter(
        series,
        issues,
        gateway,
        rule_set_digest=snapshot.digest if snapshot is not None else "",
        config=ids,
        warnings=warnings,
    )
