"""The four validation stages: summarize, rank, generate, batch filter."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from patchvet.codectx import PatchContext
from patchvet.corpus.patches import Patch, PatchSeries
from patchvet.errors import PatchvetError, PreconditionError
from patchvet.llmgate import CompletionRequest, Gateway, GatewayError, StructuredOutputError
from patchvet.rulegen.models import Rule
from patchvet.rulestore import query
from patchvet.validate.models import (
    RULE_BASED,
    RULE_FREE,
    ChangeSummary,
    FilteredIssue,
    Issue,
    ValidationReport,
)

log = logging.getLogger(__name__)

DEFAULT_TOP_R = 25
BATCH_FILTER_REASONS = ("resolved-by-later-patch", "duplicate", "not-applicable")
MAX_DIFF_CHARS_IN_SERIES = 4000


class ValidationError(PatchvetError):
    pass


def render_rules(rules: Sequence[Rule]) -> str:
    if not rules:
        return "(none)"
    return "\n".join(f"[{r.rule_id}] ({r.category.value}) {' '.join(r.content.split())}" for r in rules)


def summarize_changes(patch: Patch, context: PatchContext, gateway: Gateway) -> ChangeSummary:
    if not patch.diff:
        raise PreconditionError(f"patch {patch.message_id} has no diff hunks")
    request = CompletionRequest(
        "validate_summarize",
        {
            "subject": patch.subject,
            "patch_id": patch.message_id,
            "commit_message": patch.commit_message,
            "diff": patch.diff_text,
            "context": context.render(),
        },
    )
    try:
        doc = gateway.complete_structured(request, {"summary": "str", "symbols": "list?"})
    except (GatewayError, StructuredOutputError) as exc:
        raise ValidationError(f"summarize failed for {patch.message_id}: {exc}") from exc
    known = patch.body + "\n" + "\n".join(e.text for e in context.excerpts)
    symbols: dict[str, None] = {}
    for s in doc.get("symbols") or []:
        s = str(s).strip()
        if s and s in known:
            symbols.setdefault(s)
    return ChangeSummary(patch.message_id, doc["summary"].strip(), tuple(symbols), tuple(patch.files))


@dataclass(frozen=True)
class Ranking:
    rules: tuple[Rule, ...]
    fallback: bool = False


def rank_rules(
    summary: ChangeSummary,
    rules: Sequence[Rule],
    context: PatchContext | None,
    gateway: Gateway,
    top_r: int = DEFAULT_TOP_R,
) -> Ranking:
    """Top-*top_r* rules for this patch, most relevant first. *context* may be
    None to rank from the summary alone."""
    if not rules:
        raise PreconditionError("cannot rank an empty rule set")
    if top_r < 1:
        raise PreconditionError("top_r must be >= 1")
    by_id = {r.rule_id: r for r in rules}
    request = CompletionRequest(
        "validate_rank",
        {
            "summary": summary.summary,
            "context": context.render() if context is not None else "(omitted)",
            "top_r": str(top_r),
            "rules": render_rules(list(by_id.values())),
        },
    )

    def ids_are_strings(doc):
        bad = [x for x in doc["ranking"] if not isinstance(x, str)]
        return [f"ranking entries must be rule id strings, got {bad[:3]!r}"] if bad else []

    try:
        doc = gateway.complete_structured(request, {"ranking": "list"}, ids_are_strings)
    except (GatewayError, StructuredOutputError) as exc:
        log.warning("rule ranking fell back to diversity order: %s", exc)
        return Ranking(tuple(query(rules)[:top_r]), fallback=True)
    ranked: dict[str, None] = {}
    for rid in doc["ranking"]:
        rid = rid.strip().strip("[]")
        if rid in by_id:
            ranked.setdefault(rid)
    if not ranked:
        log.warning("ranking named no known rule; using diversity order")
        return Ranking(tuple(query(rules)[:top_r]), fallback=True)
    return Ranking(tuple(by_id[r] for r in list(ranked)[:top_r]))


@dataclass
class IssueBatch:
    issues: list[Issue] = field(default_factory=list)
    rejected: list[tuple[str, str]] = field(default_factory=list)  # (title, reason)
    warnings: list[str] = field(default_factory=list)


def _issue_request(patch, summary, ranked, context, mode, temperature, n) -> CompletionRequest:
    variables = {
        "patch_id": patch.message_id,
        "subject": patch.subject,
        "summary": summary.summary if summary else "(not available)",
        "patch": patch.body,
        "context": context.render() if context is not None else "(no source context)",
    }
    template = "validate_issues_free"
    if mode == RULE_BASED:
        template = "validate_issues"
        variables["rules"] = render_rules(ranked)
    return CompletionRequest(template, variables, temperature=temperature, candidate_count=n)


def parse_issues(doc: dict, patch: Patch, ranked: Sequence[Rule], mode: str) -> IssueBatch:
    """Turn a model answer into Issues, enforcing the citation gate."""
    by_id = {r.rule_id: r for r in ranked}
    out = IssueBatch()
    for item in doc.get("issues") or []:
        if not isinstance(item, dict):
            out.rejected.append(("", "not an object"))
            continue
        title = " ".join(str(item.get("title") or "").split())
        description = str(item.get("description") or "").strip()
        if not title:
            out.rejected.append((title, "missing title"))
            continue
        rules_used: tuple[Rule, ...] = ()
        if mode == RULE_BASED:
            cited = [str(c).strip().strip("[]") for c in item.get("rules") or []]
            unknown = [c for c in cited if c not in by_id]
            if unknown:
                out.rejected.append((title, f"cites unknown rule(s) {', '.join(unknown)}"))
                log.warning("dropped issue %r on %s: cites unknown rules %s", title, patch.message_id, unknown)
                continue
            if not cited:
                out.rejected.append((title, "cites no rule"))
                log.warning("dropped issue %r on %s: cites no rule", title, patch.message_id)
                continue
            rules_used = tuple(by_id[c] for c in dict.fromkeys(cited))
        excerpt = item.get("code_excerpt")
        excerpt = str(excerpt).strip("\n") if excerpt else None
        if excerpt and excerpt not in patch.body:
            out.warnings.append(f"{patch.message_id}: excerpt of {title!r} is not in the patch; dropped it")
            excerpt = None
        severity = item.get("severity")
        out.issues.append(
            Issue(title, description, excerpt or None, patch.message_id, rules_used, str(severity) if severity else None)
        )
    return out


def generate_issue_sets(
    patch: Patch,
    ranked: Sequence[Rule],
    context: PatchContext | None,
    gateway: Gateway,
    mode: str = RULE_BASED,
    summary: ChangeSummary | None = None,
    n: int = 1,
    temperature: float = 0.0,
) -> list[IssueBatch]:
    """*n* independent issue sets for *patch* from one multi-candidate call."""
    if mode not in (RULE_BASED, RULE_FREE):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == RULE_BASED and not ranked:
        return [IssueBatch(warnings=["no rules available; rule-based review yields no issues"]) for _ in range(n)]
    request = _issue_request(patch, summary, ranked, context, mode, temperature, n)
    try:
        docs = gateway.complete_structured_candidates(request, {"issues": "list"})
    except (GatewayError, StructuredOutputError) as exc:
        log.warning("issue generation failed for %s: %s", patch.message_id, exc)
        return [IssueBatch(warnings=[f"{patch.message_id}: issue generation failed: {exc}"]) for _ in range(n)]
    batches = [parse_issues(doc, patch, ranked, mode) for doc in docs]
    while len(batches) < n:  # truncated provider answer
        batches.append(IssueBatch(warnings=[f"{patch.message_id}: provider returned fewer candidates"]))
    return batches


def generate_issues(
    patch: Patch,
    ranked: Sequence[Rule],
    context: PatchContext | None,
    gateway: Gateway,
    mode: str = RULE_BASED,
    summary: ChangeSummary | None = None,
    temperature: float = 0.0,
) -> IssueBatch:
    return generate_issue_sets(patch, ranked, context, gateway, mode, summary, 1, temperature)[0]


def _series_listing(series: PatchSeries) -> str:
    blocks = []
    total = len(series.patches)
    for i, p in enumerate(series.patches, 1):
        diff = p.diff_text
        if len(diff) > MAX_DIFF_CHARS_IN_SERIES:
            diff = diff[:MAX_DIFF_CHARS_IN_SERIES] + "\n[...]"
        blocks.append(f"Patch {i}/{total} <{p.message_id}>: {p.subject}\n{p.commit_message}\n{diff.strip()}")
    return "\n\n".join(blocks)


def _issue_listing(issues: Sequence[Issue], order: dict[str, int]) -> str:
    lines = []
    for i, issue in enumerate(issues, 1):
        where = order.get(issue.patch_message_id, 0)
        lines.append(f"{i}. [patch {where}] {issue.title}\n   {' '.join(issue.description.split())}")
    return "\n".join(lines)


def batch_filter(
    series: PatchSeries,
    issues: Sequence[Issue],
    gateway: Gateway,
    *,
    rule_set_digest: str = "",
    config: dict | None = None,
    warnings: Sequence[str] = (),
) -> ValidationReport:
    """Drop issues the series as a whole makes moot. Fails open."""
    order = {p.message_id: i for i, p in enumerate(series.patches, 1)}
    stray = [i.patch_message_id for i in issues if i.patch_message_id not in order]
    if stray:
        raise PreconditionError(f"issues from patches outside the series: {sorted(set(stray))}")
    base = dict(series_id=series.series_id, rule_set_digest=rule_set_digest, config=dict(config or {}))
    if not issues:
        return ValidationReport(warnings=tuple(warnings), **base)
    request = CompletionRequest(
        "validate_batch_filter", {"series": _series_listing(series), "issues": _issue_listing(issues, order)}
    )
    try:
        doc = gateway.complete_structured(request, {"remove": "list"})
    except (GatewayError, StructuredOutputError) as exc:
        log.warning("batch filter failed, keeping all issues: %s", exc)
        return ValidationReport(
            issues=tuple(issues),
            unfiltered=True,
            warnings=tuple(warnings) + (f"batch filter unavailable: {exc}",),
            **base,
        )
    drop: dict[int, str] = {}
    for item in doc["remove"]:
        try:
            idx, reason = int(item["index"]) - 1, str(item["reason"])
        except (KeyError, TypeError, ValueError):
            continue
        if 0 <= idx < len(issues) and reason in BATCH_FILTER_REASONS:
            drop.setdefault(idx, reason)
    kept = tuple(i for n, i in enumerate(issues) if n not in drop)
    gone = tuple(FilteredIssue(issues[n], r) for n, r in sorted(drop.items()))
    return ValidationReport(issues=kept, filtered=gone, warnings=tuple(warnings), **base)
