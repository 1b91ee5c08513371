"""Plain-text rendering of validation reports."""

from __future__ import annotations

import json

from patchvet.validate.models import Issue, ValidationReport


def _issue_block(n: int, issue: Issue) -> list[str]:
    out = [f"## Issue {n}", "", f"Title: {issue.title}", ""]
    if issue.code_excerpt:
        out += ["```", issue.code_excerpt, "```"]
    out += [f"> message-id: {issue.patch_message_id}", "", "### Issue Content", ""]
    out += [issue.description or "(no description)", "", "### Rules Used", ""]
    if not issue.rules_used:
        out.append("(none)")
    for rule in issue.rules_used:
        out.append(f"- {' '.join(rule.content.split())}")
        for src in sorted(rule.sources):
            out.append(f"  > - message-id: {src.message_id}")
            out.append(f"  > - Author: {src.author}")
    out.append("")
    return out


def render_report(report: ValidationReport) -> str:
    mode = report.config.get("mode", "")
    lines = [f"# Validation report for {report.series_id or '(unknown series)'}", ""]
    if mode:
        lines.append(f"Mode: {mode}")
    if report.rule_set_digest:
        lines.append(f"Rule set: {report.rule_set_digest[:16]}")
    if report.unfiltered:
        lines.append("Batch filter: unavailable, all issues retained")
    if lines[-1] != "":
        lines.append("")
    if not report.issues:
        lines += ["No issues found.", ""]
    for n, issue in enumerate(report.issues, 1):
        lines += _issue_block(n, issue)
    if report.filtered:
        lines += ["## Filtered out", ""]
        lines += [f"- {f.issue.title} ({f.reason})" for f in report.filtered]
        lines.append("")
    return "\n".join(lines)


def report_json(report: ValidationReport) -> str:
    return json.dumps(report.to_doc(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
