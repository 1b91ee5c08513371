"""Criteria generation and chain-of-thought verification through the gateway."""

from __future__ import annotations

import threading
from typing import Sequence

from patchvet.corpus.patches import Patch
from patchvet.errors import PatchvetError, PreconditionError
from patchvet.gcseval.models import (
    KIND_FIELDS,
    KINDS,
    N_CRITERIA,
    Criterion,
    CriterionJudgment,
    IssueJudgment,
    Rationale,
)
from patchvet.llmgate import CompletionRequest, Gateway, GatewayError, StructuredOutputError
from patchvet.validate.models import Issue

VERIFY_TEMPERATURE = 0.2


class EvalError(PatchvetError):
    pass


class CriteriaCache:
    """Criteria keyed by fix-patch digest, so every judgment of a pair shares them."""

    def __init__(self):
        self._items: dict[str, tuple[Criterion, ...]] = {}
        self._lock = threading.Lock()

    def get(self, digest: str):
        with self._lock:
            return self._items.get(digest)

    def put(self, digest: str, criteria: tuple[Criterion, ...]) -> None:
        with self._lock:
            self._items.setdefault(digest, criteria)

    def __len__(self):
        return len(self._items)


def fix_text(fix: Patch) -> str:
    return f"Subject: {fix.subject}\n\n{fix.commit_message}\n\n{fix.diff_text}".rstrip() + "\n"


def generate_criteria(fix: Patch, gateway: Gateway, cache: CriteriaCache | None = None) -> tuple[Criterion, ...]:
    if not fix.commit_message.strip():
        raise PreconditionError(f"fix patch {fix.message_id} has an empty commit message")
    if cache is not None:
        hit = cache.get(fix.digest)
        if hit is not None:
            return hit
    request = CompletionRequest(
        "gcs_criteria",
        {"subject": fix.subject, "commit_message": fix.commit_message, "diff": fix.diff_text},
    )

    def non_empty(doc):
        return [f"field '{f}' is empty" for f in KIND_FIELDS if not doc[f].strip()]

    try:
        doc = gateway.complete_structured(request, {f: "str" for f in KIND_FIELDS}, non_empty)
    except (GatewayError, StructuredOutputError) as exc:
        raise EvalError(f"criteria generation failed for {fix.message_id}: {exc}") from exc
    criteria = tuple(Criterion(kind, doc[f].strip()) for kind, f in zip(KINDS, KIND_FIELDS))
    if cache is not None:
        cache.put(fix.digest, criteria)
        criteria = cache.get(fix.digest)
    return criteria


def render_criteria(criteria: Sequence[Criterion]) -> str:
    return "\n".join(f"{i}. {c.kind.value}: {c.question}" for i, c in enumerate(criteria, 1))


def render_issues(issues: Sequence[Issue]) -> str:
    blocks = []
    for i, issue in enumerate(issues, 1):
        block = f"Issue {i}: {issue.title}\n{issue.description.strip()}"
        if issue.code_excerpt:
            block += f"\nCode:\n{issue.code_excerpt}"
        blocks.append(block)
    return "\n\n".join(blocks)


def _yes_no(value) -> int | None:
    if isinstance(value, bool):
        return int(value)
    text = str(value).strip().lower()
    if text in ("yes", "y", "true", "1"):
        return 1
    if text in ("no", "n", "false", "0"):
        return 0
    return None


def _confidence(value) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(value, str) and value.strip().isdigit():
        value = int(value.strip())
    if isinstance(value, int) and 1 <= value <= 100:
        return value
    return None


def verification_problems(doc: dict, n_issues: int) -> list[str]:
    """Everything that keeps *doc* from covering every issue x criterion cell."""
    problems = []
    seen = set()
    for item in doc["issues"]:
        if not isinstance(item, dict):
            problems.append("issue entries must be objects")
            continue
        idx = item.get("index")
        if not isinstance(idx, int) or not 1 <= idx <= n_issues:
            problems.append(f"issue index {idx!r} out of range 1..{n_issues}")
            continue
        if idx in seen:
            problems.append(f"issue {idx} judged twice")
        seen.add(idx)
        crits = item.get("criteria")
        if not isinstance(crits, list):
            problems.append(f"issue {idx}: criteria must be a list")
            continue
        numbers = sorted(c.get("criterion") for c in crits if isinstance(c, dict))
        if numbers != list(range(1, N_CRITERIA + 1)):
            problems.append(f"issue {idx}: needs criteria 1-4 exactly once, got {numbers}")
        for c in crits:
            if not isinstance(c, dict):
                continue
            if _yes_no(c.get("match")) is None:
                problems.append(f"issue {idx} criterion {c.get('criterion')}: match must be Yes or No")
            if _confidence(c.get("confidence")) is None:
                problems.append(f"issue {idx} criterion {c.get('criterion')}: confidence must be an integer 1-100")
    missing = sorted(set(range(1, n_issues + 1)) - seen)
    if missing:
        problems.append(f"issues not judged: {missing}")
    return problems


def rationale_from_doc(doc: dict, k: int) -> Rationale:
    judgments = []
    for item in sorted(doc["issues"], key=lambda it: it["index"]):
        crits = sorted(item["criteria"], key=lambda c: c["criterion"])
        judgments.append(
            IssueJudgment(
                issue_index=item["index"] - 1,
                criteria=tuple(
                    CriterionJudgment(_yes_no(c["match"]), _confidence(c["confidence"]), str(c.get("reason") or ""))
                    for c in crits
                ),
                title=str(item.get("title") or ""),
                overall_match=_yes_no(item.get("overall_match")),
                overall_confidence=_confidence(item.get("overall_confidence")),
            )
        )
    return Rationale(k, tuple(judgments))


def verify_issue_set(
    fix: Patch,
    criteria: Sequence[Criterion],
    issues: Sequence[Issue],
    gateway: Gateway,
    k: int,
    temperature: float = VERIFY_TEMPERATURE,
) -> tuple[Rationale, ...]:
    """K independent rationales judging *issues* against *criteria*."""
    if not issues:
        return tuple(Rationale(i) for i in range(1, k + 1))
    request = CompletionRequest(
        "gcs_verify",
        {"fix": fix_text(fix), "criteria": render_criteria(criteria), "issues": render_issues(issues)},
        temperature=temperature,
        candidate_count=k,
    )
    try:
        docs = gateway.complete_structured_candidates(
            request, {"issues": "list"}, lambda d: verification_problems(d, len(issues))
        )
    except (GatewayError, StructuredOutputError) as exc:
        raise EvalError(f"verification failed for fix {fix.message_id}: {exc}") from exc
    if len(docs) != k:
        raise EvalError(f"verifier returned {len(docs)} rationales, expected {k}")
    return tuple(rationale_from_doc(doc, i) for i, doc in enumerate(docs, 1))
