"""Judgment data for ground-truth coverage scoring."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from patchvet.errors import StructuralError

N_CRITERIA = 4


class CriterionKind(str, enum.Enum):
    ROOT_CAUSE = "RootCause"
    CODE_LOCATION = "CodeLocation"
    FIXING_STRATEGY = "FixingStrategy"
    KEYWORD_OVERLAP = "KeywordOverlap"


KINDS = tuple(CriterionKind)
# field names used in the criteria prompt answer, in criterion order
KIND_FIELDS = ("root_cause", "code_location", "fixing_strategy", "keyword_overlap")


@dataclass(frozen=True)
class Criterion:
    kind: CriterionKind
    question: str


@dataclass(frozen=True)
class CriterionJudgment:
    match: int
    confidence: int
    reason: str = ""

    def __post_init__(self):
        if self.match not in (0, 1) or isinstance(self.match, bool):
            raise ValueError(f"match must be 0 or 1, got {self.match!r}")
        if not isinstance(self.confidence, int) or isinstance(self.confidence, bool) or not 1 <= self.confidence <= 100:
            raise ValueError(f"confidence must be an integer in [1, 100], got {self.confidence!r}")


@dataclass(frozen=True)
class IssueJudgment:
    issue_index: int
    criteria: tuple[CriterionJudgment, ...]
    title: str = ""
    overall_match: int | None = None
    overall_confidence: int | None = None

    def __post_init__(self):
        if len(self.criteria) != N_CRITERIA:
            raise StructuralError(f"issue {self.issue_index} has {len(self.criteria)} criterion judgments, expected 4")


@dataclass(frozen=True)
class Rationale:
    k: int
    judgments: tuple[IssueJudgment, ...] = ()

    def cells(self, n_issues: int) -> list[tuple[CriterionJudgment, ...]]:
        """Per-issue judgments in issue order; every issue must be judged exactly once."""
        by_issue: dict[int, IssueJudgment] = {}
        for j in self.judgments:
            if j.issue_index in by_issue:
                raise StructuralError(f"rationale {self.k}: issue {j.issue_index} judged twice")
            by_issue[j.issue_index] = j
        missing = [i for i in range(n_issues) if i not in by_issue]
        extra = sorted(set(by_issue) - set(range(n_issues)))
        if missing or extra:
            raise StructuralError(f"rationale {self.k}: missing issues {missing}, unknown issues {extra}")
        return [by_issue[i].criteria for i in range(n_issues)]


@dataclass(frozen=True)
class RunJudgments:
    """The K rationales judging one candidate issue set."""

    issue_count: int
    rationales: tuple[Rationale, ...]


@dataclass(frozen=True)
class EvalConfig:
    n: int = 10
    k: int = 3
    confidence_threshold: int = 0
    weak_verifier: bool = False

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError("N and K must be >= 1")
        if not 0 <= self.confidence_threshold <= 100:
            raise ValueError("confidence_threshold must be in [0, 100]")

    @classmethod
    def for_verifier(cls, weak: bool, **kw) -> "EvalConfig":
        """Default threshold 90 for a verifier flagged weaker than the system under test."""
        kw.setdefault("confidence_threshold", 90 if weak else 0)
        return cls(weak_verifier=weak, **kw)

    def with_(self, **kw) -> "EvalConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class ScoreBundle:
    gcs: float
    h_gcs: float
    gt_gcs: float | None = None
    final_score: float | None = None
    rationale_scores: tuple[tuple[float, ...], ...] = ()
    rationale_best_issue_scores: tuple[tuple[float, ...], ...] = ()
    flags: tuple[str, ...] = field(default=())
