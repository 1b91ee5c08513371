from patchvet.gcseval.harness import (
    PairResult,
    aggregate,
    evaluate,
    evaluate_pair,
    load_pairs,
    write_aggregate_csv,
    write_results,
)
from patchvet.gcseval.kappa import KappaResult, UndefinedKappaError, cohens_kappa, kappa_from_confusion
from patchvet.gcseval.models import (
    KINDS,
    Criterion,
    CriterionJudgment,
    CriterionKind,
    EvalConfig,
    IssueJudgment,
    Rationale,
    RunJudgments,
    ScoreBundle,
)
from patchvet.gcseval.scoring import (
    DegenerateGroundTruthError,
    apply_confidence_threshold,
    final_score,
    gcs,
    h_gcs,
    score_rationale,
    score_rationale_best_issue,
    score_runs,
    wcs,
)
from patchvet.gcseval.systems import FileSystem, GroundTruthSystem, PipelineSystem
from patchvet.gcseval.verify import CriteriaCache, EvalError, generate_criteria, verify_issue_set

__all__ = [
    "KINDS",
    "CriteriaCache",
    "Criterion",
    "CriterionJudgment",
    "CriterionKind",
    "DegenerateGroundTruthError",
    "EvalConfig",
    "EvalError",
    "FileSystem",
    "GroundTruthSystem",
    "IssueJudgment",
    "KappaResult",
    "PairResult",
    "PipelineSystem",
    "Rationale",
    "RunJudgments",
    "ScoreBundle",
    "UndefinedKappaError",
    "aggregate",
    "apply_confidence_threshold",
    "cohens_kappa",
    "evaluate",
    "evaluate_pair",
    "final_score",
    "gcs",
    "generate_criteria",
    "h_gcs",
    "kappa_from_confusion",
    "load_pairs",
    "score_rationale",
    "score_rationale_best_issue",
    "score_runs",
    "verify_issue_set",
    "wcs",
    "write_aggregate_csv",
    "write_results",
]
