"""Coverage arithmetic: WCS, rationale scores, GCS, H-GCS, FinalScore.

Sums use math.fsum, so results do not depend on summation order.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Sequence

from patchvet.errors import PatchvetError, StructuralError
from patchvet.gcseval.models import CriterionJudgment, EvalConfig, Rationale, RunJudgments, ScoreBundle


class DegenerateGroundTruthError(PatchvetError):
    pass


def wcs(judgment: CriterionJudgment) -> float:
    return judgment.confidence / 100.0 * judgment.match


def _issue_scores(rationale: Rationale, n_issues: int) -> list[float]:
    return [math.fsum(wcs(c) for c in crit) / len(crit) for crit in rationale.cells(n_issues)]


def score_rationale(rationale: Rationale, n_issues: int) -> float:
    """Mean over issues of the mean criterion WCS. An empty issue set scores 0."""
    scores = _issue_scores(rationale, n_issues)
    return math.fsum(scores) / len(scores) if scores else 0.0


def score_rationale_best_issue(rationale: Rationale, n_issues: int) -> float:
    scores = _issue_scores(rationale, n_issues)
    return max(scores) if scores else 0.0


def apply_confidence_threshold(rationales: Sequence[Rationale], tau: int) -> list[Rationale]:
    """Judgments with confidence below *tau* count as No."""
    if not 0 <= tau <= 100:
        raise ValueError("threshold must be in [0, 100]")
    if tau == 0:
        return list(rationales)
    out = []
    for r in rationales:
        judgments = tuple(
            replace(
                j,
                criteria=tuple(c if c.confidence >= tau else replace(c, match=0) for c in j.criteria),
            )
            for j in r.judgments
        )
        out.append(replace(r, judgments=judgments))
    return out


def _check_shape(runs: Sequence[RunJudgments], config: EvalConfig | None) -> None:
    if not runs:
        raise StructuralError("no runs to score")
    ks = {len(run.rationales) for run in runs}
    if len(ks) != 1 or 0 in ks:
        raise StructuralError(f"ragged runs: rationale counts {sorted(ks)}")
    if config is not None and (len(runs) != config.n or ks != {config.k}):
        raise StructuralError(f"expected {config.n} runs of {config.k} rationales, got {len(runs)} of {ks.pop()}")


def _aggregate(runs, config, per_rationale) -> tuple[float, tuple[tuple[float, ...], ...]]:
    _check_shape(runs, config)
    tau = config.confidence_threshold if config is not None else 0
    table = []
    for run in runs:
        rs = apply_confidence_threshold(run.rationales, tau)
        table.append(tuple(per_rationale(r, run.issue_count) for r in rs))
    best = max(math.fsum(row) / len(row) for row in table)
    return best, tuple(table)


def gcs(runs: Sequence[RunJudgments], config: EvalConfig | None = None) -> float:
    """Best over runs of the K-vote mean rationale score."""
    return _aggregate(runs, config, score_rationale)[0]


def h_gcs(runs: Sequence[RunJudgments], config: EvalConfig | None = None) -> float:
    """As gcs, but each rationale contributes its best-covered issue."""
    return _aggregate(runs, config, score_rationale_best_issue)[0]


def final_score(gcs_system: float, gcs_ground_truth: float) -> float:
    if gcs_ground_truth <= 0:
        raise DegenerateGroundTruthError(f"ground-truth GCS is {gcs_ground_truth}; FinalScore undefined")
    return gcs_system / gcs_ground_truth


def score_runs(
    runs: Sequence[RunJudgments],
    config: EvalConfig | None = None,
    gt_runs: Sequence[RunJudgments] | None = None,
    gt_config: EvalConfig | None = None,
) -> ScoreBundle:
    """All scores for one pair, with per-(n, k) rationale scores kept for audit."""
    g, table = _aggregate(runs, config, score_rationale)
    h, h_table = _aggregate(runs, config, score_rationale_best_issue)
    gt = final = None
    flags = []
    if gt_runs is not None:
        gt = gcs(gt_runs, gt_config)
        if gt < 1.0:
            flags.append("ground-truth-below-max")
        try:
            final = final_score(g, gt)
        except DegenerateGroundTruthError:
            flags.append("degenerate-ground-truth")
    return ScoreBundle(g, h, gt, final, table, h_table, tuple(flags))
