"""Per-pair evaluation driver and result files."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from patchvet.corpus.patches import Patch, PatchPair, parse_patch
from patchvet.corpus.store import CorpusStore
from patchvet.errors import PatchvetError, StructuralError
from patchvet.gcseval.models import EvalConfig, RunJudgments, ScoreBundle
from patchvet.gcseval.scoring import score_runs
from patchvet.gcseval.systems import GroundTruthSystem, IssueSetSource
from patchvet.gcseval.verify import CriteriaCache, generate_criteria, verify_issue_set
from patchvet.llmgate import FixtureMissingError, Gateway

log = logging.getLogger(__name__)

AGGREGATE_COLUMNS = ["label", "pairs", "scored", "mean_gcs", "mean_h_gcs", "mean_final_score", "flagged"]


@dataclass
class PairResult:
    buggy_message_id: str
    fix_message_id: str
    label: str
    scores: ScoreBundle | None = None
    issue_titles: list[list[str]] = field(default_factory=list)
    error: str | None = None

    def to_doc(self) -> dict:
        doc = {
            "buggy_message_id": self.buggy_message_id,
            "fix_message_id": self.fix_message_id,
            "label": self.label,
        }
        if self.error is not None or self.scores is None:
            doc["error"] = self.error
            return doc
        s = self.scores
        doc.update(
            gcs=s.gcs,
            h_gcs=s.h_gcs,
            gt_gcs=s.gt_gcs,
            final_score=s.final_score,
            flags=list(s.flags),
            runs=[
                {"issues": titles, "rationale_scores": list(rs), "best_issue_scores": list(hs)}
                for titles, rs, hs in zip(self.issue_titles, s.rationale_scores, s.rationale_best_issue_scores)
            ],
        )
        return doc


def _judge(pair, criteria, sets, gateway, k, workers) -> list[RunJudgments]:
    def one(issues):
        return RunJudgments(len(issues), verify_issue_set(pair.fix, criteria, issues, gateway, k))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(one, sets))


def evaluate_pair(
    pair: PatchPair,
    system: IssueSetSource,
    gateway: Gateway,
    config: EvalConfig = EvalConfig(),
    cache: CriteriaCache | None = None,
    ground_truth: IssueSetSource | None = None,
    workers: int = 4,
) -> PairResult:
    """Score *system* on one pair. Failures are reported in the result, not raised."""
    result = PairResult(pair.buggy.message_id, pair.fix.message_id, pair.label)
    ground_truth = ground_truth or GroundTruthSystem()
    try:
        criteria = generate_criteria(pair.fix, gateway, cache)
        sets = system.issue_sets(pair, config.n)
        if len(sets) != config.n:
            raise StructuralError(f"{system.name} produced {len(sets)} issue sets, expected {config.n}")
        runs = _judge(pair, criteria, sets, gateway, config.k, workers)
        gt_config = config.with_(n=1)
        gt_runs = _judge(pair, criteria, ground_truth.issue_sets(pair, 1), gateway, config.k, workers)
        result.scores = score_runs(runs, config, gt_runs, gt_config)
        result.issue_titles = [[i.title for i in s] for s in sets]
    except FixtureMissingError:
        raise
    except (PatchvetError, ValueError, KeyError) as exc:
        log.warning("pair %s/%s failed: %s", pair.buggy.message_id, pair.fix.message_id, exc)
        result.error = str(exc)
    return result


def evaluate(
    pairs: Iterable[PatchPair],
    system: IssueSetSource,
    gateway: Gateway,
    config: EvalConfig = EvalConfig(),
    workers: int = 4,
) -> list[PairResult]:
    cache = CriteriaCache()
    return [evaluate_pair(p, system, gateway, config, cache, workers=workers) for p in pairs]


# files


def _patch(store: CorpusStore, message_id: str) -> Patch:
    try:
        msg = store.get(message_id)
    except KeyError:
        raise StructuralError(f"message {message_id} not in corpus store") from None
    patch = parse_patch(msg)
    if not isinstance(patch, Patch):
        raise StructuralError(f"message {message_id} is not a patch")
    return patch


def load_pairs(path: str | Path, store: CorpusStore) -> list[PatchPair]:
    pairs = []
    for no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            buggy, fix, label = doc["buggy_message_id"], doc["fix_message_id"], doc.get("label", "")
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise StructuralError(f"{path}:{no}: bad pair record: {exc}") from exc
        pairs.append(PatchPair(_patch(store, buggy.strip("<>")), _patch(store, fix.strip("<>")), label))
    return pairs


def write_results(results: Sequence[PairResult], out: TextIO) -> None:
    for r in results:
        out.write(json.dumps(r.to_doc(), sort_keys=True, ensure_ascii=False) + "\n")


def aggregate(results: Sequence[PairResult]) -> list[dict]:
    groups: dict[str, list[PairResult]] = {}
    for r in results:
        groups.setdefault(r.label, []).append(r)
    rows = []
    for label in sorted(groups) + ["all"]:
        members = results if label == "all" else groups[label]
        scored = [r.scores for r in members if r.scores is not None]
        finals = [s.final_score for s in scored if s.final_score is not None]
        mean = lambda xs: math.fsum(xs) / len(xs) if xs else None
        rows.append(
            {
                "label": label,
                "pairs": len(members),
                "scored": len(scored),
                "mean_gcs": mean([s.gcs for s in scored]),
                "mean_h_gcs": mean([s.h_gcs for s in scored]),
                "mean_final_score": mean(finals),
                "flagged": sum(1 for s in scored if s.flags),
            }
        )
    return rows


def write_aggregate_csv(results: Sequence[PairResult], out: TextIO, config_digest: str = "") -> None:
    out.write(f"# config-digest: {config_digest}\n")
    writer = csv.DictWriter(out, AGGREGATE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in aggregate(results):
        writer.writerow({k: ("" if v is None else (f"{v:.6f}" if isinstance(v, float) else v)) for k, v in row.items()})
