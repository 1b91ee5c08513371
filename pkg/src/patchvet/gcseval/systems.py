"""Sources of candidate issue sets for a buggy patch."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Protocol

from patchvet.codectx import SymbolIndex
from patchvet.corpus.patches import PatchPair, PatchSeries
from patchvet.llmgate import Gateway
from patchvet.rulestore import RuleSetSnapshot
from patchvet.validate import ValidationConfig, batch_filter, review_patch
from patchvet.validate.models import Issue

GENERATE_TEMPERATURE = 0.7


class IssueSetSource(Protocol):
    name: str

    def issue_sets(self, pair: PatchPair, n: int) -> list[list[Issue]]: ...


class PipelineSystem:
    """The validation pipeline sampled *n* times in one multi-candidate call,
    each candidate then batch-filtered on its own."""

    name = "pipeline"

    def __init__(
        self,
        snapshot: RuleSetSnapshot | None,
        index: SymbolIndex | None,
        gateway: Gateway,
        config: ValidationConfig = ValidationConfig(temperature=GENERATE_TEMPERATURE),
    ):
        self.snapshot = snapshot
        self.index = index
        self.gateway = gateway
        self.config = config
        self.name = f"pipeline-{config.mode}"

    def issue_sets(self, pair: PatchPair, n: int) -> list[list[Issue]]:
        review = review_patch(pair.buggy, self.snapshot, self.index, self.gateway, self.config, n)
        series = PatchSeries(None, (pair.buggy,))
        out = []
        for batch in review.batches:
            report = batch_filter(series, batch.issues, self.gateway)
            out.append(list(report.issues))
        return out


class FileSystem:
    """Precomputed issue sets from JSON lines: {buggy_message_id, runs: [[issue, ...], ...]}."""

    name = "file"

    def __init__(self, path: str | Path):
        self.sets: dict[str, list[list[dict]]] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                doc = json.loads(line)
                self.sets[doc["buggy_message_id"]] = doc["runs"]

    def issue_sets(self, pair: PatchPair, n: int) -> list[list[Issue]]:
        runs = self.sets.get(pair.buggy.message_id)
        if runs is None:
            raise KeyError(f"no issue sets for {pair.buggy.message_id}")
        if len(runs) < n:
            raise ValueError(f"{pair.buggy.message_id}: file has {len(runs)} runs, need {n}")
        return [
            [
                Issue(d["title"], d.get("description", ""), d.get("code_excerpt"), pair.buggy.message_id)
                for d in run
            ]
            for run in runs[:n]
        ]


class GroundTruthSystem:
    """The fix commit's own description as a single issue. Deterministic, so
    one run suffices."""

    name = "ground-truth"

    def issue_sets(self, pair: PatchPair, n: int = 1) -> list[list[Issue]]:
        fix = pair.fix
        issue = Issue(fix.title, fix.commit_message, None, fix.message_id)
        return [[issue] for _ in range(n)]

