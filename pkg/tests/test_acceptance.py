"""Acceptance criteria 1-11, run offline against the packaged fixtures.

Each test prints one ``criterion N: PASS|FAIL`` line.
"""

import contextlib
import csv
import io
import json
import math
import random
import time

import pytest

from judgments import to_runs
from mailgen import at, mail, mbox
from oracles import (
    diversity_oracle,
    gcs_oracle,
    h_gcs_oracle,
    rationale_best_issue_oracle,
    rationale_oracle,
    wcs_oracle,
)
from scripts import scripted_gateway
from test_corpus import ten_thread_corpus
from patchvet.cli import main, packaged_fixtures
from patchvet.corpus import CorpusStore, build_threads, corpus_stats, parse_hunks, parse_mbox, parse_patch, write_stats_csv
from patchvet.corpus.patches import Patch
from patchvet.gcseval import (
    CriterionJudgment,
    DegenerateGroundTruthError,
    EvalConfig,
    apply_confidence_threshold,
    cohens_kappa,
    final_score,
    gcs,
    h_gcs,
    kappa_from_confusion,
    score_rationale,
    score_runs,
)
from patchvet.gcseval.scoring import score_rationale_best_issue, wcs
from patchvet.llmgate import Gateway
from patchvet.rulegen import Category, Rule, Source, compute_diversity_level, consolidate_rules
from patchvet.rulegen.stages import categorize_rules, extract_rules, filter_rules
from patchvet.rulestore import RuleSetSnapshot, SchemaVersionError, load, rule_to_doc, save

FIX = packaged_fixtures()
GOLDEN = packaged_fixtures().parents[2] / "tests" / "golden"
REPLAY = ["--replay", str(FIX / "replay"), "--rules", str(FIX / "rules.jsonl"), "--source-tree", str(FIX / "tree")]


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def check(number, text):
        ok = False
        try:
            yield
            ok = True
        finally:
            with capsys.disabled():
                print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {text}")

    return check


def random_tensor(rng):
    k = rng.randint(1, 5)
    out = []
    for _ in range(rng.randint(1, 10)):
        x = rng.randint(0, 5)
        out.append([[[(rng.randint(0, 1), rng.randint(1, 100)) for _ in range(4)] for _ in range(x)] for _ in range(k)])
    return out


TENSORS = [random_tensor(random.Random(seed)) for seed in range(500)]


def test_criterion_01_diversity_oracle(criterion):
    with criterion(1, "diversity level vs arithmetic oracle on 1000 pairs"):
        rng = random.Random(2024)
        pairs = [(rng.randint(1, 100), rng.randint(1, 100)) for _ in range(1000)]
        start = time.perf_counter()
        got = [compute_diversity_level(a, m) for a, m in pairs]
        elapsed = time.perf_counter() - start
        for (a, m), value in zip(pairs, got):
            assert abs(value - diversity_oracle(a, m)) <= 1e-9
        assert compute_diversity_level(1, 1) == 10.0
        assert compute_diversity_level(4, 9) == 60.0
        assert elapsed < 1.0


def test_criterion_02_scoring_oracle(criterion):
    with criterion(2, "scores vs independent oracle on 500 tensors"):
        start = time.perf_counter()
        for i, tensor in enumerate(TENSORS):
            tau = (i * 37) % 101
            runs = to_runs(tensor)
            cfg = EvalConfig(n=len(tensor), k=len(tensor[0]), confidence_threshold=tau)
            for run, raw in zip(runs, tensor):
                for r, cells in zip(run.rationales, raw):
                    for judgment, (m, c) in zip(
                        (cj for ij in r.judgments for cj in ij.criteria), (cell for issue in cells for cell in issue)
                    ):
                        assert wcs(judgment) == wcs_oracle(m, c)
                    assert abs(score_rationale(r, run.issue_count) - rationale_oracle(cells)) <= 1e-12
                    (cut,) = apply_confidence_threshold([r], tau)
                    assert abs(score_rationale(cut, run.issue_count) - rationale_oracle(cells, tau)) <= 1e-12
                    best = score_rationale_best_issue(cut, run.issue_count)
                    assert abs(best - rationale_best_issue_oracle(cells, tau)) <= 1e-12
            assert abs(gcs(runs, cfg) - gcs_oracle(tensor, tau)) <= 1e-12
            assert abs(h_gcs(runs, cfg) - h_gcs_oracle(tensor, tau)) <= 1e-12
            gt = TENSORS[(i + 1) % len(TENSORS)][:1]
            gt_cfg = EvalConfig(n=1, k=len(gt[0]), confidence_threshold=tau)
            expected_gt = gcs_oracle(gt, tau)
            if expected_gt > 0:
                bundle = score_runs(runs, cfg, to_runs(gt), gt_cfg)
                assert abs(bundle.final_score - gcs_oracle(tensor, tau) / expected_gt) <= 1e-12
                assert abs(final_score(bundle.gcs, bundle.gt_gcs) - bundle.final_score) <= 1e-12
            else:
                with pytest.raises(DegenerateGroundTruthError):
                    final_score(gcs_oracle(tensor, tau), expected_gt)
        assert time.perf_counter() - start < 5.0


def test_criterion_03_score_properties(criterion):
    with criterion(3, "range, h_gcs >= gcs, best-of-N, K permutation, threshold monotonicity"):
        rng = random.Random(3)
        violations = 0
        for tensor in TENSORS:
            runs = to_runs(tensor)
            cfg = EvalConfig(n=len(tensor), k=len(tensor[0]))
            g, h = gcs(runs, cfg), h_gcs(runs, cfg)
            violations += not (0.0 <= g <= 1.0 and 0.0 <= h <= 1.0)
            violations += h < g
            extra = to_runs([tensor[rng.randrange(len(tensor))]])
            violations += gcs(runs + extra) < g or h_gcs(runs + extra) < h
            permuted = [[run[j] for j in rng.sample(range(len(run)), len(run))] for run in tensor]
            violations += gcs(to_runs(permuted), cfg) != g or h_gcs(to_runs(permuted), cfg) != h
            previous = g
            for tau in (10, 30, 50, 70, 90, 100):
                now = gcs(runs, cfg.with_(confidence_threshold=tau))
                violations += now > previous
                previous = now
        assert violations == 0


def test_criterion_04_kappa(criterion, capsys):
    with criterion(4, "kappa 0.925 on 39/2/1/38, perfect agreement 1.0"):
        result = kappa_from_confusion(tp=39, fp=2, fn=1, tn=38)
        assert abs(result.kappa - 0.925) <= 0.001
        assert cohens_kappa([1, 0, 1, 0, 1], [1, 0, 1, 0, 1]).kappa == 1.0
        assert main(["eval", "kappa", "--labels", str(FIX / "labels.csv")]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert (doc["tp"], doc["fp"], doc["fn"], doc["tn"]) == (39, 2, 1, 38)
        assert abs(doc["kappa"] - 0.925) <= 0.001


def _progress_rows(text):
    return list(csv.DictReader(line for line in text.splitlines() if not line.startswith("#")))


def test_criterion_05_rules_build(criterion, tmp_path, capsys):
    with criterion(5, "rules build on the replay corpus: golden counts, monotone stages, provenance"):
        store = str(tmp_path / "store")
        assert main(["--store", store, "ingest", str(FIX / "corpus" / "review.mbox")]) == 0
        progress = tmp_path / "progress.csv"
        rules_out = tmp_path / "rules.jsonl"
        rc = main(["--replay", str(FIX / "replay"), "--store", store, "--rules", str(rules_out),
                   "rules", "build", "--progress", str(progress)])
        assert rc == 0
        got = _progress_rows(progress.read_text())
        assert got == _progress_rows((GOLDEN / "rules_progress.csv").read_text())
        for row in got:
            r = {k: int(v) for k, v in row.items()}
            assert r["extracted"] >= r["filtered"] >= r["logic"] + r["convention"]
            assert r["filtered"] == r["logic"] + r["convention"]
            assert r["logic"] >= r["consolidated_logic"] and r["convention"] >= r["consolidated_convention"]
        final = load(rules_out).rules
        assert [rule_to_doc(r) for r in final] == [rule_to_doc(r) for r in load(FIX / "rules.jsonl").rules]

        # provenance: every source of a categorized rule survives consolidation
        gateway = Gateway(mode="replay", fixtures_dir=FIX / "replay")
        categorized = []
        for thread in build_threads(CorpusStore(store).messages()):
            categorized += categorize_rules(filter_rules(extract_rules(thread, gateway), gateway), gateway)
        ids = lambda rules: {s.message_id for r in rules for s in r.sources}
        assert ids(final) == ids(categorized)
        for c in Category:
            assert sum(r.category is c for r in final) <= sum(r.category is c for r in categorized)


def _rule(content, pairs):
    return Rule(content, Category.LOGIC, frozenset(Source(m, a) for m, a in pairs))


def test_criterion_06_merge_policy(criterion):
    with criterion(6, "rules at >= 30 untouched, < 30 same-topic pair merged"):
        r10 = _rule("Take the lock before reading the counter.", [("m1", "a1")])
        r14 = _rule("Read the counter only with the lock held.", [("m2", "a2"), ("m3", "a2")])
        r30 = _rule("Never sleep in atomic context.", [(f"n{i}", f"b{i % 3}") for i in range(3)] + [("n0", "b1"), ("n0", "b2")])
        r31 = _rule("Pin the CPU while using per-cpu data.", [(f"p{i}", f"c{i % 2}") for i in range(5)])
        levels = [round(r.diversity_level, 2) for r in (r10, r14, r30, r31)]
        assert levels == [10.0, 14.14, 30.0, 31.62]
        merged_text = "Read or update the counter only with the lock held."
        gw, provider = scripted_gateway(rule_merge={"match": 1, "merged_content": merged_text})
        before = {r.rule_id: json.dumps(rule_to_doc(r), sort_keys=True) for r in (r30, r31)}
        out = consolidate_rules([r30, r10], [r31, r14], gw)
        assert len(provider.calls) == 1
        assert [r.content for r in out] == [r30.content, merged_text, r31.content]
        for r in (out[0], out[2]):
            assert json.dumps(rule_to_doc(r), sort_keys=True) == before[r.rule_id]
        merged = out[1]
        assert merged.sources == r10.sources | r14.sources
        assert merged.history == (r10.content, r14.content)
        assert merged.diversity_level == compute_diversity_level(2, 3)


def test_criterion_07_validation_golden(criterion, tmp_path, capsys):
    with criterion(7, "zswap report byte-for-byte in both modes"):
        zswap = str(FIX / "patches" / "zswap.mbox")
        for mode, golden in (("rule_based", "zswap_report.txt"), ("rule_free", "zswap_report_rule_free.txt")):
            outs = []
            for attempt in range(2):
                out = tmp_path / f"{mode}{attempt}.txt"
                rc = main(REPLAY + ["--store", str(tmp_path / f"s{attempt}"), "validate", zswap, "--mode", mode,
                                    "--out", str(out)])
                assert rc == 0
                outs.append(out.read_bytes())
            assert outs[0] == outs[1] == (GOLDEN / golden).read_bytes()
        based = (GOLDEN / "zswap_report.txt").read_text()
        assert based.count("  > - message-id:") == 4
        assert "Race condition when accessing per-cpu data in preemptible context" in based
        rule_blocks = [b for b in based.split("- ")[1:] if b.lstrip().startswith(("Re-check", "A pointer"))]
        assert len(rule_blocks) == 2
        free = (GOLDEN / "zswap_report_rule_free.txt").read_text()
        assert "### Rules Used\n\n(none)\n" in free and "message-id: a1b2" not in free


def test_criterion_08_citation_gate(criterion, tmp_path):
    with criterion(8, "one real and one fabricated citation: one kept, one rejection logged"):
        out = tmp_path / "gate.json"
        rc = main(REPLAY + ["--store", str(tmp_path / "s"), "validate", str(FIX / "patches" / "gate.mbox"),
                            "--out", str(tmp_path / "gate.txt"), "--json", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert len(doc["issues"]) == 1
        known = {r.rule_id for r in load(FIX / "rules.jsonl").rules}
        assert {r["rule_id"] for r in doc["issues"][0]["rules_used"]} <= known
        rejections = [w for w in doc["warnings"] if "rejected issue" in w]
        assert len(rejections) == 1 and "R0000000000" in rejections[0]


# corpus laws


def _random_hunk(rng, start):
    lines, old, new, added, removed = [], 0, 0, [], []
    for j in range(rng.randint(1, 8)):
        kind = rng.choice(" -+")
        text = f"\tline_{start}_{j} = {rng.randint(0, 999)};"
        lines.append(kind + text)
        if kind != "+":
            old += 1
        if kind != "-":
            new += 1
        (added if kind == "+" else removed if kind == "-" else []).append(text)
    header = f"@@ -{start},{old} +{start},{new} @@ static int fn_{start}(void)"
    return [header] + lines, added, removed


def generate_corpus(n_messages, seed):
    """Threads of one patch root and replies; every 50th root carries a
    trailing hunk whose declared length overruns the body."""
    rng = random.Random(seed)
    texts, expected, malformed = [], {}, set()
    t = 0
    while len(texts) < n_messages:
        root = f"root{t}@gen"
        hunks, body = [], ["Change.", "", "Signed-off-by: Gen <g@x>", "---", "", "diff --git a/f.c b/f.c",
                           "--- a/f.c", "+++ b/f.c"]
        for h in range(rng.randint(1, 3)):
            lines, added, removed = _random_hunk(rng, 10 + 20 * h)
            body += lines
            hunks.append((added, removed))
        if t % 50 == 0:
            body += ["@@ -90,5 +90,5 @@", " x", "-y", "+z"]
            malformed.add(root)
        expected[root] = hunks
        texts.append(mail(root, f"[PATCH] gen {t}", "\n".join(body) + "\n", date=at(t)))
        members = [root]
        for r in range(min(rng.randint(0, 15), n_messages - len(texts))):
            mid = f"r{t}.{r}@gen"
            roll = rng.random()
            parent = rng.choice(members) if roll < 0.8 else f"lost{t}.{r}@gen" if roll < 0.9 else None
            refs = [root, parent] if parent and roll < 0.5 else None
            texts.append(mail(mid, f"Re: gen {t}", "ok\n", in_reply_to=parent, references=refs,
                              date=at(t + 0.01 * (r + 1))))
            members.append(mid)
        t += 1
    return mbox(*texts), expected, malformed


def test_criterion_09_corpus_laws(criterion):
    with criterion(9, "10,000 messages: threading partition, diff bookkeeping, seeded stats, unreviewed 0.600"):
        data, expected, malformed = generate_corpus(10_000, 9)
        messages = parse_mbox(data)
        assert len(messages) == 10_000
        threads = build_threads(messages)
        ids = [m.message_id for th in threads for m in th.members]
        assert sorted(ids) == sorted(m.message_id for m in messages)
        for th in threads:
            members = {m.message_id for m in th.members}
            assert set(th.reply_edges) == members - {th.root_id}
            for child in th.reply_edges:
                seen, node = set(), child
                while node != th.root_id:
                    assert node not in seen and node in members
                    seen.add(node)
                    node = th.reply_edges[node]

        by_id = {m.message_id: m for m in messages}
        for root, hunks in expected.items():
            patch = parse_patch(by_id[root])
            assert isinstance(patch, Patch)
            assert len(patch.diff) == len(hunks)
            for parsed, (added, removed) in zip(patch.diff, hunks):
                assert parsed.is_consistent()
                assert parsed.added == added and parsed.removed == removed
            diags = []
            parse_hunks(by_id[root].body, diags)
            assert bool(diags) == (root in malformed)

        def stats_csv():
            buf = io.StringIO()
            report = corpus_stats(build_threads(parse_mbox(data)), seed=17, sample_size=300, period="all")
            write_stats_csv(report, buf, "fixed")
            return buf.getvalue()

        assert stats_csv() == stats_csv()
        (row,) = corpus_stats(ten_thread_corpus(), seed=1).periods
        assert f"{row.unreviewed_fraction:.3f}" == "0.600"


def test_criterion_10_rulestore_round_trip(criterion, tmp_path):
    with criterion(10, "1000-rule round trip, schema version 999 rejected"):
        rng = random.Random(10)
        rules = []
        for i in range(1000):
            sources = frozenset(Source(f"m{rng.randint(0, 400)}@x", f"A{rng.randint(0, 30)}") for _ in range(rng.randint(1, 5)))
            history = tuple(f"older {i}.{j} ünïcode\t\"q\"" for j in range(rng.randint(0, 3)))
            rules.append(Rule(f"rule {i}: {rng.random()}", rng.choice(list(Category)), sources, history))
        snap = RuleSetSnapshot(tuple(rules), "cfg")
        back = load(save(snap, tmp_path / "rules.jsonl"))
        assert back == snap
        assert [rule_to_doc(r) for r in back.rules] == [rule_to_doc(r) for r in rules]
        lines = (tmp_path / "rules.jsonl").read_text().splitlines()
        header = json.loads(lines[0])
        header["schema_version"] = 999
        (tmp_path / "future.jsonl").write_text("\n".join([json.dumps(header)] + lines[1:]) + "\n")
        with pytest.raises(SchemaVersionError):
            load(tmp_path / "future.jsonl")


def _scores(doc):
    keys = ("gcs", "h_gcs", "gt_gcs", "final_score")
    return [doc[k] for k in keys] + [x for run in doc["runs"] for x in run["rationale_scores"] + run["best_issue_scores"]]


def test_criterion_11_end_to_end_replay(criterion, tmp_path, capsys):
    with criterion(11, "eval gcs over 3 pairs, N=10 K=3, offline, golden to 1e-12"):
        store = str(tmp_path / "store")
        assert main(["--store", store, "ingest", str(FIX / "pairs" / "pairs.mbox")]) == 0
        out = tmp_path / "gcs.jsonl"
        start = time.perf_counter()
        rc = main(REPLAY + ["--store", store, "eval", "gcs", "--pairs", str(FIX / "pairs" / "pairs.jsonl"),
                            "--N", "10", "--K", "3", "--out", str(out)])
        elapsed = time.perf_counter() - start
        assert rc == 0
        assert elapsed < 60
        got = [json.loads(ln) for ln in out.read_text().splitlines()]
        want = [json.loads(ln) for ln in (GOLDEN / "gcs_results.jsonl").read_text().splitlines()]
        assert len(got) == len(want) == 3
        for g, w in zip(got, want):
            assert (g["buggy_message_id"], g["fix_message_id"], g["label"], g["flags"]) == (
                w["buggy_message_id"], w["fix_message_id"], w["label"], w["flags"])
            assert [r["issues"] for r in g["runs"]] == [r["issues"] for r in w["runs"]]
            assert len(g["runs"]) == 10
            gs, ws = _scores(g), _scores(w)
            assert len(gs) == len(ws)
            assert all(math.isclose(a, b, rel_tol=0, abs_tol=1e-12) for a, b in zip(gs, ws))
