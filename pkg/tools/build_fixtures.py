"""Regenerate the packaged fixtures under src/patchvet/fixtures.

    python3 tools/build_fixtures.py           # data files + recorded answers
    python3 tools/build_fixtures.py --goldens # also refresh tests/golden/*

Model answers come from a scripted model that is a pure function of the
rendered prompt and the candidate index, so re-running this script
reproduces the same fixture files byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import difflib
import hashlib
import io
import json
import random
import re
import shutil
import sys
import tempfile
from datetime import datetime, timezone
from email.utils import format_datetime
from pathlib import Path

HERE = Path(__file__).resolve().parent
ROOT = HERE.parent
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(HERE))

import fixture_data as D  # noqa: E402
from patchvet.codectx import build_index  # noqa: E402
from patchvet.config import RunConfig  # noqa: E402
from patchvet.corpus import CorpusStore, assemble_series, build_threads, parse_mbox  # noqa: E402
from patchvet.corpus.patches import strip_subject_tags  # noqa: E402
from patchvet.gcseval import EvalConfig, PipelineSystem, evaluate, load_pairs  # noqa: E402
from patchvet.gcseval.systems import GENERATE_TEMPERATURE  # noqa: E402
from patchvet.llmgate import Gateway  # noqa: E402
from patchvet.llmgate.providers import ScriptedProvider  # noqa: E402
from patchvet.rulegen import AuditLog, RuleGenerator  # noqa: E402
from patchvet.rulestore import RuleSetSnapshot, load as load_rules, save as save_rules  # noqa: E402
from patchvet.validate import ValidationConfig, validate_series  # noqa: E402

FIX = ROOT / "src" / "patchvet" / "fixtures"
GOLDEN = ROOT / "tests" / "golden"
CREATED_AT = datetime(2024, 1, 1, tzinfo=timezone.utc)

# ------------------------------------------------------------------ mail


def _when(iso: str) -> datetime:
    return datetime.fromisoformat(iso)


def mail(mid, subject, author, date, body, parent=None, refs=()):
    lines = [
        f"From: {author}",
        f"Subject: {subject}",
        f"Date: {format_datetime(_when(date))}",
        f"Message-ID: <{mid}>",
    ]
    if parent:
        lines.append(f"In-Reply-To: <{parent}>")
        lines.append("References: " + " ".join(f"<{r}>" for r in refs))
    lines += ["MIME-Version: 1.0", "Content-Type: text/plain; charset=utf-8", "Content-Transfer-Encoding: 8bit"]
    return "\n".join(lines) + "\n\n" + body


def mbox(messages) -> bytes:
    out = []
    for m in messages:
        body = "\n".join(">" + ln if ln.startswith("From ") else ln for ln in m.split("\n"))
        out.append("From mboxrd@z Thu Jan  1 00:00:00 1970\n" + body.rstrip("\n") + "\n\n")
    return "".join(out).encode("utf-8")


_FUNCNAME = re.compile(r"^[A-Za-z_$]")


def git_diff(path: str, old: str, new: str) -> str:
    """Unified diff with git's headers and hunk section headings."""
    a, b = old.splitlines(), new.splitlines()
    out = []
    for line in difflib.unified_diff(a, b, f"a/{path}", f"b/{path}", n=3, lineterm=""):
        m = re.match(r"^@@ -(\d+)(?:,\d+)? \+\d+(?:,\d+)? @@$", line)
        if m:
            start = int(m.group(1)) - 1
            heading = next((a[i] for i in range(start - 1, -1, -1) if _FUNCNAME.match(a[i])), "")
            if heading:
                line += " " + heading.rstrip()[:80]
        out.append(line)
    index = f"index {hashlib.sha1(old.encode()).hexdigest()[:7]}..{hashlib.sha1(new.encode()).hexdigest()[:7]} 100644"
    return f"diff --git a/{path} b/{path}\n{index}\n" + "\n".join(out) + "\n"


def diffstat(path: str, diff: str) -> str:
    body = diff.splitlines()[4:]
    plus = sum(1 for ln in body if ln.startswith("+"))
    minus = sum(1 for ln in body if ln.startswith("-"))
    bar = "+" * plus + "-" * minus
    ins = f"{plus} insertion{'s' if plus != 1 else ''}(+)"
    dels = f"{minus} deletion{'s' if minus != 1 else ''}(-)"
    return f" {path} | {plus + minus} {bar}\n 1 file changed, {ins}, {dels}\n"


def patch_mail(mid: str) -> str:
    p = D.PATCHES[mid]
    diff = git_diff(p["path"], p["old"], p["new"])
    body = (
        f"{p['message']}\n\nSigned-off-by: {p['author']}\n---\n"
        f"{diffstat(p['path'], diff)}\n{diff}-- \n2.39.2\n"
    )
    return mail(mid, p["subject"], p["author"], p["date"], body)


def review_mbox() -> bytes:
    msgs = []
    for t in D.THREADS:
        rid, subject, author, date, body = t["root"]
        msgs.append(mail(rid, subject, author, date, body))
        for mid, who, when, text in t["replies"]:
            msgs.append(mail(mid, "Re: " + subject, who, when, text, parent=rid, refs=(rid,)))
    return mbox(msgs)


# ------------------------------------------------------------------ scripted model

_RULE_LINE = re.compile(r"^\[(R[0-9a-f]{10})\] \((\w+)\) (.*)$")


def _rng(prompt, i: int) -> random.Random:
    return random.Random(int(hashlib.sha256(f"{prompt.text}#{i}".encode()).hexdigest()[:16], 16))


def _numbered(text: str) -> list[str]:
    return [re.sub(r"^\d+\. ", "", ln) for ln in text.splitlines() if re.match(r"^\d+\. ", ln)]


def _thread(root_id):
    return next(t for t in D.THREADS if t["root"][0] == root_id)


def answer_extract(prompt):
    t = _thread(prompt.variables["thread_id"])
    return {"rules": [{"content": c, "message_ids": ids} for c, ids in t["rules"]]}


def answer_filter(prompt):
    items = _numbered(prompt.variables["rules"])
    return {
        "remove": [
            {"index": i, "reason": D.FILTER_VERDICTS[c]} for i, c in enumerate(items, 1) if c in D.FILTER_VERDICTS
        ]
    }


def answer_categorize(prompt):
    items = _numbered(prompt.variables["rules"])
    return {
        "categories": [
            {"index": i, "category": "Convention" if c in D.CONVENTION else "Logic"} for i, c in enumerate(items, 1)
        ]
    }


def answer_merge(prompt):
    plan = D.MERGES.get(prompt.variables["rule"])
    if plan is not None:
        prefix, merged = plan
        for i, c in enumerate(_numbered(prompt.variables["candidates"]), 1):
            if c.startswith(prefix):
                return {"match": i, "merged_content": merged}
    return {"match": None, "merged_content": None}


def answer_summarize(prompt):
    summary, symbols = D.SUMMARIES[prompt.variables["patch_id"]]
    return {"summary": summary, "symbols": symbols}


def _patch_for_summary(summary):
    return next(mid for mid, (s, _) in D.SUMMARIES.items() if s == summary)


def answer_rank(prompt):
    words = D.RANK_KEYWORDS[_patch_for_summary(prompt.variables["summary"])]
    rules = [m.groups() for m in map(_RULE_LINE.match, prompt.variables["rules"].splitlines()) if m]
    scored = sorted(
        enumerate(rules), key=lambda ir: (-sum(w in ir[1][2].lower() for w in words), ir[0])
    )
    top = int(prompt.variables["top_r"])
    return {"ranking": [r[0] for _, r in scored][:top]}


def _excerpt(body: str, first: str, last: str) -> str:
    lines = body.splitlines()
    i = next(n for n, ln in enumerate(lines) if first in ln)
    j = next(n for n in range(i, len(lines)) if last in lines[n])
    return "\n".join(lines[i : j + 1])


def _issue_doc(spec, prompt, rule_based):
    doc = {
        "title": spec["title"],
        "description": spec["description"],
        "code_excerpt": _excerpt(prompt.variables["patch"], *spec["excerpt"]),
        "severity": spec["severity"],
    }
    if rule_based:
        rules = [m.groups() for m in map(_RULE_LINE.match, prompt.variables["rules"].splitlines()) if m]
        cited = []
        for prefix in spec["cites"]:
            if re.fullmatch(r"R[0-9a-f]{10}", prefix):
                cited.append(prefix)  # deliberately fabricated id
                continue
            cited += [rid for rid, _, content in rules if content.startswith(prefix)]
        doc["rules"] = cited
    return doc


def answer_issues(prompt, n):
    """Candidate 0 is the primary answer regardless of n; the others are
    seeded subsets of the canned issue list."""
    pid = prompt.variables["patch_id"]
    pool = D.ISSUES[pid]
    rule_based = prompt.template_id == "validate_issues"
    out = []
    for i in range(n):
        if i == 0:
            chosen = pool[:1] if pid == D.ZSWAP_ID else pool[:2] if pid == D.GATE_ID else pool
        else:
            rng = _rng(prompt, i)
            chosen = [s for s in pool if rng.random() < 0.55]
        out.append(json.dumps({"issues": [_issue_doc(s, prompt, rule_based) for s in chosen]}, indent=1))
    return out


def answer_batch_filter(prompt):
    titles = re.findall(r"^\d+\. \[patch \d+\] (.*)$", prompt.variables["issues"], re.M)
    seen, remove = set(), []
    for i, t in enumerate(titles, 1):
        if t in seen:
            remove.append({"index": i, "reason": "duplicate"})
        seen.add(t)
    return {"remove": remove}


def _fix_id(subject):
    return next(mid for mid, p in D.PATCHES.items() if p["subject"].endswith(subject) or subject == p["subject"])


def answer_criteria(prompt):
    return D.CRITERIA[_fix_id(prompt.variables["subject"])]


_VERDICTS = {spec["title"]: spec["verdict"] for pool in D.ISSUES.values() for spec in pool}


def answer_verify(prompt, n):
    fix_subject = prompt.variables["fix"].split("\n", 1)[0].removeprefix("Subject: ")
    fid = _fix_id(fix_subject)
    titles = re.findall(r"^Issue \d+: (.*)$", prompt.variables["issues"], re.M)
    out = []
    for k in range(n):
        rng = _rng(prompt, k)
        issues = []
        for idx, title in enumerate(titles, 1):
            crits = []
            if title == strip_subject_tags(D.PATCHES[fid]["subject"]):
                for c, conf in enumerate(D.GT_CONFIDENCE[fid], 1):
                    crits.append({"criterion": c, "reason": "The fix describes this itself.", "match": "Yes", "confidence": conf})
            else:
                profile = D.VERDICT_PROFILE[_VERDICTS.get(title, "miss")]
                for c, p in enumerate(profile, 1):
                    yes = rng.random() < p
                    conf = rng.randint(70, 100) if yes else rng.randint(55, 100)
                    crits.append({
                        "criterion": c,
                        "reason": "Matches the fix." if yes else "Does not match the fix.",
                        "match": "Yes" if yes else "No",
                        "confidence": conf,
                    })
            overall = sum(c["match"] == "Yes" for c in crits) >= 3
            issues.append({
                "index": idx,
                "title": title,
                "overall_match": "Yes" if overall else "No",
                "overall_confidence": max(c["confidence"] for c in crits),
                "criteria": crits,
            })
        out.append(json.dumps({"issues": issues}, indent=1))
    return out


SINGLE = {
    "rule_extract": answer_extract,
    "rule_filter": answer_filter,
    "rule_categorize": answer_categorize,
    "rule_merge": answer_merge,
    "validate_summarize": answer_summarize,
    "validate_rank": answer_rank,
    "validate_batch_filter": answer_batch_filter,
    "gcs_criteria": answer_criteria,
}
MULTI = {"validate_issues": answer_issues, "validate_issues_free": answer_issues, "gcs_verify": answer_verify}


def scripted_model(prompt, n):
    if prompt.template_id in MULTI:
        return MULTI[prompt.template_id](prompt, n)
    answer = json.dumps(SINGLE[prompt.template_id](prompt), indent=1)
    return [answer] * n


# ------------------------------------------------------------------ build


def write_data():
    if FIX.exists():
        shutil.rmtree(FIX)
    for rel, text in D.TREE.items():
        path = FIX / "tree" / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    (FIX / "corpus").mkdir(parents=True)
    (FIX / "corpus" / "review.mbox").write_bytes(review_mbox())
    (FIX / "patches").mkdir()
    (FIX / "patches" / "zswap.mbox").write_bytes(mbox([patch_mail(D.ZSWAP_ID)]))
    (FIX / "patches" / "gate.mbox").write_bytes(mbox([patch_mail(D.GATE_ID)]))
    (FIX / "pairs").mkdir()
    ids = [mid for pair in D.PAIRS for mid in pair[:2]]
    (FIX / "pairs" / "pairs.mbox").write_bytes(mbox([patch_mail(mid) for mid in ids]))
    with (FIX / "pairs" / "pairs.jsonl").open("w", encoding="utf-8") as fh:
        for buggy, fix, label in D.PAIRS:
            fh.write(json.dumps({"buggy_message_id": buggy, "fix_message_id": fix, "label": label}) + "\n")
    write_labels(FIX / "labels.csv")


def write_labels(path: Path):
    """Human vs verifier labels: 39 TP, 2 FP, 1 FN, 38 TN, with confidences."""
    rng = random.Random(7)
    rows = [(1, 1)] * 39 + [(0, 1)] * 2 + [(1, 0)] * 1 + [(0, 0)] * 38
    rng.shuffle(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["item", "human", "verifier", "confidence"])
    for i, (h, v) in enumerate(rows, 1):
        w.writerow([f"item-{i:03d}", "yes" if h else "no", "yes" if v else "no", rng.randint(60, 100)])
    path.write_text(buf.getvalue(), encoding="utf-8")


def record():
    replay = FIX / "replay"
    gateway = Gateway(ScriptedProvider(scripted_model), mode="record", fixtures_dir=replay)
    with tempfile.TemporaryDirectory() as tmp:
        store = CorpusStore(Path(tmp) / "store")
        store.ingest((FIX / "corpus" / "review.mbox").read_bytes())
        gen = RuleGenerator(gateway, 20, 30.0, AuditLog())
        rules = gen.run(build_threads(store.messages()))
        rows = [
            (r.thread_index, r.extracted, r.filtered, r.logic, r.convention, r.consolidated_logic, r.consolidated_convention)
            for r in gen.rows
        ]
        if rows != D.EXPECTED_PROGRESS:
            raise SystemExit(f"rule progression differs from the hand-computed table:\n{rows}")
        save_rules(RuleSetSnapshot(tuple(rules), RunConfig().digest, CREATED_AT), FIX / "rules.jsonl")

        snapshot = load_rules(FIX / "rules.jsonl")
        index = build_index(FIX / "tree")
        for name, mode in (("zswap", "rule_based"), ("zswap", "rule_free"), ("gate", "rule_based")):
            series = assemble_series(parse_mbox((FIX / "patches" / f"{name}.mbox").read_bytes()))
            vcfg = ValidationConfig(mode, 25, 24000, True)
            validate_series(series, snapshot if mode == "rule_based" else None, index, gateway, vcfg)

        store.ingest((FIX / "pairs" / "pairs.mbox").read_bytes())
        pairs = load_pairs(FIX / "pairs" / "pairs.jsonl", store)
        vcfg = ValidationConfig("rule_based", 25, 24000, True, temperature=GENERATE_TEMPERATURE)
        results = evaluate(pairs, PipelineSystem(snapshot, index, gateway, vcfg), gateway, EvalConfig(10, 3))
        for r in results:
            if r.error:
                raise SystemExit(f"pair {r.label} failed: {r.error}")
            s = r.scores
            print(f"{r.label}: gcs {s.gcs:.4f} h_gcs {s.h_gcs:.4f} gt {s.gt_gcs:.4f} final {s.final_score:.4f} {list(s.flags)}")


def goldens():
    from patchvet.cli import main

    GOLDEN.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        store = str(Path(tmp) / "store")
        common = ["--replay", str(FIX / "replay"), "--store", store, "--rules", str(FIX / "rules.jsonl"),
                  "--source-tree", str(FIX / "tree")]
        for mode, out in (("rule_based", "zswap_report.txt"), ("rule_free", "zswap_report_rule_free.txt")):
            rc = main(common + ["validate", str(FIX / "patches" / "zswap.mbox"), "--mode", mode,
                                "--out", str(GOLDEN / out)])
            assert rc == 0, rc
        assert main(["--store", store, "ingest", str(FIX / "pairs" / "pairs.mbox")]) == 0
        rc = main(common + ["eval", "gcs", "--pairs", str(FIX / "pairs" / "pairs.jsonl"), "--N", "10", "--K", "3",
                            "--out", str(GOLDEN / "gcs_results.jsonl"), "--aggregate", str(GOLDEN / "gcs_aggregate.csv")])
        assert rc == 0, rc
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["thread_index", "extracted", "filtered", "logic", "convention",
                "consolidated_logic", "consolidated_convention"])
    w.writerows(D.EXPECTED_PROGRESS)
    (GOLDEN / "rules_progress.csv").write_text(buf.getvalue(), encoding="utf-8")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--goldens", action="store_true", help="also regenerate tests/golden from a replay run")
    args = ap.parse_args()
    write_data()
    record()
    if args.goldens:
        goldens()


if __name__ == "__main__":
    main()
