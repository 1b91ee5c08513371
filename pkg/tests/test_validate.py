import json

import pytest

from mailgen import PATCH_BODY, at
from patchvet.codectx import PatchContext
from patchvet.corpus.messages import EmailMessage
from patchvet.corpus.patches import Patch, PatchSeries, parse_patch
from patchvet.errors import PreconditionError
from patchvet.llmgate import GatewayError
from patchvet.rulegen import Category, Rule, Source
from patchvet.rulestore import RuleSetSnapshot
from patchvet.validate import (
    RULE_BASED,
    RULE_FREE,
    ChangeSummary,
    Issue,
    ValidationConfig,
    ValidationError,
    ValidationReport,
    batch_filter,
    generate_issues,
    rank_rules,
    render_report,
    report_json,
    summarize_changes,
    validate_series,
)
from scripts import scripted_gateway

NO_CTX = PatchContext((), ())

TWO_FILES = """\
Rename the helper.

---
diff --git a/mm/a.c b/mm/a.c
--- a/mm/a.c
+++ b/mm/a.c
@@ -1 +1 @@ void old_name(void)
-void old_name(void)
+void new_name(void)
diff --git a/include/linux/a.h b/include/linux/a.h
--- a/include/linux/a.h
+++ b/include/linux/a.h
@@ -1 +1 @@
-void old_name(void);
+void new_name(void);
"""


def patch(body=PATCH_BODY, mid="p1@x", subject="[PATCH] mm: fix foo"):
    return parse_patch(EmailMessage(mid, None, (), "Dev <dev@x>", at(0), subject, body))


def rules(n):
    return [
        Rule(f"rule number {i}", Category.LOGIC, frozenset({Source(f"m{i}@x", f"Author {i} <a{i}@x>")}))
        for i in range(n)
    ]


def summary(p):
    return ChangeSummary(p.message_id, "changes foo", (), tuple(p.files))


# summarize


def test_summarize_two_files_and_symbols_bounded():
    p = patch(TWO_FILES)
    gw, provider = scripted_gateway(
        validate_summarize={"summary": "Renames old_name to new_name.", "symbols": ["new_name", "invented_fn"]}
    )
    s = summarize_changes(p, NO_CTX, gw)
    assert s.touched_files == ("mm/a.c", "include/linux/a.h")
    assert s.touched_symbols == ("new_name",)
    assert "new_name" in s.summary
    assert "diff --git a/mm/a.c" in provider.calls[0].text


def test_summarize_empty_diff_precondition():
    empty = Patch("e@x", "x", "a", None, "msg", (), None, "msg")
    gw, _ = scripted_gateway()
    with pytest.raises(PreconditionError):
        summarize_changes(empty, NO_CTX, gw)


def test_summarize_gateway_failure_is_pipeline_error():
    def boom(prompt):
        raise GatewayError("down")

    gw, _ = scripted_gateway(validate_summarize=boom)
    with pytest.raises(ValidationError):
        summarize_changes(patch(), NO_CTX, gw)


# rank


def test_rank_single_rule():
    (r,) = rules(1)
    gw, _ = scripted_gateway(validate_rank={"ranking": [r.rule_id]})
    assert rank_rules(summary(patch()), [r], NO_CTX, gw).rules == (r,)


def test_rank_returns_scripted_permutation():
    rs = rules(5)
    order = [rs[3], rs[0], rs[4], rs[1], rs[2]]
    gw, _ = scripted_gateway(validate_rank={"ranking": [r.rule_id for r in order] + ["Rbogus", rs[3].rule_id]})
    got = rank_rules(summary(patch()), rs, NO_CTX, gw)
    assert got.rules == tuple(order) and not got.fallback


def test_rank_top_r_limits():
    rs = rules(10)
    gw, _ = scripted_gateway(validate_rank={"ranking": [r.rule_id for r in rs]})
    assert len(rank_rules(summary(patch()), rs, NO_CTX, gw, top_r=3).rules) == 3


def test_rank_fallback_on_bad_output():
    rs = [Rule("wide", Category.LOGIC, frozenset({Source("a", "x"), Source("b", "y")}))] + rules(3)
    gw, _ = scripted_gateway(validate_rank="I cannot rank these")
    got = rank_rules(summary(patch()), rs, NO_CTX, gw, top_r=2)
    assert got.fallback and got.rules == (rs[0], rs[1])


def test_rank_empty_rule_set():
    gw, _ = scripted_gateway()
    with pytest.raises(PreconditionError):
        rank_rules(summary(patch()), [], NO_CTX, gw)


# generate


def test_generate_empty_ranked_rules_no_call():
    gw, provider = scripted_gateway()
    assert generate_issues(patch(), [], NO_CTX, gw).issues == []
    assert provider.calls == []


def test_gate_drops_fabricated_citation():
    (real,) = rules(1)
    answer = {
        "issues": [
            {"title": "Leaked reference", "description": "d1", "code_excerpt": "+\tput_page(page);", "rules": [real.rule_id]},
            {"title": "Made up", "description": "d2", "code_excerpt": "", "rules": ["R0000000000"]},
            {"title": "Uncited", "description": "d3", "rules": []},
        ]
    }
    gw, _ = scripted_gateway(validate_issues=answer)
    batch = generate_issues(patch(), [real], NO_CTX, gw, summary=summary(patch()))
    (issue,) = batch.issues
    assert issue.rules_used == (real,) and issue.code_excerpt == "+\tput_page(page);"
    assert [why for _, why in batch.rejected] == ["cites unknown rule(s) R0000000000", "cites no rule"]


def test_excerpt_not_in_patch_is_cleared():
    (real,) = rules(1)
    answer = {"issues": [{"title": "T", "description": "d", "code_excerpt": "kfree(page);", "rules": [real.rule_id]}]}
    gw, _ = scripted_gateway(validate_issues=answer)
    batch = generate_issues(patch(), [real], NO_CTX, gw)
    assert batch.issues[0].code_excerpt is None and batch.warnings


def test_rule_free_mode_ignores_citations():
    answer = {"issues": [{"title": "T", "description": "d", "rules": ["whatever"]}]}
    gw, provider = scripted_gateway(validate_issues_free=answer)
    (issue,) = generate_issues(patch(), [], NO_CTX, gw, mode=RULE_FREE).issues
    assert issue.rules_used == ()
    assert "Rules:" not in provider.calls[0].text


def test_generate_structured_failure_gives_empty_with_warning():
    gw, _ = scripted_gateway(validate_issues="nonsense")
    batch = generate_issues(patch(), rules(1), NO_CTX, gw)
    assert batch.issues == [] and batch.warnings


# batch filter


def two_patch_series():
    p1 = patch(mid="s1@x", subject="[PATCH 1/2] mm: add foo_store stub")
    p2 = patch(mid="s2@x", subject="[PATCH 2/2] mm: lock foo_store")
    return PatchSeries(None, (p1, p2))


def test_batch_filter_resolved_by_later_patch():
    series = two_patch_series()
    missing = Issue("Missing lock", "foo_store runs unlocked", None, "s1@x")
    other = Issue("Leak", "leaks a page", None, "s2@x")
    gw, _ = scripted_gateway(validate_batch_filter={"remove": [{"index": 1, "reason": "resolved-by-later-patch"}]})
    report = batch_filter(series, [missing, other], gw)
    assert report.issues == (other,)
    assert report.filtered[0].issue is missing and report.filtered[0].reason == "resolved-by-later-patch"


def test_batch_filter_fail_open():
    def boom(prompt):
        raise GatewayError("down")

    series = two_patch_series()
    issues = [Issue("A", "a", None, "s1@x")]
    gw, _ = scripted_gateway(validate_batch_filter=boom)
    report = batch_filter(series, issues, gw)
    assert report.unfiltered and list(report.issues) == issues


def test_batch_filter_empty_and_foreign():
    gw, provider = scripted_gateway()
    series = two_patch_series()
    assert batch_filter(series, [], gw).issues == ()
    assert provider.calls == []
    with pytest.raises(PreconditionError):
        batch_filter(series, [Issue("A", "a", None, "elsewhere@x")], gw)


def test_report_disjointness_enforced():
    from patchvet.validate import FilteredIssue

    i = Issue("A", "a", None, "x")
    with pytest.raises(ValueError):
        ValidationReport("s", (i,), (FilteredIssue(i, "duplicate"),))


# rendering


def test_render_empty_report():
    text = render_report(ValidationReport("s@x"))
    assert text == "# Validation report for s@x\n\nNo issues found.\n"


def test_render_two_rules_in_order():
    r1, r2 = rules(2)
    issue = Issue("Title", "Body", "+\tput_page(page);", "p1@x", (r2, r1))
    text = render_report(ValidationReport("p1@x", (issue,)))
    assert text.index("rule number 1") < text.index("rule number 0")
    assert text.count("  > - message-id: ") == 2 and text.count("  > - Author: ") == 2
    assert "> message-id: p1@x\n" in text
    doc = json.loads(report_json(ValidationReport("p1@x", (issue,))))
    assert [r["content"] for r in doc["issues"][0]["rules_used"]] == ["rule number 1", "rule number 0"]


# whole series


def test_validate_series_empty_rule_set_no_calls():
    gw, provider = scripted_gateway()
    series = PatchSeries(None, (patch(),))
    report = validate_series(series, RuleSetSnapshot(()), None, gw, ValidationConfig())
    assert report.issues == () and provider.calls == []


def test_validate_series_rule_based_end_to_end():
    rs = rules(3)
    snap = RuleSetSnapshot(tuple(rs))
    gw, provider = scripted_gateway(
        validate_summarize={"summary": "Adds put_page.", "symbols": ["put_page"]},
        validate_rank=lambda p: {"ranking": [rs[2].rule_id]},
        validate_issues={"issues": [{"title": "Double put", "description": "d", "rules": [rs[2].rule_id]}]},
        validate_batch_filter={"remove": []},
    )
    report = validate_series(PatchSeries(None, (patch(),)), snap, None, gw, ValidationConfig(top_r=1))
    (issue,) = report.issues
    assert issue.rules_used == (rs[2],)
    assert report.rule_set_digest == snap.digest
    # provenance soundness
    printed = {(s.message_id, s.author) for i in report.issues for r in i.rules_used for s in r.sources}
    assert printed <= {(s.message_id, s.author) for r in snap.rules for s in r.sources}
    assert [c.template_id for c in provider.calls] == [
        "validate_summarize", "validate_rank", "validate_issues", "validate_batch_filter"
    ]
