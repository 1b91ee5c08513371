import json
import random
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patchvet.rulegen import Category, Rule, Source
from patchvet.rulestore import (
    RuleInvariantError,
    RuleSetSnapshot,
    SchemaVersionError,
    load,
    query,
    save,
)

WHEN = datetime(2025, 1, 2, 3, 4, 5, tzinfo=timezone.utc)


def random_rule(rng):
    text = lambda: "".join(rng.choice("abcxyz é_-→ \n\t\"\\") for _ in range(rng.randint(1, 40)))
    n = rng.randint(1, 6)
    sources = frozenset(Source(f"<m{rng.randint(0, 50)}@x>", f"A{rng.randint(0, 5)} <a@x>") for _ in range(n))
    return Rule(
        "rule " + text(),
        rng.choice(list(Category)),
        sources,
        tuple(text() for _ in range(rng.randint(0, 4))),
    )


def random_snapshot(n, seed):
    rng = random.Random(seed)
    return RuleSetSnapshot(tuple(random_rule(rng) for _ in range(n)), "cfg", WHEN)


def test_empty_round_trip(tmp_path):
    snap = RuleSetSnapshot((), "d", WHEN)
    assert load(save(snap, tmp_path / "r.jsonl")) == snap


def test_thousand_rule_round_trip(tmp_path):
    snap = random_snapshot(1000, 7)
    back = load(save(snap, tmp_path / "r.jsonl"))
    assert back == snap
    assert [r.history for r in back.rules] == [r.history for r in snap.rules]
    assert back.digest == snap.digest


@settings(max_examples=30)
@given(st.integers(0, 40), st.integers(0, 2**32))
def test_round_trip_property(tmp_path_factory, n, seed):
    path = tmp_path_factory.mktemp("rs") / "r.jsonl"
    snap = random_snapshot(n, seed)
    assert load(save(snap, path)) == snap


def test_file_layout_is_diffable(tmp_path):
    rule = Rule("Use smp_mb() after atomic_read().", Category.LOGIC,
                frozenset({Source("b@x", "Bob <b@x>"), Source("a@x", "Al <a@x>")}), ("old",))
    path = save(RuleSetSnapshot((rule,), "abc", WHEN), tmp_path / "r.jsonl")
    header, line = path.read_text(encoding="utf-8").splitlines()
    assert json.loads(header) == {"schema_version": 1, "created_at": "2025-01-02T03:04:05+00:00",
                                  "generation_config_digest": "abc", "rule_count": 1}
    doc = json.loads(line)
    assert list(doc) == sorted(doc)
    assert [s["message_id"] for s in doc["sources"]] == ["a@x", "b@x"]
    assert doc["diversity_level"] == pytest.approx(20.0)


def test_unknown_schema_version_rejected(tmp_path):
    path = save(random_snapshot(3, 1), tmp_path / "r.jsonl")
    lines = path.read_text().splitlines()
    head = json.loads(lines[0])
    head["schema_version"] = 999
    path.write_text("\n".join([json.dumps(head)] + lines[1:]) + "\n")
    with pytest.raises(SchemaVersionError, match="999"):
        load(path)


def test_invariant_violation_names_rule(tmp_path):
    bad = Rule("orphan", Category.LOGIC, frozenset())
    with pytest.raises(RuleInvariantError) as exc:
        save(RuleSetSnapshot((bad,), "", WHEN), tmp_path / "r.jsonl")
    assert exc.value.rule_id == bad.rule_id and bad.rule_id in str(exc.value)
    assert not (tmp_path / "r.jsonl").exists()


def test_tampered_diversity_rejected(tmp_path):
    path = save(random_snapshot(1, 2), tmp_path / "r.jsonl")
    head, line = path.read_text().splitlines()
    doc = json.loads(line)
    doc["diversity_level"] += 1
    path.write_text(head + "\n" + json.dumps(doc) + "\n")
    with pytest.raises(RuleInvariantError, match="diversity"):
        load(path)


def make(content, n_sources, cat=Category.LOGIC):
    return Rule(content, cat, frozenset(Source(f"m{i}", f"a{i}") for i in range(n_sources)))


def test_query_filters_and_order():
    rules = (make("b rule", 1), make("Insert a Memory  Barrier before reading the flag", 2), make("a rule", 1), make("top", 3))
    snap = RuleSetSnapshot(rules, "", WHEN)
    assert [r.content for r in query(snap)] == ["top", "Insert a Memory  Barrier before reading the flag", "a rule", "b rule"]
    assert query(snap, Category.CONVENTION) == []
    assert [r.content for r in query(snap, text="memory barrier")] == ["Insert a Memory  Barrier before reading the flag"]
    assert query(snap, "Logic", "rule") == [rules[2], rules[0]]
