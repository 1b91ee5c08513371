import json
from pathlib import Path

import pytest

from patchvet.cli import EXIT_FIXTURE, EXIT_OK, EXIT_STRUCTURAL, build_parser, main, packaged_fixtures, resolve_config
from patchvet.rulestore import RuleSetSnapshot, save

FIX = packaged_fixtures()
ZSWAP = str(FIX / "patches" / "zswap.mbox")


@pytest.fixture
def store(tmp_path):
    path = tmp_path / "store"
    assert main(["--store", str(path), "ingest", str(FIX / "corpus" / "review.mbox")]) == EXIT_OK
    return str(path)


def test_fixtures_command(capsys):
    assert main(["fixtures"]) == EXIT_OK
    assert Path(capsys.readouterr().out.strip()) == FIX
    assert (FIX / "rules.jsonl").is_file()


def test_ingest_is_idempotent(store, capsys):
    capsys.readouterr()
    assert main(["--store", store, "ingest", str(FIX / "corpus" / "review.mbox")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "0 new messages" in out and "24 messages" in out


def test_stats_seeded_runs_identical(store, tmp_path, capsys):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert main(["--store", store, "--seed", "5", "stats", "--period", "all", "--sample", "4", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].startswith(b"# config-digest: ")


def test_validate_with_empty_rule_set_makes_no_calls(tmp_path, capsys):
    rules = tmp_path / "empty.jsonl"
    save(RuleSetSnapshot(()), rules)
    empty_fixtures = tmp_path / "nothing"
    empty_fixtures.mkdir()
    rc = main(["--replay", str(empty_fixtures), "--rules", str(rules), "--store", str(tmp_path / "s"), "validate", ZSWAP])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert out.endswith("No issues found.\n")


def test_replay_miss_exits_2(tmp_path, capsys):
    empty_fixtures = tmp_path / "nothing"
    empty_fixtures.mkdir()
    rc = main(["--replay", str(empty_fixtures), "--store", str(tmp_path / "s"), "validate", ZSWAP, "--mode", "rule_free"])
    assert rc == EXIT_FIXTURE
    assert "replay fixture missing" in capsys.readouterr().err


def test_missing_target_is_structural(tmp_path, capsys):
    rc = main(["--replay", str(tmp_path), "--store", str(tmp_path / "s"), "validate", "nope@example.com", "--mode", "rule_free"])
    assert rc == EXIT_STRUCTURAL


def test_live_mode_needs_provider_config(tmp_path, capsys):
    rc = main(["--store", str(tmp_path / "s"), "validate", ZSWAP, "--mode", "rule_free"])
    assert rc == EXIT_STRUCTURAL
    assert "provider_config" in capsys.readouterr().err


def test_config_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[patchvet]\nstore = corpus-dir\nseed = 3\n[validate]\ntop_r = 5\n[eval]\nn = 4\nweak_verifier = yes\n")
    parser = build_parser()
    cfg = resolve_config(parser.parse_args(["-c", str(ini), "validate", "x", "--top-r", "7"]))
    assert cfg.top_r == 7  # flag beats file
    assert cfg.seed == 3 and cfg.n == 4  # file beats default
    assert cfg.k == 3  # default
    assert cfg.store == str(tmp_path / "corpus-dir")
    assert cfg.effective_threshold == 90
    cfg = resolve_config(parser.parse_args(["-c", str(ini), "eval", "gcs", "--pairs", "p", "--threshold", "0"]))
    assert cfg.effective_threshold == 0


def test_unknown_config_key_is_rejected(tmp_path, capsys):
    ini = tmp_path / "run.ini"
    ini.write_text("[validate]\ntop_k = 5\n")
    assert main(["-c", str(ini), "fixtures"]) == EXIT_STRUCTURAL
    assert "top_k" in capsys.readouterr().err


def test_replay_and_record_are_exclusive():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--replay", "a", "--record", "b", "fixtures"])


def test_kappa_command(capsys):
    assert main(["eval", "kappa", "--labels", str(FIX / "labels.csv")]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert (doc["tp"], doc["fp"], doc["fn"], doc["tn"]) == (39, 2, 1, 38)
    assert doc["kappa"] == pytest.approx(0.925, abs=1e-3)
    assert main(["eval", "kappa", "--labels", str(FIX / "labels.csv"), "--min-confidence", "90"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["n"] < 80


def test_kappa_rejects_bad_labels(tmp_path, capsys):
    path = tmp_path / "l.csv"
    path.write_text("human,verifier\nyes,maybe\n")
    assert main(["eval", "kappa", "--labels", str(path)]) == EXIT_STRUCTURAL


def test_validate_json_output(tmp_path):
    out = tmp_path / "r.json"
    rc = main(["--replay", str(FIX / "replay"), "--rules", str(FIX / "rules.jsonl"), "--source-tree", str(FIX / "tree"),
               "--store", str(tmp_path / "s"), "validate", ZSWAP, "--out", str(tmp_path / "r.txt"), "--json", str(out)])
    assert rc == EXIT_OK
    doc = json.loads(out.read_text())
    assert [i["title"] for i in doc["issues"]] == ["Race condition when accessing per-cpu data in preemptible context"]
    assert (tmp_path / "s" / "symbols.jsonl").is_file()
