"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

from patchvet import __version__
from patchvet.codectx import build_index, load_or_build
from patchvet.config import RunConfig, load_run_config
from patchvet.corpus import CorpusStore, assemble_series, build_threads, corpus_stats, parse_mbox, write_stats_csv
from patchvet.corpus.messages import DecodeFailure, maybe_gunzip, parse_message
from patchvet.corpus.patches import Patch, PatchSeries, parse_patch
from patchvet.errors import ConfigError, PatchvetError, StructuralError
from patchvet.gcseval import (
    EvalConfig,
    FileSystem,
    PipelineSystem,
    cohens_kappa,
    evaluate,
    load_pairs,
    write_aggregate_csv,
    write_results,
)
from patchvet.gcseval.systems import GENERATE_TEMPERATURE
from patchvet.llmgate import Gateway, FixtureMissingError
from patchvet.llmgate.config import load_provider_config
from patchvet.rulegen import AuditLog, RuleGenerator, write_progress_csv
from patchvet.rulestore import RuleSetSnapshot, load as load_rules, save as save_rules
from patchvet.validate import ValidationConfig, render_report, report_json, validate_series

log = logging.getLogger("patchvet")

EXIT_OK, EXIT_STRUCTURAL, EXIT_FIXTURE = 0, 1, 2


def packaged_fixtures() -> Path:
    return Path(str(resources.files("patchvet") / "fixtures"))


# helpers


def _gateway(cfg: RunConfig) -> Gateway:
    fixtures = cfg.fixtures or None
    if cfg.gateway == "replay":
        return Gateway(mode="replay", fixtures_dir=fixtures)
    if not cfg.provider_config:
        raise ConfigError(f"gateway mode {cfg.gateway!r} needs provider_config")
    pc = load_provider_config(cfg.provider_config)
    return Gateway(
        pc.build(),
        mode=cfg.gateway,
        fixtures_dir=fixtures,
        concurrency=pc.concurrency,
        max_retries=pc.max_retries,
        backoff_base=pc.backoff_base,
    )


def _snapshot(cfg: RunConfig) -> RuleSetSnapshot | None:
    if cfg.mode == "rule_free":
        return None
    path = Path(cfg.rules)
    if not path.exists():
        raise ConfigError(f"rule set {path} not found (use --mode rule_free to validate without rules)")
    return load_rules(path)


def _index(cfg: RunConfig):
    if not cfg.source_tree:
        return None
    root = Path(cfg.source_tree)
    if not root.is_dir():
        raise ConfigError(f"source tree {root} is not a directory")
    try:
        Path(cfg.store).mkdir(parents=True, exist_ok=True)
        return load_or_build(root, Path(cfg.store) / "symbols.jsonl")
    except OSError as exc:
        log.info("index not persisted: %s", exc)
        return build_index(root)


def _series_from_input(target: str, cfg: RunConfig) -> PatchSeries:
    path = Path(target)
    if path.is_file():
        data = maybe_gunzip(path.read_bytes())
        messages = parse_mbox(data) if data.lstrip(b"\r\n").startswith(b"From ") else [parse_message(data)]
        series = assemble_series(messages)
    else:
        store = CorpusStore(cfg.store)
        mid = target.strip("<>")
        if mid not in store:
            raise StructuralError(f"{target} is neither a file nor a message-id in {cfg.store}")
        patch = parse_patch(store.get(mid))
        series = PatchSeries(None, (patch,) if isinstance(patch, Patch) else ())
    if not series.patches:
        raise StructuralError(f"{target} contains no patch")
    return series


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# commands


def cmd_ingest(args, cfg: RunConfig) -> int:
    store = CorpusStore(cfg.store)
    total = 0
    for name in args.mbox:
        failures: list[DecodeFailure] = []
        added = store.ingest(Path(name).read_bytes(), failures)
        total += added
        for f in failures:
            log.warning("%s: offset %d: %s", name, f.offset, f.reason)
        print(f"{name}: {added} new messages, {len(failures)} undecodable")
    print(f"store {cfg.store}: {len(store)} messages")
    return EXIT_OK


def cmd_stats(args, cfg: RunConfig) -> int:
    store = CorpusStore(cfg.store)
    maintainers = []
    if args.maintainers:
        maintainers = [ln.strip() for ln in Path(args.maintainers).read_text().splitlines() if ln.strip()]
    report = corpus_stats(
        build_threads(store.messages()), cfg.seed, args.sample, maintainers, args.period, args.unit
    )
    out = args.out
    if out in (None, "-"):
        write_stats_csv(report, sys.stdout, cfg.digest)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            write_stats_csv(report, fh, cfg.digest)
    return EXIT_OK


def _select_threads(threads, selection: str):
    if selection == "all":
        return threads
    if selection.startswith("first:"):
        return threads[: int(selection.split(":", 1)[1])]
    wanted = [ln.strip().strip("<>") for ln in Path(selection).read_text().splitlines() if ln.strip()]
    by_root = {t.root_id: t for t in threads}
    missing = [w for w in wanted if w not in by_root]
    if missing:
        raise StructuralError(f"threads not in store: {', '.join(missing)}")
    return [by_root[w] for w in wanted]


def cmd_rules_build(args, cfg: RunConfig) -> int:
    store = CorpusStore(cfg.store)
    threads = _select_threads(build_threads(store.messages()), args.threads)
    audit = AuditLog(args.audit)
    gen = RuleGenerator(_gateway(cfg), cfg.batch_size, cfg.merge_threshold, audit)
    rules = gen.run(threads)
    save_rules(RuleSetSnapshot(tuple(rules), cfg.digest), cfg.rules)
    if args.progress:
        with open(args.progress, "w", encoding="utf-8", newline="") as fh:
            write_progress_csv(gen.rows, fh, cfg.digest)
    last = gen.rows[-1] if gen.rows else None
    print(f"{len(threads)} threads, {len(rules)} rules -> {cfg.rules}")
    if last is not None:
        print(
            f"extracted {last.extracted}, filtered {last.filtered}, "
            f"categorized {last.logic}+{last.convention}, "
            f"consolidated {last.consolidated_logic}+{last.consolidated_convention}"
        )
    if gen.failed_threads:
        print(f"{len(gen.failed_threads)} threads failed extraction", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args, cfg: RunConfig) -> int:
    series = _series_from_input(args.target, cfg)
    vcfg = ValidationConfig(cfg.mode, cfg.top_r, cfg.context_budget, cfg.rank_with_context)
    report = validate_series(series, _snapshot(cfg), _index(cfg), _gateway(cfg), vcfg)
    _write(args.out, render_report(report))
    if args.json:
        _write(args.json, report_json(report))
    return EXIT_OK


def cmd_eval_gcs(args, cfg: RunConfig) -> int:
    store = CorpusStore(cfg.store)
    pairs = load_pairs(args.pairs, store)
    gateway = _gateway(cfg)
    if args.issue_sets:
        system = FileSystem(args.issue_sets)
    else:
        vcfg = ValidationConfig(
            cfg.mode, cfg.top_r, cfg.context_budget, cfg.rank_with_context, temperature=GENERATE_TEMPERATURE
        )
        system = PipelineSystem(_snapshot(cfg), _index(cfg), gateway, vcfg)
    if cfg.weak_verifier and cfg.threshold is None:
        log.warning("verifier flagged weaker than the system under test; using confidence threshold 90")
    ecfg = EvalConfig(cfg.n, cfg.k, cfg.effective_threshold, cfg.weak_verifier)
    results = evaluate(pairs, system, gateway, ecfg)
    with open(args.out, "w", encoding="utf-8") as fh:
        write_results(results, fh)
    agg = args.aggregate or str(Path(args.out).with_suffix(".csv"))
    with open(agg, "w", encoding="utf-8", newline="") as fh:
        write_aggregate_csv(results, fh, cfg.digest)
    failed = [r for r in results if r.error]
    print(f"{len(results)} pairs scored, {len(failed)} failed -> {args.out}, {agg}")
    return EXIT_STRUCTURAL if failed else EXIT_OK


def _label(raw: str) -> int:
    text = raw.strip().lower()
    if text in ("1", "yes", "y", "true"):
        return 1
    if text in ("0", "no", "n", "false"):
        return 0
    raise StructuralError(f"not a binary label: {raw!r}")


def cmd_eval_kappa(args, cfg: RunConfig) -> int:
    import csv

    with open(args.labels, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    if rows and not {"human", "verifier"} <= set(rows[0]):
        raise StructuralError("labels file needs 'human' and 'verifier' columns")
    if args.min_confidence is not None:
        if rows and "confidence" not in rows[0]:
            raise StructuralError("--min-confidence needs a 'confidence' column")
        rows = [r for r in rows if int(r["confidence"]) >= args.min_confidence]
    result = cohens_kappa([_label(r["human"]) for r in rows], [_label(r["verifier"]) for r in rows])
    print(
        json.dumps(
            {
                "n": result.n,
                "kappa": round(result.kappa, 6),
                "ci95": [round(result.ci_low, 6), round(result.ci_high, 6)],
                "tp": result.tp,
                "fp": result.fp,
                "fn": result.fn,
                "tn": result.tn,
            },
            sort_keys=True,
        )
    )
    return EXIT_OK


def cmd_fixtures(args, cfg: RunConfig) -> int:
    print(packaged_fixtures())
    return EXIT_OK


# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="patchvet", description="Rule-backed review of kernel patch proposals.")
    p.add_argument("--version", action="version", version=f"patchvet {__version__}")
    p.add_argument("-c", "--config", help="INI run configuration")
    p.add_argument("--store", help="corpus store directory")
    p.add_argument("--rules", help="rule-set file")
    p.add_argument("--source-tree", dest="source_tree", help="source tree to index for context")
    p.add_argument("--provider-config", dest="provider_config", help="model endpoint configuration")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--replay", metavar="DIR", help="serve model answers from recorded fixtures")
    g.add_argument("--record", metavar="DIR", help="call the provider and record its answers")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="add mbox archives to the corpus store")
    s.add_argument("mbox", nargs="+")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("stats", help="review statistics per period as CSV")
    s.add_argument("--period", choices=("year", "month", "all"), default="year")
    s.add_argument("--sample", type=int, help="threads (or messages) sampled per period")
    s.add_argument("--unit", choices=("thread", "message"), default="thread")
    s.add_argument("--maintainers", help="file of maintainer addresses, one per line")
    s.add_argument("--out", help="output CSV (default stdout)")
    s.set_defaults(func=cmd_stats)

    rules = sub.add_parser("rules", help="rule-set commands")
    rsub = rules.add_subparsers(dest="rules_command", required=True)
    s = rsub.add_parser("build", help="generate a rule set from review threads")
    s.add_argument("--threads", default="all", help="'all', 'first:N', or a file of thread root message-ids")
    s.add_argument("--progress", help="per-thread progression CSV")
    s.add_argument("--audit", help="JSON lines log of stage decisions")
    s.add_argument("--batch-size", dest="batch_size", type=int)
    s.add_argument("--merge-threshold", dest="merge_threshold", type=float)
    s.set_defaults(func=cmd_rules_build)

    s = sub.add_parser("validate", help="review a patch file or a stored message-id")
    s.add_argument("target")
    s.add_argument("--mode", choices=("rule_based", "rule_free"))
    s.add_argument("--top-r", dest="top_r", type=int)
    s.add_argument("--context-budget", dest="context_budget", type=int)
    s.add_argument("--out", help="text report (default stdout)")
    s.add_argument("--json", help="structured report")
    s.set_defaults(func=cmd_validate)

    ev = sub.add_parser("eval", help="evaluation commands")
    esub = ev.add_subparsers(dest="eval_command", required=True)
    s = esub.add_parser("gcs", help="ground-truth coverage scores over buggy/fix pairs")
    s.add_argument("--pairs", required=True, help="JSON lines {buggy_message_id, fix_message_id, label}")
    s.add_argument("--N", dest="n", type=int)
    s.add_argument("--K", dest="k", type=int)
    s.add_argument("--threshold", type=int)
    s.add_argument("--weak-verifier", dest="weak_verifier", action="store_true", default=None)
    s.add_argument("--mode", choices=("rule_based", "rule_free"))
    s.add_argument("--issue-sets", dest="issue_sets", help="score precomputed issue sets instead of the pipeline")
    s.add_argument("--out", default="gcs_results.jsonl")
    s.add_argument("--aggregate", help="aggregate CSV (default: results path with .csv)")
    s.set_defaults(func=cmd_eval_gcs)
    s = esub.add_parser("kappa", help="Cohen's kappa between human and verifier labels")
    s.add_argument("--labels", required=True, help="CSV with human,verifier[,confidence] columns")
    s.add_argument("--min-confidence", dest="min_confidence", type=int)
    s.set_defaults(func=cmd_eval_kappa)

    s = sub.add_parser("fixtures", help="print the packaged fixture directory")
    s.set_defaults(func=cmd_fixtures)
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_run_config(args.config)
    overrides = {k: v for k, v in vars(args).items() if k not in ("config", "func", "command")}
    if args.replay:
        overrides.update(gateway="replay", fixtures=args.replay)
    elif args.record:
        overrides.update(gateway="record", fixtures=args.record)
    return cfg.merged(overrides)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except FixtureMissingError as exc:
        print(f"patchvet: {exc}", file=sys.stderr)
        return EXIT_FIXTURE
    except (PatchvetError, OSError, ValueError, KeyError) as exc:
        print(f"patchvet: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL


if __name__ == "__main__":
    sys.exit(main())
