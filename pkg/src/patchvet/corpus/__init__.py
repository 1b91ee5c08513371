from patchvet.corpus.diff import ADD, CONTEXT, REMOVE, DiffHunk, parse_hunks
from patchvet.corpus.messages import EmailMessage, parse_mbox
from patchvet.corpus.patches import (
    CoverLetter,
    Patch,
    PatchPair,
    PatchSeries,
    assemble_series,
    parse_patch,
    series_index,
)
from patchvet.corpus.stats import StatsReport, corpus_stats, write_stats_csv
from patchvet.corpus.store import CorpusStore
from patchvet.corpus.threads import DiscussionThread, ThreadingReport, build_threads

__all__ = [
    "ADD",
    "CONTEXT",
    "REMOVE",
    "CorpusStore",
    "CoverLetter",
    "DiffHunk",
    "DiscussionThread",
    "EmailMessage",
    "Patch",
    "PatchPair",
    "PatchSeries",
    "StatsReport",
    "ThreadingReport",
    "assemble_series",
    "build_threads",
    "corpus_stats",
    "parse_hunks",
    "parse_mbox",
    "parse_patch",
    "series_index",
    "write_stats_csv",
]
