"""Mailing-list review statistics over sampled threads."""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from patchvet.corpus.patches import CoverLetter, Patch, is_patch_subject, parse_patch
from patchvet.corpus.threads import DiscussionThread

CSV_COLUMNS = [
    "period",
    "total",
    "patch_threads",
    "unreviewed_pct",
    "p50_latency_s",
    "p90_latency_s",
    "maintainer_reply_pct",
]


@dataclass(frozen=True)
class PeriodStats:
    period: str
    total: int
    patch_threads: int
    unreviewed: int
    latencies_s: tuple[float, ...]
    replies: int
    maintainer_replies: int

    @property
    def unreviewed_fraction(self) -> float:
        return self.unreviewed / self.patch_threads if self.patch_threads else 0.0

    @property
    def maintainer_reply_fraction(self) -> float:
        return self.maintainer_replies / self.replies if self.replies else 0.0

    @property
    def p50_latency_s(self) -> float | None:
        return percentile(self.latencies_s, 50)

    @property
    def p90_latency_s(self) -> float | None:
        return percentile(self.latencies_s, 90)


@dataclass(frozen=True)
class StatsReport:
    seed: int
    sample_size: int | None
    unit: str
    periods: tuple[PeriodStats, ...] = field(default_factory=tuple)


def percentile(values: Sequence[float], q: float) -> float | None:
    """Linear-interpolation percentile; None for no data."""
    if not values:
        return None
    xs = sorted(values)
    pos = (len(xs) - 1) * q / 100.0
    lo = int(pos)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (xs[hi] - xs[lo]) * (pos - lo)


def fisher_yates_sample(items: Sequence, k: int, rng: random.Random) -> list:
    """First *k* slots of a seeded partial Fisher-Yates shuffle."""
    pool = list(items)
    k = min(k, len(pool))
    for i in range(k):
        j = rng.randrange(i, len(pool))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


def period_of(thread: DiscussionThread, period: str) -> str:
    date = thread.root.date
    if period == "all":
        return "all"
    if date is None:
        return "unknown"
    if period == "year":
        return f"{date.year:04d}"
    if period == "month":
        return f"{date.year:04d}-{date.month:02d}"
    raise ValueError(f"unknown period {period!r}")


def is_patch_thread(thread: DiscussionThread) -> bool:
    if is_patch_subject(thread.root.subject):
        return True
    return isinstance(parse_patch(thread.root), (Patch, CoverLetter))


def first_reply_latency(thread: DiscussionThread) -> float | None:
    root_date = thread.root.date
    dates = [m.date for m in thread.replies if m.date is not None]
    if root_date is None or not dates:
        return None
    return (min(dates) - root_date).total_seconds()


def corpus_stats(
    threads: Iterable[DiscussionThread],
    seed: int,
    sample_size: int | None = None,
    maintainers: Iterable[str] = (),
    period: str = "year",
    unit: str = "thread",
) -> StatsReport:
    """Per-period review statistics on a seeded sample of threads.

    ``unit="thread"`` samples threads directly; ``unit="message"`` samples
    messages and keeps the threads they belong to. A thread is unreviewed
    when its root has no replies at all.
    """
    if unit not in ("thread", "message"):
        raise ValueError(f"unknown sampling unit {unit!r}")
    maint = {a.strip().lower() for a in maintainers if a.strip()}
    buckets: dict[str, list[DiscussionThread]] = {}
    for t in threads:
        buckets.setdefault(period_of(t, period), []).append(t)

    rows = []
    for key in sorted(buckets):
        population = buckets[key]
        rng = random.Random(f"{seed}:{key}")
        if not sample_size:
            sample = list(population)
        elif unit == "thread":
            sample = fisher_yates_sample(population, sample_size, rng)
        else:
            owner = {}
            for t in population:
                for m in t.members:
                    owner[m.message_id] = t
            picked = fisher_yates_sample(sorted(owner), sample_size, rng)
            sample = list({id(owner[mid]): owner[mid] for mid in picked}.values())
        rows.append(_period_row(key, sample, maint))
    return StatsReport(seed, sample_size, unit, tuple(rows))


def _period_row(key: str, sample: list[DiscussionThread], maint: set[str]) -> PeriodStats:
    patch_threads = unreviewed = replies = maint_replies = 0
    latencies = []
    for t in sample:
        replies += len(t.replies)
        maint_replies += sum(1 for m in t.replies if m.address in maint)
        if not is_patch_thread(t):
            continue
        patch_threads += 1
        if not t.replies:
            unreviewed += 1
            continue
        lat = first_reply_latency(t)
        if lat is not None:
            latencies.append(lat)
    return PeriodStats(key, len(sample), patch_threads, unreviewed, tuple(latencies), replies, maint_replies)


def _fmt(value: float | None, digits: int) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def write_stats_csv(report: StatsReport, out: TextIO, config_digest: str = "") -> None:
    out.write(f"# config-digest: {config_digest}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.periods:
        writer.writerow(
            [
                row.period,
                row.total,
                row.patch_threads,
                _fmt(100.0 * row.unreviewed_fraction, 3),
                _fmt(row.p50_latency_s, 1),
                _fmt(row.p90_latency_s, 1),
                _fmt(100.0 * row.maintainer_reply_fraction, 3),
            ]
        )
