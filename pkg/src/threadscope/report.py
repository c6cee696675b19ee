"""Aggregate views as tab-separated data files: weekly post counts,
entity count/share tables, month-to-month entity trends, and topic
artifact exports (keywords, word-cloud data, assignments, frequencies).

All writers are deterministic: given identical inputs and seeds the
emitted bytes are identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .nerdata import DEFAULT_CATEGORIES
from .tagger import EntityCount
from .topics import TopicAssignment, TopicModel, top_words


def _utc_date(created_utc: int) -> date:
    return datetime.fromtimestamp(created_utc, tz=timezone.utc).date()


def week_start_of(day: date) -> date:
    """The Sunday on or before the given date."""
    return day - timedelta(days=(day.weekday() + 1) % 7)


def _month_of(created_utc: int) -> str:
    return datetime.fromtimestamp(created_utc, tz=timezone.utc).strftime("%Y-%m")


def _month_range(first: str, last: str) -> list[str]:
    year, month = map(int, first.split("-"))
    end_year, end_month = map(int, last.split("-"))
    months: list[str] = []
    while (year, month) <= (end_year, end_month):
        months.append(f"{year:04d}-{month:02d}")
        month += 1
        if month > 12:
            month = 1
            year += 1
    return months


def percent_round_half_up(count: int, total: int) -> int:
    """round(100*count/total) with exact integer half-up arithmetic."""
    if total == 0:
        return 0
    return (200 * count + total) // (2 * total)


@dataclass(frozen=True)
class WeekBucket:
    week_start: date
    count: int


def weekly_post_counts(
    documents: Sequence,
    date_from: date | None = None,
    date_to: date | None = None,
) -> list[WeekBucket]:
    """Bucket posts by the Sunday on or before their UTC date, zero-filled
    across the (possibly derived) report range."""
    days = [_utc_date(doc.created_utc) for doc in documents]
    if date_from is None:
        if not days:
            return []
        date_from = min(days)
    if date_to is None:
        date_to = max(days) if days else date_from
    counts: dict[date, int] = {}
    start = week_start_of(date_from)
    last = week_start_of(date_to)
    week = start
    while week <= last:
        counts[week] = 0
        week += timedelta(days=7)
    for day in days:
        counts[week_start_of(day)] += 1
    return [WeekBucket(week_start=w, count=c) for w, c in sorted(counts.items())]


def weekly_table(buckets: Sequence[WeekBucket]) -> str:
    lines = ["week_start\tposts"]
    for bucket in buckets:
        lines.append(f"{bucket.week_start.isoformat()}\t{bucket.count}")
    return "\n".join(lines) + "\n"


# Table-style truncation: top 3 rows for DIST, top 8 for everything else.
TRUNCATE_DIST = 3
TRUNCATE_OTHER = 8


@dataclass(frozen=True)
class EntityReport:
    """Per-subreddit category totals plus ranked (category, name, count,
    share) rows, optionally truncated."""

    subreddit: str
    totals: dict[str, int]
    rows: tuple[EntityCount, ...]


def entity_report(
    counts: Mapping[str, Sequence[EntityCount]],
    truncate: bool = False,
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> list[EntityReport]:
    reports: list[EntityReport] = []
    for subreddit in sorted(counts):
        rows = list(counts[subreddit])
        totals = {category: 0 for category in categories}
        for row in rows:
            totals[row.category] = totals.get(row.category, 0) + row.count
        if truncate:
            kept: list[EntityCount] = []
            per_category: dict[str, int] = {}
            for row in rows:
                limit = TRUNCATE_DIST if row.category == "DIST" else TRUNCATE_OTHER
                seen = per_category.get(row.category, 0)
                if seen < limit:
                    kept.append(row)
                    per_category[row.category] = seen + 1
            rows = kept
        reports.append(
            EntityReport(subreddit=subreddit, totals=totals, rows=tuple(rows))
        )
    return reports


def entity_table(reports: Sequence[EntityReport]) -> str:
    lines = ["subreddit\tcategory\tname\tcount\tshare_pct"]
    for report in reports:
        for row in report.rows:
            total = report.totals[row.category]
            pct = percent_round_half_up(row.count, total)
            lines.append(
                f"{report.subreddit}\t{row.category}\t{row.name}\t{row.count}\t{pct}"
            )
    return "\n".join(lines) + "\n"


def entity_totals_table(reports: Sequence[EntityReport]) -> str:
    lines = ["subreddit\tcategory\ttotal"]
    for report in reports:
        for category, total in report.totals.items():
            lines.append(f"{report.subreddit}\t{category}\t{total}")
    return "\n".join(lines) + "\n"


def counts_from_mentions(
    mentions: Sequence[tuple[str, str, str]],
) -> dict[str, list[EntityCount]]:
    """Aggregate (subreddit, category, name) mention rows the same way the
    tagger does when counting live: per subreddit, categories sorted, rows
    by count descending then name, share within the category."""
    nested: dict[str, dict[str, dict[str, int]]] = {}
    for subreddit, category, name in mentions:
        per_category = nested.setdefault(subreddit, {}).setdefault(category, {})
        per_category[name] = per_category.get(name, 0) + 1
    out: dict[str, list[EntityCount]] = {}
    for subreddit in sorted(nested):
        rows: list[EntityCount] = []
        for category in sorted(nested[subreddit]):
            names = nested[subreddit][category]
            total = sum(names.values())
            for name, count in sorted(names.items(), key=lambda kv: (-kv[1], kv[0])):
                rows.append(
                    EntityCount(
                        category=category, name=name, count=count, share=count / total
                    )
                )
        out[subreddit] = rows
    return out


@dataclass(frozen=True)
class MonthlySeries:
    entity: str
    months: tuple[str, ...]
    counts: tuple[int, ...]


def monthly_entity_trends(
    documents: Sequence,
    entities: Sequence[str],
    doc_mentions: Mapping[str, Sequence[tuple[str, str]]],
) -> list[MonthlySeries]:
    """Mention counts per UTC calendar month for each selected normalized
    entity name, zero-filled over the documents' month span."""
    if not documents:
        return [MonthlySeries(entity=e, months=(), counts=()) for e in entities]
    doc_months = {doc.post_id: _month_of(doc.created_utc) for doc in documents}
    months = _month_range(min(doc_months.values()), max(doc_months.values()))
    index = {month: i for i, month in enumerate(months)}
    series: list[MonthlySeries] = []
    for entity in entities:
        counts = [0] * len(months)
        for post_id, mentions in doc_mentions.items():
            month = doc_months.get(post_id)
            if month is None:
                continue
            for _, name in mentions:
                if name == entity:
                    counts[index[month]] += 1
        series.append(
            MonthlySeries(entity=entity, months=tuple(months), counts=tuple(counts))
        )
    return series


def trends_table(series: Sequence[MonthlySeries]) -> str:
    lines = ["entity\tmonth\tcount"]
    for one in series:
        for month, count in zip(one.months, one.counts):
            lines.append(f"{one.entity}\t{month}\t{count}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TopicFrequencyRow:
    topic: int
    count: int
    percentage: int


def topic_frequency_rows(
    frequencies: Sequence[int],
) -> list[TopicFrequencyRow]:
    total = sum(frequencies)
    return [
        TopicFrequencyRow(
            topic=topic,
            count=count,
            percentage=percent_round_half_up(count, total),
        )
        for topic, count in enumerate(frequencies)
    ]


def frequency_table(rows: Sequence[TopicFrequencyRow]) -> str:
    lines = ["topic\tcount\tpercentage"]
    for row in rows:
        lines.append(f"{row.topic}\t{row.count}\t{row.percentage}")
    return "\n".join(lines) + "\n"


def export_topic_artifacts(
    model: TopicModel,
    assignments: Sequence[TopicAssignment],
    frequencies: Sequence[int],
    out_dir: str | Path,
    corpus_id: str,
    force: bool = False,
) -> Path:
    """Write keywords, per-topic word-cloud data, the extended assignment
    table, and topic frequencies under <out_dir>/<corpus_id>/topics/.

    Refuses to overwrite an existing topics directory unless force is set.
    """
    target = Path(out_dir) / corpus_id / "topics"
    if target.exists() and not force:
        raise FileExistsError(f"{target} already exists; pass force to overwrite")
    target.mkdir(parents=True, exist_ok=True)

    lists = top_words(model)
    assert model.vocab is not None
    lines = [f"vocabulary_size\t{model.vocab.size}"]
    for topic, pairs in enumerate(lists):
        for rank, (term, weight) in enumerate(pairs, start=1):
            lines.append(f"topic{topic}\t{rank}\t{term}\t{weight:.6f}")
    (target / "keywords.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    for topic, pairs in enumerate(lists):
        cloud = ["term\tweight"]
        for term, weight in pairs:
            cloud.append(f"{term}\t{weight:.6f}")
        (target / f"wordcloud_topic{topic}.tsv").write_text(
            "\n".join(cloud) + "\n", encoding="utf-8"
        )

    table = ["post_id\ttopic\tprobability"]
    for assignment in assignments:
        table.append(
            f"{assignment.post_id}\t{assignment.topic}\t{assignment.probability:.6f}"
        )
    (target / "assignments.tsv").write_text("\n".join(table) + "\n", encoding="utf-8")

    (target / "topic_frequencies.tsv").write_text(
        frequency_table(topic_frequency_rows(frequencies)), encoding="utf-8"
    )
    return target
