"""Retrieval evaluation: precision metrics, found/relevant-found deltas
with sign buckets, and three-way system comparison.

The delta machinery quantifies what switching from a baseline configuration
to a semantic one does to each query: the change in documents found
(found_delta) and in relevant documents found (relevant_delta). Positive
deltas mean the semantic configuration returned more.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from ._util import DataError, TextSource, read_text
from .engine import Run
from .index import RankedList

Qrels = dict[str, set[str]]

DEFAULT_PRECISION_CUTOFFS = (5, 10, 20, 100, 1000)


class QrelsError(DataError):
    """Malformed qrels file."""


class EvalError(DataError):
    """Inconsistent evaluation inputs (e.g. mismatched query sets)."""


# -- record types -------------------------------------------------------------


@dataclass(frozen=True)
class EvalRecord:
    """Per-query counts and precision metrics for one system."""

    qid: str
    found: int
    relevant_found: int
    p_at: dict[int, float] = field(default_factory=dict)
    ap: float = 0.0


@dataclass(frozen=True)
class PrecisionSummary:
    """One system's row of the precision comparison table."""

    system: str
    mean_ap: float
    median_ap: float
    mean_p_at: dict[int, float]
    query_count: int


@dataclass(frozen=True)
class EvalResult:
    records: tuple[EvalRecord, ...]
    summary: PrecisionSummary
    skipped_qids: tuple[str, ...]


@dataclass(frozen=True)
class DeltaRecord:
    """Per-query found / relevant-found counts before and after a treatment."""

    qid: str
    found_before: int
    found_after: int
    relevant_before: int
    relevant_after: int

    @property
    def found_delta(self) -> int:
        return self.found_after - self.found_before

    @property
    def relevant_delta(self) -> int:
        return self.relevant_after - self.relevant_before


@dataclass(frozen=True)
class SignBuckets:
    """How many queries had a negative / zero / positive delta."""

    negative: int
    zero: int
    positive: int

    @property
    def total(self) -> int:
        return self.negative + self.zero + self.positive

    def percentages(self) -> tuple[float, float, float]:
        if self.total == 0:
            return (0.0, 0.0, 0.0)
        return tuple(100.0 * c / self.total for c in (self.negative, self.zero, self.positive))


@dataclass(frozen=True)
class BucketReport:
    found: SignBuckets
    relevant: SignBuckets


@dataclass(frozen=True)
class DeltaReport:
    records: tuple[DeltaRecord, ...]
    buckets: BucketReport


@dataclass(frozen=True)
class ThreeWayBuckets:
    """Strict-winner counts for one metric across three systems.

    wins[i] counts queries where system labels[i] strictly exceeds both
    others; all_equal counts three-way ties; partial_tie is the remainder
    (a top value shared by exactly two systems).
    """

    labels: tuple[str, str, str]
    wins: tuple[int, int, int]
    all_equal: int
    partial_tie: int

    @property
    def total(self) -> int:
        return sum(self.wins) + self.all_equal + self.partial_tie

    def percentages(self) -> tuple[float, float, float, float, float]:
        counts = (*self.wins, self.all_equal, self.partial_tie)
        if self.total == 0:
            return (0.0,) * 5
        return tuple(100.0 * c / self.total for c in counts)


@dataclass(frozen=True)
class ThreeWayReport:
    found: ThreeWayBuckets
    relevant: ThreeWayBuckets


# -- core metrics -------------------------------------------------------------


def precision_at_k(ranked: RankedList, relevant: set[str], k: int) -> float:
    """Fraction of the first k positions holding a relevant document.

    Always divides by k; rankings shorter than k are penalized.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    hits = sum(1 for entry in ranked.entries[:k] if entry.doc_id in relevant)
    return hits / k


def average_precision(ranked: RankedList, relevant: set[str]) -> float:
    """Mean of precision values at each relevant document's rank, divided
    by the total number of relevant documents."""
    if not relevant:
        raise ValueError("average_precision needs a non-empty relevance set")
    hits = 0
    acc = 0.0
    for position, entry in enumerate(ranked.entries, start=1):
        if entry.doc_id in relevant:
            hits += 1
            acc += hits / position
    return acc / len(relevant)


def evaluate_run(
    run: Run,
    qrels: Qrels,
    cutoffs: Sequence[int] = DEFAULT_PRECISION_CUTOFFS,
    system: str | None = None,
) -> EvalResult:
    """Per-query records plus a summary row.

    Queries without (non-empty) relevance judgments are excluded and listed
    in skipped_qids rather than silently scored as zero.
    """
    if system is None:
        system = run.search_type.value if run.search_type is not None else run.tag
    records: list[EvalRecord] = []
    skipped: list[str] = []
    for ranked in run.results:
        relevant = qrels.get(ranked.qid)
        if not relevant:
            skipped.append(ranked.qid)
            continue
        p_at = {k: precision_at_k(ranked, relevant, k) for k in cutoffs}
        records.append(
            EvalRecord(
                qid=ranked.qid,
                found=ranked.found_count,
                relevant_found=sum(1 for e in ranked.entries if e.doc_id in relevant),
                p_at=p_at,
                ap=average_precision(ranked, relevant),
            )
        )
    aps = [r.ap for r in records]
    summary = PrecisionSummary(
        system=system,
        mean_ap=statistics.fmean(aps) if aps else 0.0,
        median_ap=statistics.median(aps) if aps else 0.0,
        mean_p_at={
            k: statistics.fmean([r.p_at[k] for r in records]) if records else 0.0
            for k in cutoffs
        },
        query_count=len(records),
    )
    return EvalResult(tuple(records), summary, tuple(skipped))


# -- before/after deltas -------------------------------------------------------


def _records_by_qid(records: Iterable[EvalRecord], label: str) -> dict[str, EvalRecord]:
    by_qid: dict[str, EvalRecord] = {}
    for record in records:
        if record.qid in by_qid:
            raise EvalError(f"{label}: duplicate qid {record.qid!r}")
        by_qid[record.qid] = record
    return by_qid


def _require_same_qids(a: dict[str, EvalRecord], b: dict[str, EvalRecord], what: str) -> None:
    if a.keys() != b.keys():
        offending = sorted(a.keys() ^ b.keys())
        raise EvalError(f"{what}: query sets differ on qids {offending}")


def sign_buckets(values: Iterable[int]) -> SignBuckets:
    negative = zero = positive = 0
    for value in values:
        if value < 0:
            negative += 1
        elif value == 0:
            zero += 1
        else:
            positive += 1
    return SignBuckets(negative, zero, positive)


def delta_report(
    before: Sequence[EvalRecord], after: Sequence[EvalRecord]
) -> DeltaReport:
    """Exact per-query count differences plus their sign buckets.

    ``before`` and ``after`` must cover the same queries; records are
    emitted in ``before`` order.
    """
    before_by = _records_by_qid(before, "before")
    after_by = _records_by_qid(after, "after")
    _require_same_qids(before_by, after_by, "delta_report")
    records = tuple(
        DeltaRecord(
            qid=b.qid,
            found_before=b.found,
            found_after=after_by[b.qid].found,
            relevant_before=b.relevant_found,
            relevant_after=after_by[b.qid].relevant_found,
        )
        for b in before
    )
    buckets = BucketReport(
        found=sign_buckets(r.found_delta for r in records),
        relevant=sign_buckets(r.relevant_delta for r in records),
    )
    return DeltaReport(records, buckets)


def threeway_report(
    first: Sequence[EvalRecord],
    second: Sequence[EvalRecord],
    third: Sequence[EvalRecord],
    labels: tuple[str, str, str] = ("R1", "R2", "R3"),
) -> ThreeWayReport:
    """Which of three systems strictly returned the most, per query."""
    by_label = [
        _records_by_qid(records, label)
        for records, label in zip((first, second, third), labels)
    ]
    _require_same_qids(by_label[0], by_label[1], "threeway_report")
    _require_same_qids(by_label[0], by_label[2], "threeway_report")
    qids = list(by_label[0])

    def classify(metric) -> ThreeWayBuckets:
        wins = [0, 0, 0]
        all_equal = 0
        partial_tie = 0
        for qid in qids:
            values = [metric(by[qid]) for by in by_label]
            best = max(values)
            winners = [i for i, v in enumerate(values) if v == best]
            if len(winners) == 1:
                wins[winners[0]] += 1
            elif len(winners) == 3:
                all_equal += 1
            else:
                partial_tie += 1
        return ThreeWayBuckets(labels, tuple(wins), all_equal, partial_tie)

    return ThreeWayReport(
        found=classify(lambda r: r.found),
        relevant=classify(lambda r: r.relevant_found),
    )


# -- qrels file (TREC format: qid 0 doc_id rel) --------------------------------


def read_qrels(source: TextSource) -> Qrels:
    qrels: Qrels = {}
    for line_no, line in enumerate(read_text(source).splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise QrelsError(f"line {line_no}: expected 4 fields, got {len(parts)}")
        qid, _iteration, doc_id, rel = parts
        if rel not in ("0", "1"):
            raise QrelsError(f"line {line_no}: relevance must be 0 or 1, got {rel!r}")
        if rel == "1":
            qrels.setdefault(qid, set()).add(doc_id)
        else:
            qrels.setdefault(qid, set())
    return qrels


# -- report rendering -----------------------------------------------------------


def format_percent(count: int, total: int) -> str:
    """Percentage of count/total printed to 2 decimals, half-up."""
    if total == 0:
        value = Decimal(0)
    else:
        value = Decimal(count) * 100 / Decimal(total)
    return str(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _check_format(fmt: str) -> None:
    if fmt not in ("tsv", "json"):
        raise ValueError(f"unknown report format: {fmt!r}")


def _json_dumps(payload) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=False) + "\n"


def render_records(
    records: Sequence[EvalRecord],
    fmt: str,
    cutoffs: Sequence[int] = DEFAULT_PRECISION_CUTOFFS,
) -> str:
    """Per-query counts and metrics (the found/relevant table analogue)."""
    _check_format(fmt)
    if fmt == "json":
        return _json_dumps(
            [
                {
                    "qid": r.qid,
                    "found": r.found,
                    "relevant_found": r.relevant_found,
                    "p_at": {str(k): r.p_at.get(k, 0.0) for k in cutoffs},
                    "ap": r.ap,
                }
                for r in records
            ]
        )
    header = ["qid", "found", "relevant_found"] + [f"p@{k}" for k in cutoffs] + ["ap"]
    lines = ["\t".join(header)]
    for r in records:
        cells = [r.qid, str(r.found), str(r.relevant_found)]
        cells += [str(r.p_at.get(k, 0.0)) for k in cutoffs]
        cells.append(str(r.ap))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def render_summaries(
    summaries: Sequence[PrecisionSummary],
    fmt: str,
    cutoffs: Sequence[int] = DEFAULT_PRECISION_CUTOFFS,
) -> str:
    """One row per system: mean/median AP and mean P@k values."""
    _check_format(fmt)
    if fmt == "json":
        return _json_dumps(
            [
                {
                    "system": s.system,
                    "mean_ap": s.mean_ap,
                    "median_ap": s.median_ap,
                    "mean_p_at": {str(k): s.mean_p_at.get(k, 0.0) for k in cutoffs},
                    "query_count": s.query_count,
                }
                for s in summaries
            ]
        )
    header = ["system", "mean_ap", "median_ap"] + [f"p@{k}" for k in cutoffs] + ["queries"]
    lines = ["\t".join(header)]
    for s in summaries:
        cells = [s.system, str(s.mean_ap), str(s.median_ap)]
        cells += [str(s.mean_p_at.get(k, 0.0)) for k in cutoffs]
        cells.append(str(s.query_count))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def render_deltas(records: Sequence[DeltaRecord], fmt: str) -> str:
    _check_format(fmt)
    if fmt == "json":
        return _json_dumps(
            [
                {
                    "qid": r.qid,
                    "found_before": r.found_before,
                    "found_after": r.found_after,
                    "found_delta": r.found_delta,
                    "relevant_before": r.relevant_before,
                    "relevant_after": r.relevant_after,
                    "relevant_delta": r.relevant_delta,
                }
                for r in records
            ]
        )
    header = [
        "qid",
        "found_before",
        "found_after",
        "found_delta",
        "relevant_before",
        "relevant_after",
        "relevant_delta",
    ]
    lines = ["\t".join(header)]
    for r in records:
        lines.append(
            "\t".join(
                str(v)
                for v in (
                    r.qid,
                    r.found_before,
                    r.found_after,
                    r.found_delta,
                    r.relevant_before,
                    r.relevant_after,
                    r.relevant_delta,
                )
            )
        )
    return "\n".join(lines) + "\n"


def _bucket_rows(metric: str, buckets: SignBuckets) -> list[tuple[str, str, int]]:
    return [
        (metric, "delta<0", buckets.negative),
        (metric, "delta=0", buckets.zero),
        (metric, "delta>0", buckets.positive),
    ]


def render_buckets(report: BucketReport, fmt: str) -> str:
    _check_format(fmt)
    total = report.found.total
    if fmt == "json":
        def entry(buckets: SignBuckets) -> dict:
            return {
                "negative": buckets.negative,
                "zero": buckets.zero,
                "positive": buckets.positive,
                "negative_pct": float(format_percent(buckets.negative, buckets.total)),
                "zero_pct": float(format_percent(buckets.zero, buckets.total)),
                "positive_pct": float(format_percent(buckets.positive, buckets.total)),
            }

        return _json_dumps(
            {"queries": total, "found": entry(report.found), "relevant": entry(report.relevant)}
        )
    lines = ["\t".join(["metric", "bucket", "queries", "percent"])]
    for metric, buckets in (("found", report.found), ("relevant", report.relevant)):
        for name, label, count in _bucket_rows(metric, buckets):
            lines.append(
                "\t".join([name, label, str(count), format_percent(count, buckets.total)])
            )
    return "\n".join(lines) + "\n"


def render_threeway(report: ThreeWayReport, fmt: str) -> str:
    _check_format(fmt)

    def rows(metric: str, buckets: ThreeWayBuckets) -> list[tuple[str, str, int]]:
        out = [
            (metric, f"{label}_wins", wins)
            for label, wins in zip(buckets.labels, buckets.wins)
        ]
        out.append((metric, "all_equal", buckets.all_equal))
        out.append((metric, "partial_tie", buckets.partial_tie))
        return out

    if fmt == "json":
        def entry(buckets: ThreeWayBuckets) -> dict:
            payload = {}
            for _, label, count in rows("", buckets):
                payload[label] = count
                payload[f"{label}_pct"] = float(format_percent(count, buckets.total))
            return payload

        return _json_dumps(
            {
                "queries": report.found.total,
                "labels": list(report.found.labels),
                "found": entry(report.found),
                "relevant": entry(report.relevant),
            }
        )
    lines = ["\t".join(["metric", "bucket", "queries", "percent"])]
    for metric, buckets in (("found", report.found), ("relevant", report.relevant)):
        for name, label, count in rows(metric, buckets):
            lines.append(
                "\t".join([name, label, str(count), format_percent(count, buckets.total)])
            )
    return "\n".join(lines) + "\n"
