"""Four-configuration retrieval driver and TREC-format run I/O.

Search types:

    R0  plain index,    raw query        (baseline)
    R1  semantic index, expanded query
    R2  plain index,    expanded query
    R3  semantic index, raw query

The query pipeline is tokenize -> remove stopwords -> (expand for R1/R2);
document-side processing happened at index build time.
"""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

from ._util import DataError, TextSource, atomic_write_text, read_text
from .index import DEFAULT_B, DEFAULT_K1, Index, IndexMode, RankedList, ScoredDoc
from .lexicon import Lexicon
from .semantics import DEFAULT_MAX_CONCEPT_TOKENS, expand
from .textnorm import remove_stopwords, tokenize

DEFAULT_RUN_TAG = "semindex"


class MissingIndexError(RuntimeError):
    """The search type requires an index that was not supplied."""


class RunFormatError(DataError):
    """Malformed run file."""


class QueryFileError(DataError):
    """Malformed query file."""


class LexiconMismatchWarning(UserWarning):
    """A semantic index is being queried with a different lexicon than it
    was built with; expansion and document rewriting may disagree."""


class SearchType(enum.Enum):
    R0 = "R0"
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"

    @property
    def uses_semantic_index(self) -> bool:
        return self in (SearchType.R1, SearchType.R3)

    @property
    def expands_query(self) -> bool:
        return self in (SearchType.R1, SearchType.R2)


@dataclass(frozen=True)
class Query:
    qid: str
    text: str


@dataclass(frozen=True)
class Run:
    """One RankedList per query, in query order."""

    search_type: SearchType | None
    tag: str
    results: tuple[RankedList, ...]

    def found_counts(self) -> dict[str, int]:
        return {rl.qid: rl.found_count for rl in self.results}


@dataclass
class SearchSystem:
    """Bundle of the artifacts needed to answer queries in any search type."""

    plain_index: Index | None = None
    semantic_index: Index | None = None
    lexicon: Lexicon = field(default_factory=Lexicon)
    stoplist: frozenset[str] = frozenset()
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B
    max_concept_tokens: int = DEFAULT_MAX_CONCEPT_TOKENS

    def _index_for(self, search_type: SearchType) -> Index:
        if search_type.uses_semantic_index:
            if self.semantic_index is None:
                raise MissingIndexError(f"{search_type.value} requires a semantic index")
            if self.semantic_index.mode is not IndexMode.SEMANTIC:
                raise ValueError("semantic_index was not built in Semantic mode")
            return self.semantic_index
        if self.plain_index is None:
            raise MissingIndexError(f"{search_type.value} requires a plain index")
        if self.plain_index.mode is not IndexMode.PLAIN:
            raise ValueError("plain_index was not built in Plain mode")
        return self.plain_index

    def query_terms(self, query: Query, search_type: SearchType) -> list[str]:
        terms = remove_stopwords(tokenize(query.text), self.stoplist)
        if search_type.expands_query:
            terms = expand(terms, self.lexicon, self.max_concept_tokens)
        return terms

    def run_query(
        self, query: Query, search_type: SearchType, depth: int | None = None
    ) -> RankedList:
        index = self._index_for(search_type)
        if (
            search_type is SearchType.R1
            and index.lexicon_digest != self.lexicon.digest()
        ):
            warnings.warn(
                "semantic index was built with a different lexicon than the one "
                "used for query expansion",
                LexiconMismatchWarning,
                stacklevel=2,
            )
        terms = self.query_terms(query, search_type)
        ranked = index.retrieve(terms, depth, k1=self.k1, b=self.b)
        return replace(ranked, qid=query.qid)

    def batch_run(
        self,
        queries: Sequence[Query],
        search_type: SearchType,
        depth: int | None = None,
        tag: str = DEFAULT_RUN_TAG,
    ) -> Run:
        seen: set[str] = set()
        for q in queries:
            if q.qid in seen:
                raise QueryFileError(f"duplicate qid: {q.qid!r}")
            seen.add(q.qid)
        results = []
        for q in queries:
            try:
                results.append(self.run_query(q, search_type, depth))
            except (MissingIndexError, ValueError) as exc:
                raise type(exc)(f"query {q.qid!r}: {exc}") from exc
        return Run(search_type, tag, tuple(results))


# -- query file (TSV: qid<TAB>text) ------------------------------------------


def read_queries(source: TextSource) -> list[Query]:
    queries: list[Query] = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(read_text(source).splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise QueryFileError(f"line {line_no}: expected qid<TAB>query text")
        qid, text = line.split("\t", 1)
        qid = qid.strip()
        if not qid:
            raise QueryFileError(f"line {line_no}: empty qid")
        if qid in seen:
            raise QueryFileError(
                f"line {line_no}: duplicate qid {qid!r} (first seen on line {seen[qid]})"
            )
        seen[qid] = line_no
        queries.append(Query(qid, text))
    return queries


# -- run files (TREC format + found-count sidecar) ----------------------------


def format_run(run: Run) -> str:
    """TREC lines: qid Q0 doc_id rank score tag, scores at 6 decimals."""
    lines = []
    for ranked in run.results:
        for entry in ranked.entries:
            lines.append(
                f"{ranked.qid} Q0 {entry.doc_id} {entry.rank} {entry.score:.6f} {run.tag}\n"
            )
    return "".join(lines)


def write_run(run: Run, run_path, found_path=None) -> None:
    """Write the TREC run file and, optionally, the found-count sidecar.

    The sidecar carries each query's pre-truncation match-set size, which
    the TREC format itself cannot represent.
    """
    atomic_write_text(run_path, format_run(run))
    if found_path is not None:
        atomic_write_text(found_path, json.dumps(run.found_counts(), indent=0) + "\n")


def read_run(
    run_source: TextSource,
    found_source: TextSource | None = None,
    search_type: SearchType | None = None,
) -> Run:
    """Parse a TREC run file back into a Run.

    Without a sidecar, found_count falls back to the ranking length.
    """
    per_qid: dict[str, list[ScoredDoc]] = {}
    tag = DEFAULT_RUN_TAG
    for line_no, line in enumerate(read_text(run_source).splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise RunFormatError(f"line {line_no}: expected 6 fields, got {len(parts)}")
        qid, _q0, doc_id, rank_str, score_str, tag = parts
        try:
            rank = int(rank_str)
            score = float(score_str)
        except ValueError:
            raise RunFormatError(f"line {line_no}: bad rank or score") from None
        entries = per_qid.setdefault(qid, [])
        if rank != len(entries) + 1:
            raise RunFormatError(
                f"line {line_no}: rank {rank} out of order for query {qid!r}"
            )
        entries.append(ScoredDoc(doc_id, score, rank))

    found_counts: dict[str, int] = {}
    if found_source is not None:
        raw = json.loads(read_text(found_source))
        if not isinstance(raw, dict):
            raise RunFormatError("found-count sidecar is not a JSON object")
        found_counts = {str(qid): int(count) for qid, count in raw.items()}

    # The sidecar lists every query in batch order, including zero-result
    # queries that have no TREC lines, so it is the authoritative order.
    if found_counts:
        ordered_qids = list(found_counts)
        ordered_qids.extend(qid for qid in per_qid if qid not in found_counts)
    else:
        ordered_qids = list(per_qid)

    results = []
    for qid in ordered_qids:
        entries = tuple(per_qid.get(qid, ()))
        found = found_counts.get(qid, len(entries))
        results.append(RankedList(qid=qid, entries=entries, found_count=found))
    return Run(search_type, tag, tuple(results))
