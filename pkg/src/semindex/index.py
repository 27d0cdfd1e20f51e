"""Inverted index with BM25 ranking and a checksummed binary file format.

An index is built over a corpus in one of two modes: Plain (tokens indexed
as-is) or Semantic (monosemous concepts rewritten to their canonical lemma
before counting). Retrieval is disjunctive: a document is *found* for a
query exactly when its score is positive, i.e. when it contains at least
one query term.
"""

from __future__ import annotations

import bisect
import enum
import hashlib
import json
import math
import struct
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ._util import DataError, TextSource, atomic_write_bytes, read_text
from .lexicon import Lexicon
from .semantics import DEFAULT_MAX_CONCEPT_TOKENS, semantize
from .textnorm import TokenStream, remove_stopwords, tokenize

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

_MAGIC = b"SIDX"
_FORMAT_VERSION = 1
_CHECKSUM_SIZE = 32


class IndexFormatError(DataError):
    """Index file unreadable: bad magic, version, checksum, or truncation."""


class DuplicateDocumentError(DataError):
    """The corpus stream contained the same doc_id twice."""


class IndexMode(enum.Enum):
    PLAIN = "plain"
    SEMANTIC = "semantic"


@dataclass(frozen=True)
class Posting:
    doc_id: str
    term_frequency: int


@dataclass(frozen=True)
class ScoredDoc:
    doc_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class RankedList:
    """Scored ranking for one query.

    found_count is the size of the full nonzero-score match set, recorded
    before any depth truncation, so it stays meaningful when only a prefix
    of the ranking is kept.
    """

    qid: str
    entries: tuple[ScoredDoc, ...]
    found_count: int

    def doc_ids(self) -> list[str]:
        return [e.doc_id for e in self.entries]


class Index:
    """Immutable inverted index over a processed corpus."""

    def __init__(
        self,
        mode: IndexMode,
        postings: dict[str, Sequence[Posting]],
        doc_lengths: dict[str, int],
        lexicon_digest: str = "",
    ):
        self.mode = mode
        self.lexicon_digest = lexicon_digest
        self._doc_lengths = dict(doc_lengths)
        self._postings: dict[str, tuple[Posting, ...]] = {}
        for term, plist in postings.items():
            ordered = tuple(sorted(plist, key=lambda p: p.doc_id))
            for i, posting in enumerate(ordered):
                if posting.term_frequency < 1:
                    raise ValueError(f"term {term!r}: non-positive tf for {posting.doc_id!r}")
                if posting.doc_id not in self._doc_lengths:
                    raise ValueError(f"term {term!r}: posting for unknown doc {posting.doc_id!r}")
                if i > 0 and ordered[i - 1].doc_id == posting.doc_id:
                    raise ValueError(f"term {term!r}: duplicate posting for {posting.doc_id!r}")
            self._postings[term] = ordered
        # Kept as an exact integer so average_doc_length is independent of
        # dict iteration order.
        self._total_tokens = sum(self._doc_lengths.values())

    # -- basic accessors ---------------------------------------------------

    @property
    def doc_count(self) -> int:
        return len(self._doc_lengths)

    @property
    def average_doc_length(self) -> float:
        if not self._doc_lengths:
            return 0.0
        return self._total_tokens / len(self._doc_lengths)

    @property
    def vocabulary_size(self) -> int:
        return len(self._postings)

    def terms(self) -> list[str]:
        return sorted(self._postings)

    def postings(self, term: str) -> tuple[Posting, ...]:
        return self._postings.get(term, ())

    def document_frequency(self, term: str) -> int:
        return len(self._postings.get(term, ()))

    def has_document(self, doc_id: str) -> bool:
        return doc_id in self._doc_lengths

    def doc_length(self, doc_id: str) -> int:
        try:
            return self._doc_lengths[doc_id]
        except KeyError:
            raise KeyError(f"unknown doc_id: {doc_id!r}") from None

    def doc_ids(self) -> list[str]:
        return sorted(self._doc_lengths)

    # -- scoring -----------------------------------------------------------

    def _idf(self, term: str) -> float:
        # +1 inside the log keeps idf strictly positive, so a document is
        # found exactly when its score is positive.
        df = self.document_frequency(term)
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))

    def _term_doc_score(self, tf: int, dl: int, idf: float, k1: float, b: float) -> float:
        norm = k1 * (1.0 - b + b * dl / self.average_doc_length)
        return idf * (tf * (k1 + 1.0)) / (tf + norm)

    def score(
        self,
        query_terms: TokenStream,
        doc_id: str,
        *,
        k1: float = DEFAULT_K1,
        b: float = DEFAULT_B,
    ) -> float:
        """BM25 score of one document; duplicate query terms accumulate."""
        dl = self.doc_length(doc_id)
        total = 0.0
        for term in query_terms:
            plist = self._postings.get(term)
            if not plist:
                continue
            i = bisect.bisect_left(plist, doc_id, key=lambda p: p.doc_id)
            if i == len(plist) or plist[i].doc_id != doc_id:
                continue
            total += self._term_doc_score(plist[i].term_frequency, dl, self._idf(term), k1, b)
        return total

    def retrieve(
        self,
        query_terms: TokenStream,
        depth: int | None = None,
        *,
        k1: float = DEFAULT_K1,
        b: float = DEFAULT_B,
    ) -> RankedList:
        """All documents matching any query term, best first.

        Ties break by ascending doc_id. found_count is taken before the
        optional truncation to ``depth``.
        """
        scores: dict[str, float] = {}
        for term in query_terms:
            plist = self._postings.get(term)
            if not plist:
                continue
            idf = self._idf(term)
            for posting in plist:
                contrib = self._term_doc_score(
                    posting.term_frequency, self._doc_lengths[posting.doc_id], idf, k1, b
                )
                scores[posting.doc_id] = scores.get(posting.doc_id, 0.0) + contrib
        found_count = len(scores)
        ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
        if depth is not None:
            ranked = ranked[:depth]
        entries = tuple(
            ScoredDoc(doc_id, score, rank) for rank, (doc_id, score) in enumerate(ranked, start=1)
        )
        return RankedList(qid="", entries=entries, found_count=found_count)

    # -- serialization -----------------------------------------------------

    def to_jsonable(self) -> dict:
        """Stable dict form of the full index, for debugging and diffing."""
        return {
            "mode": self.mode.value,
            "lexicon_digest": self.lexicon_digest,
            "doc_lengths": {d: self._doc_lengths[d] for d in sorted(self._doc_lengths)},
            "postings": {
                term: [[p.doc_id, p.term_frequency] for p in self._postings[term]]
                for term in sorted(self._postings)
            },
        }

    def export_json(self) -> str:
        return json.dumps(self.to_jsonable(), ensure_ascii=False, indent=2, sort_keys=True)

    def _encode(self) -> bytes:
        buf = bytearray()
        buf += _MAGIC
        buf += struct.pack("<I", _FORMAT_VERSION)
        buf += struct.pack("<B", 0 if self.mode is IndexMode.PLAIN else 1)
        digest_bytes = self.lexicon_digest.encode("utf-8")
        buf += struct.pack("<I", len(digest_bytes))
        buf += digest_bytes
        buf += struct.pack("<Q", len(self._doc_lengths))
        ordered_docs = sorted(self._doc_lengths)
        ordinals = {doc_id: i for i, doc_id in enumerate(ordered_docs)}
        for doc_id in ordered_docs:
            encoded = doc_id.encode("utf-8")
            buf += struct.pack("<I", len(encoded))
            buf += encoded
            buf += struct.pack("<Q", self._doc_lengths[doc_id])
        buf += struct.pack("<Q", len(self._postings))
        for term in sorted(self._postings):
            encoded = term.encode("utf-8")
            buf += struct.pack("<I", len(encoded))
            buf += encoded
            plist = self._postings[term]
            buf += struct.pack("<Q", len(plist))
            for posting in plist:
                buf += struct.pack("<II", ordinals[posting.doc_id], posting.term_frequency)
        buf += hashlib.sha256(bytes(buf)).digest()
        return bytes(buf)

    def save(self, path) -> None:
        """Write the index atomically; identical indexes produce identical bytes."""
        atomic_write_bytes(path, self._encode())


class _Reader:
    """Cursor over the binary index format; short reads raise IndexFormatError."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise IndexFormatError("index file truncated")
        chunk = self.data[self.pos : self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def take_str(self) -> str:
        (length,) = self.unpack("<I")
        return self.take(length).decode("utf-8")


def load_index(path) -> Index:
    """Load an index file written by Index.save, verifying its checksum."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(_MAGIC) + _CHECKSUM_SIZE:
        raise IndexFormatError("index file truncated")
    body, checksum = data[:-_CHECKSUM_SIZE], data[-_CHECKSUM_SIZE:]
    if hashlib.sha256(body).digest() != checksum:
        raise IndexFormatError("index file checksum mismatch")

    reader = _Reader(body)
    if reader.take(len(_MAGIC)) != _MAGIC:
        raise IndexFormatError("not an index file (bad magic)")
    (version,) = reader.unpack("<I")
    if version != _FORMAT_VERSION:
        raise IndexFormatError(
            f"unsupported index format version {version} (expected {_FORMAT_VERSION})"
        )
    (mode_byte,) = reader.unpack("<B")
    mode = IndexMode.PLAIN if mode_byte == 0 else IndexMode.SEMANTIC
    lexicon_digest = reader.take_str()

    (doc_count,) = reader.unpack("<Q")
    doc_ids: list[str] = []
    doc_lengths: dict[str, int] = {}
    for _ in range(doc_count):
        doc_id = reader.take_str()
        (length,) = reader.unpack("<Q")
        doc_ids.append(doc_id)
        doc_lengths[doc_id] = length

    (term_count,) = reader.unpack("<Q")
    postings: dict[str, list[Posting]] = {}
    for _ in range(term_count):
        term = reader.take_str()
        (df,) = reader.unpack("<Q")
        plist = []
        for _ in range(df):
            ordinal, tf = reader.unpack("<II")
            if ordinal >= len(doc_ids):
                raise IndexFormatError(f"posting for term {term!r} references unknown document")
            plist.append(Posting(doc_ids[ordinal], tf))
        postings[term] = plist
    if reader.pos != len(body):
        raise IndexFormatError("trailing bytes after postings")
    return Index(mode, postings, doc_lengths, lexicon_digest)


# -- construction -----------------------------------------------------------


def process_document(
    text: str,
    mode: IndexMode,
    lex: Lexicon | None,
    stoplist: frozenset[str],
    max_concept_tokens: int = DEFAULT_MAX_CONCEPT_TOKENS,
) -> TokenStream:
    """The per-document pipeline: tokenize, stop, then semantize if asked."""
    tokens = remove_stopwords(tokenize(text), stoplist)
    if mode is IndexMode.SEMANTIC:
        assert lex is not None
        tokens = semantize(tokens, lex, max_concept_tokens)
    return tokens


_WORKER_STATE: dict = {}


def _init_worker(mode, lex, stoplist, max_concept_tokens):
    _WORKER_STATE["args"] = (mode, lex, stoplist, max_concept_tokens)


def _count_batch(batch: list[tuple[str, str]]) -> list[tuple[str, dict[str, int], int]]:
    mode, lex, stoplist, max_concept_tokens = _WORKER_STATE["args"]
    out = []
    for doc_id, text in batch:
        tokens = process_document(text, mode, lex, stoplist, max_concept_tokens)
        out.append((doc_id, dict(Counter(tokens)), len(tokens)))
    return out


def build_index(
    corpus: Iterable[tuple[str, str]],
    mode: IndexMode,
    lex: Lexicon | None = None,
    stoplist: frozenset[str] = frozenset(),
    *,
    max_concept_tokens: int = DEFAULT_MAX_CONCEPT_TOKENS,
    workers: int = 1,
) -> Index:
    """Build an index from (doc_id, text) pairs.

    The result is identical for any worker count: per-document counting is
    pure, and postings are merged by term then doc_id regardless of arrival
    order.
    """
    if mode is IndexMode.SEMANTIC and lex is None:
        raise ValueError("semantic mode requires a lexicon")
    docs = list(corpus)

    if workers > 1 and len(docs) > 1:
        chunk = max(1, (len(docs) + workers * 4 - 1) // (workers * 4))
        batches = [docs[i : i + chunk] for i in range(0, len(docs), chunk)]
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(mode, lex, stoplist, max_concept_tokens),
        ) as pool:
            counted = [row for batch_result in pool.map(_count_batch, batches) for row in batch_result]
    else:
        counted = []
        for doc_id, text in docs:
            tokens = process_document(text, mode, lex, stoplist, max_concept_tokens)
            counted.append((doc_id, dict(Counter(tokens)), len(tokens)))

    doc_lengths: dict[str, int] = {}
    postings: dict[str, list[Posting]] = {}
    for doc_id, counts, length in counted:
        if doc_id in doc_lengths:
            raise DuplicateDocumentError(f"duplicate doc_id: {doc_id!r}")
        doc_lengths[doc_id] = length
        for term, tf in counts.items():
            postings.setdefault(term, []).append(Posting(doc_id, tf))

    digest = lex.digest() if (mode is IndexMode.SEMANTIC and lex is not None) else ""
    return Index(mode, postings, doc_lengths, lexicon_digest=digest)


# -- corpus file format ------------------------------------------------------


@dataclass(frozen=True)
class SkippedDocument:
    line_no: int
    reason: str


@dataclass(frozen=True)
class CorpusReadResult:
    documents: list[tuple[str, str]]
    skipped: list[SkippedDocument] = field(default_factory=list)


def read_corpus(source: TextSource) -> CorpusReadResult:
    """Read corpus JSONL ({"id": ..., "text": ...} per line).

    Unreadable records are skipped and reported, not fatal; duplicate ids
    are left for build_index to reject.
    """
    documents: list[tuple[str, str]] = []
    skipped: list[SkippedDocument] = []
    for line_no, line in enumerate(read_text(source).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            skipped.append(SkippedDocument(line_no, f"invalid JSON ({exc.msg})"))
            continue
        if not isinstance(record, dict):
            skipped.append(SkippedDocument(line_no, "record is not an object"))
            continue
        doc_id = record.get("id")
        text = record.get("text")
        if not isinstance(doc_id, str) or not doc_id:
            skipped.append(SkippedDocument(line_no, "missing or invalid 'id'"))
            continue
        if not isinstance(text, str):
            skipped.append(SkippedDocument(line_no, "missing or invalid 'text'"))
            continue
        documents.append((doc_id, text))
    return CorpusReadResult(documents, skipped)
