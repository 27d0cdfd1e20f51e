"""WordNet-style lexical database: synsets, lemma lookup, monosemy tests.

The native file format is JSONL, one synset per line:

    {"id": "s1", "pos": "n", "lemmas": ["...", "..."], "relations": [...]}

``pos`` is one of ``n`` / ``v`` / ``a`` / ``r``. ``relations`` is accepted
and ignored. Lemmas are normalized at load time with the same pipeline used
for documents and queries, so lemma/token matching is exact string equality.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable

from ._util import DataError, TextSource, read_text
from .textnorm import tokenize

POS_BY_TAG = {"n": "noun", "v": "verb", "a": "adjective", "r": "adverb"}

# Synset invariant: a lemma is 1-4 space-separated tokens.
MAX_LEMMA_TOKENS = 4


class LexiconError(DataError):
    """Malformed lexicon input."""


@dataclass(frozen=True)
class Synset:
    """One sense: an opaque id, a part of speech, and ordered synonym lemmas."""

    id: str
    pos: str
    lemmas: tuple[str, ...]


@dataclass(frozen=True)
class LexiconStats:
    total_synsets: int
    per_pos: dict[str, int]
    total_words: int


def normalize_lemma(raw: str) -> str:
    """Normalize a lemma the same way document text is tokenized."""
    return " ".join(tokenize(raw))


class Lexicon:
    """Immutable bidirectional lemma <-> synset store.

    ``synsets_of`` returns ids in lexicon-file encounter order, which makes
    every derived choice (canonical lemma, expansion order) deterministic
    for a given lexicon file.
    """

    def __init__(self, synsets: Iterable[Synset] = ()):
        self._synsets: dict[str, Synset] = {}
        self._inverted: dict[str, list[str]] = {}
        self._digest: str | None = None
        for syn in synsets:
            if syn.id in self._synsets:
                raise LexiconError(f"duplicate synset id: {syn.id!r}")
            self._synsets[syn.id] = syn
            for lemma in syn.lemmas:
                self._inverted.setdefault(lemma, []).append(syn.id)

    def __len__(self) -> int:
        return len(self._synsets)

    def __contains__(self, lemma: str) -> bool:
        return lemma in self._inverted

    def synset(self, synset_id: str) -> Synset:
        try:
            return self._synsets[synset_id]
        except KeyError:
            raise KeyError(f"unknown synset id: {synset_id!r}") from None

    def synset_ids(self) -> list[str]:
        return list(self._synsets)

    def synsets_of(self, lemma: str) -> list[str]:
        """All synset ids containing the lemma, in encounter order."""
        return list(self._inverted.get(lemma, ()))

    def is_monosemous(self, lemma: str) -> bool:
        """True iff the lemma belongs to exactly one synset.

        Words absent from the lexicon have zero senses and are not
        monosemous. Senses are counted across all POS classes.
        """
        return len(self._inverted.get(lemma, ())) == 1

    def canonical_lemma(self, synset_id: str) -> str:
        """The synset's representative: its first lemma in stored order."""
        return self.synset(synset_id).lemmas[0]

    def lemmas_of(self, synset_id: str) -> list[str]:
        return list(self.synset(synset_id).lemmas)

    def stats(self) -> LexiconStats:
        per_pos = {pos: 0 for pos in POS_BY_TAG.values()}
        for syn in self._synsets.values():
            per_pos[syn.pos] += 1
        return LexiconStats(
            total_synsets=len(self._synsets),
            per_pos=per_pos,
            total_words=len(self._inverted),
        )

    def digest(self) -> str:
        """SHA-256 over the canonical synset listing; identifies the lexicon
        content independently of file formatting."""
        if self._digest is None:
            h = hashlib.sha256()
            for sid in sorted(self._synsets):
                syn = self._synsets[sid]
                record = json.dumps(
                    [syn.id, syn.pos, list(syn.lemmas)],
                    ensure_ascii=True,
                    separators=(",", ":"),
                )
                h.update(record.encode("ascii"))
                h.update(b"\n")
            self._digest = h.hexdigest()
        return self._digest


def _parse_record(line_no: int, line: str) -> Synset:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise LexiconError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
    if not isinstance(record, dict):
        raise LexiconError(f"line {line_no}: record is not an object")

    synset_id = record.get("id")
    if not isinstance(synset_id, str) or not synset_id:
        raise LexiconError(f"line {line_no}: missing or invalid 'id'")

    pos_tag = record.get("pos")
    if pos_tag not in POS_BY_TAG:
        raise LexiconError(f"line {line_no}: unknown pos tag {pos_tag!r}")

    raw_lemmas = record.get("lemmas")
    if not isinstance(raw_lemmas, list) or not raw_lemmas:
        raise LexiconError(f"line {line_no}: 'lemmas' must be a non-empty list")

    lemmas: dict[str, None] = {}
    for raw in raw_lemmas:
        if not isinstance(raw, str):
            raise LexiconError(f"line {line_no}: lemma {raw!r} is not a string")
        lemma = normalize_lemma(raw)
        if not lemma:
            raise LexiconError(f"line {line_no}: lemma {raw!r} is empty after normalization")
        if lemma.count(" ") + 1 > MAX_LEMMA_TOKENS:
            raise LexiconError(
                f"line {line_no}: lemma {raw!r} has more than {MAX_LEMMA_TOKENS} tokens"
            )
        # Duplicates after normalization collapse to the first occurrence.
        lemmas.setdefault(lemma)

    return Synset(id=synset_id, pos=POS_BY_TAG[pos_tag], lemmas=tuple(lemmas))


def load_lexicon(source: TextSource) -> Lexicon:
    """Load a JSONL lexicon from a path or file-like object.

    Raises LexiconError on malformed lines (with line numbers), duplicate
    synset ids, empty lemma lists, or unknown pos tags.
    """
    synsets: list[Synset] = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(read_text(source).splitlines(), start=1):
        if not line.strip():
            continue
        syn = _parse_record(line_no, line)
        if syn.id in seen:
            raise LexiconError(
                f"line {line_no}: duplicate synset id {syn.id!r} (first seen on line {seen[syn.id]})"
            )
        seen[syn.id] = line_no
        synsets.append(syn)
    return Lexicon(synsets)
