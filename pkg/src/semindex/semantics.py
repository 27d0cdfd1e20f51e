"""Concept-level rewriting of token streams.

Documents are *semantized*: every occurrence of a monosemous concept is
replaced by its synset's canonical lemma. Queries are *expanded*: the
synonyms of each monosemous concept are appended while the original tokens
stay untouched. The asymmetry is deliberate. An expanded query and a
semantized document meet on the canonical lemma, while a raw query issued
against a semantized corpus can miss terms that were rewritten away.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lexicon import Lexicon
from .textnorm import TokenStream

DEFAULT_MAX_CONCEPT_TOKENS = 4


@dataclass(frozen=True)
class ConceptMatch:
    """A lexicon lemma found in a token stream at [start, end)."""

    start: int
    end: int
    surface_lemma: str
    synset_ids: tuple[str, ...]

    @property
    def monosemous(self) -> bool:
        return len(self.synset_ids) == 1


def match_concepts(
    tokens: TokenStream,
    lex: Lexicon,
    max_len: int = DEFAULT_MAX_CONCEPT_TOKENS,
) -> list[ConceptMatch]:
    """Greedy leftmost-longest lexicon matching over a normalized stream.

    At each position, windows of max_len down to 1 tokens are tried; the
    first window whose space-joined form is a lexicon lemma becomes a match
    and scanning resumes after it. Matches never overlap and come out
    sorted by start position.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    matches: list[ConceptMatch] = []
    i, n = 0, len(tokens)
    while i < n:
        for length in range(min(max_len, n - i), 0, -1):
            lemma = " ".join(tokens[i : i + length])
            synset_ids = lex.synsets_of(lemma)
            if synset_ids:
                matches.append(ConceptMatch(i, i + length, lemma, tuple(synset_ids)))
                i += length
                break
        else:
            i += 1
    return matches


def semantize(
    tokens: TokenStream,
    lex: Lexicon,
    max_len: int = DEFAULT_MAX_CONCEPT_TOKENS,
) -> TokenStream:
    """Rewrite a document-side stream onto canonical concept lemmas.

    Each monosemous concept match is replaced by the tokens of its synset's
    canonical lemma; polysemous matches and unmatched tokens pass through
    unchanged. The surface form of a replaced concept does not survive
    unless it is itself the canonical lemma.
    """
    out: TokenStream = []
    prev_end = 0
    for match in match_concepts(tokens, lex, max_len):
        out.extend(tokens[prev_end : match.start])
        if match.monosemous:
            out.extend(lex.canonical_lemma(match.synset_ids[0]).split(" "))
        else:
            out.extend(tokens[match.start : match.end])
        prev_end = match.end
    out.extend(tokens[prev_end:])
    return out


def expand(
    tokens: TokenStream,
    lex: Lexicon,
    max_len: int = DEFAULT_MAX_CONCEPT_TOKENS,
) -> TokenStream:
    """Append the synonyms of each monosemous concept to a query stream.

    The output starts with the input tokens unchanged; for each monosemous
    match in stream order, every lemma of its synset not already present is
    appended (multiword lemmas contribute their tokens contiguously).
    """
    out = list(tokens)
    for match in match_concepts(tokens, lex, max_len):
        if not match.monosemous:
            continue
        for lemma in lex.lemmas_of(match.synset_ids[0]):
            lemma_tokens = lemma.split(" ")
            if not _contains_run(out, lemma_tokens):
                out.extend(lemma_tokens)
    return out


def _contains_run(haystack: list[str], needle: list[str]) -> bool:
    """True if needle occurs in haystack as a contiguous token run."""
    if len(needle) == 1:
        return needle[0] in haystack
    n = len(needle)
    return any(haystack[i : i + n] == needle for i in range(len(haystack) - n + 1))
