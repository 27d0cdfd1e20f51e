"""Arabic-aware normalization, tokenization, and stopword filtering.

Every piece of text entering the system (documents, queries, lexicon
lemmas, stopword lists) goes through the same pipeline, so all downstream
matching reduces to exact string equality on normalized tokens.
"""

from __future__ import annotations

import re
import string
import unicodedata
from typing import Callable

from ._util import TextSource, read_text

TokenStream = list[str]

# Token characters: ASCII letters/digits, Arabic letters including hamza
# forms (U+0621-U+064A), tatweel, tashkeel and other combining marks up to
# U+065F, Arabic-Indic digits, superscript alef and the extended Arabic
# letters through U+06D5. Combining marks must count as token characters:
# NFC folds alef+madda/hamza mark sequences into single letters, and
# splitting on the marks would make tokenization disagree before and after
# normalization.
_TOKEN_RE = re.compile(r"[0-9A-Za-zء-٩ٰ-ە]+")

# Tashkeel (U+064B-U+0652) plus the combining madda/hamza marks
# (U+0653-U+0655). The latter are stripped too: NFC recomposes e.g.
# alef + U+0654 into the very hamza letters the folds below erase, so
# keeping them would break idempotence.
_MARKS_RE = re.compile(r"[ً-ٕ]")

_TATWEEL = "ـ"

_FOLDS = str.maketrans(
    {
        "آ": "ا",  # alef madda -> alef
        "أ": "ا",  # alef hamza above -> alef
        "إ": "ا",  # alef hamza below -> alef
        "ى": "ي",  # alef maqsura -> yeh
        "ة": "ه",  # ta marbuta -> ha
    }
)

# Only ASCII letters are case-folded. Full Unicode lowercasing can grow
# strings (U+0130 -> "i" + combining dot) and would break both the
# idempotence and the length-non-increasing guarantees.
_ASCII_LOWER = str.maketrans(string.ascii_uppercase, string.ascii_lowercase)


def normalize(text: str) -> str:
    """Canonicalize a string for matching.

    Applies, in order: Unicode NFC, removal of tashkeel and combining
    hamza/madda marks, removal of tatweel, hamza-alef / alef-maqsura /
    ta-marbuta folding, ASCII lowercasing. Idempotent and never longer
    than its input in code points.
    """
    text = unicodedata.normalize("NFC", text)
    text = _MARKS_RE.sub("", text)
    text = text.replace(_TATWEEL, "")
    text = text.translate(_FOLDS)
    return text.translate(_ASCII_LOWER)


def tokenize(text: str, stemmer: Callable[[str], str] | None = None) -> TokenStream:
    """Split text into normalized tokens.

    Any character outside the Arabic/Latin/digit token class separates
    tokens; empty tokens are dropped. Normalization happens first, so every
    returned token is its own normalization fixed point.

    ``stemmer`` is a hook point and ships disabled: stemming silently
    changes which words count as monosemous, so nothing in the pipeline
    passes one. A supplied stemmer must emit normalized tokens.
    """
    tokens = _TOKEN_RE.findall(normalize(text))
    if stemmer is None:
        return tokens
    return [stemmed for token in tokens if (stemmed := stemmer(token))]


def remove_stopwords(tokens: TokenStream, stoplist: frozenset[str] | set[str]) -> TokenStream:
    """Order-preserving stopword filter. Empty stoplist returns a copy."""
    if not stoplist:
        return list(tokens)
    return [t for t in tokens if t not in stoplist]


def load_stopwords(source: TextSource) -> frozenset[str]:
    """Read a stopword file (one token per line); entries are normalized."""
    words = set()
    for line in read_text(source).splitlines():
        token = normalize(line.strip())
        if token:
            words.add(token)
    return frozenset(words)
