"""Shared fixture builders and hypothesis strategies."""

from __future__ import annotations

import io
import json
import random

from hypothesis import strategies as st

from semindex import Lexicon, load_lexicon

# Already-normalized single tokens (Arabic letters and lowercase Latin).
TOKEN_POOL = ["ا", "ب", "ت", "ث", "ج", "ح", "خ", "د", "x", "y", "z", "w"]


def lexicon_jsonl(records) -> str:
    """records: iterable of (id, pos_tag, lemmas)."""
    lines = [
        json.dumps({"id": sid, "pos": pos, "lemmas": list(lemmas)}, ensure_ascii=False)
        for sid, pos, lemmas in records
    ]
    return "\n".join(lines)


def make_lexicon(records) -> Lexicon:
    """Build a lexicon through the JSONL loader (the production path)."""
    return load_lexicon(io.StringIO(lexicon_jsonl(records)))


def lemma_strategy(max_tokens: int = 3):
    return st.lists(st.sampled_from(TOKEN_POOL), min_size=1, max_size=max_tokens).map(" ".join)


def lexicon_strategy(max_synsets: int = 6, max_lemma_tokens: int = 3):
    """Random lexicons with unique ids s0..sN over the shared token pool."""
    synset_lemmas = st.lists(
        lemma_strategy(max_lemma_tokens), min_size=1, max_size=4, unique=True
    )
    return st.lists(synset_lemmas, min_size=0, max_size=max_synsets).map(
        lambda groups: make_lexicon(
            [(f"s{i}", "n", lemmas) for i, lemmas in enumerate(groups)]
        )
    )


def token_stream_strategy(max_size: int = 12):
    return st.lists(st.sampled_from(TOKEN_POOL), max_size=max_size)


def random_corpus(rng: random.Random, n_docs: int, vocab=None, min_len=3, max_len=40):
    """Deterministic synthetic corpus of (doc_id, text) pairs."""
    vocab = vocab or TOKEN_POOL
    docs = []
    for i in range(n_docs):
        length = rng.randint(min_len, max_len)
        words = [rng.choice(vocab) for _ in range(length)]
        docs.append((f"d{i:05d}", " ".join(words)))
    return docs
