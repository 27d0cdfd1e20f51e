"""Concept-based semantic indexing and ranked retrieval for Arabic text.

The pipeline: a WordNet-style lexicon supplies synonym sets; documents are
rewritten onto canonical concept lemmas at index time, queries are expanded
with synonyms at search time, and an evaluation kit compares the four
resulting retrieval configurations (R0-R3).
"""

from .engine import (
    LexiconMismatchWarning,
    MissingIndexError,
    Query,
    QueryFileError,
    Run,
    RunFormatError,
    SearchSystem,
    SearchType,
    format_run,
    read_queries,
    read_run,
    write_run,
)
from .evalkit import (
    BucketReport,
    DeltaRecord,
    DeltaReport,
    EvalRecord,
    EvalResult,
    PrecisionSummary,
    Qrels,
    SignBuckets,
    ThreeWayBuckets,
    ThreeWayReport,
    average_precision,
    delta_report,
    evaluate_run,
    precision_at_k,
    read_qrels,
    threeway_report,
)
from .index import (
    DuplicateDocumentError,
    Index,
    IndexFormatError,
    IndexMode,
    Posting,
    RankedList,
    ScoredDoc,
    build_index,
    load_index,
    read_corpus,
)
from .lexicon import Lexicon, LexiconError, LexiconStats, Synset, load_lexicon, normalize_lemma
from .semantics import ConceptMatch, expand, match_concepts, semantize
from .textnorm import TokenStream, load_stopwords, normalize, remove_stopwords, tokenize

__version__ = "0.1.0"
