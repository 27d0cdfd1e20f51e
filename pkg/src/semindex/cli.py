"""Command-line front end.

Subcommands: ``index``, ``batch``, ``search``, ``eval``, ``compare``, and
``pipeline`` (which chains the whole experiment). Exit codes: 0 success,
1 usage error, 2 data error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ._util import DataError, atomic_write_text
from .config import Config, ConfigError, apply_overrides, config_field_names, load_config, validate_sanity
from .engine import (
    DEFAULT_RUN_TAG,
    MissingIndexError,
    Query,
    SearchSystem,
    SearchType,
    read_queries,
    read_run,
    write_run,
)
from .evalkit import (
    EvalResult,
    delta_report,
    evaluate_run,
    read_qrels,
    render_buckets,
    render_deltas,
    render_records,
    render_summaries,
    render_threeway,
    threeway_report,
)
from .index import IndexMode, build_index, load_index, read_corpus
from .lexicon import Lexicon, load_lexicon
from .textnorm import load_stopwords

logger = logging.getLogger("semindex")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3


class UsageError(Exception):
    """Command invoked without the inputs it needs."""


# -- shared plumbing ----------------------------------------------------------


def _index_path(cfg: Config, mode: IndexMode) -> Path:
    return cfg.index_dir / f"{mode.value}.idx"


def _run_path(cfg: Config, st: SearchType) -> Path:
    return cfg.report_dir / f"{cfg.tag}.{st.value}.run"


def _found_path(cfg: Config, st: SearchType) -> Path:
    return cfg.report_dir / f"{cfg.tag}.{st.value}.found.json"


def _sidecar_for(run_path: Path) -> Path | None:
    candidate = run_path.with_name(run_path.name.removesuffix(".run") + ".found.json")
    return candidate if candidate.exists() else None


def _load_stoplist(cfg: Config) -> frozenset[str]:
    if cfg.stopwords is None:
        return frozenset()
    return load_stopwords(cfg.stopwords)


def _load_lexicon(cfg: Config) -> Lexicon:
    if cfg.lexicon is None:
        return Lexicon()
    return load_lexicon(cfg.lexicon)


def _require(cfg: Config, key: str, why: str) -> Path:
    value = getattr(cfg, key)
    if value is None:
        raise UsageError(f"--{key} is required {why}")
    return value


def _build_and_save(cfg: Config, mode: IndexMode, export_json: Path | None = None) -> dict:
    corpus_path = _require(cfg, "corpus", "to build an index")
    lex = None
    if mode is IndexMode.SEMANTIC:
        _require(cfg, "lexicon", "for a semantic index")
        lex = _load_lexicon(cfg)
    read_result = read_corpus(corpus_path)
    for skip in read_result.skipped:
        logger.warning("corpus line %d skipped: %s", skip.line_no, skip.reason)
    idx = build_index(
        read_result.documents,
        mode,
        lex,
        _load_stoplist(cfg),
        max_concept_tokens=cfg.max_concept_tokens,
        workers=cfg.workers,
    )
    cfg.index_dir.mkdir(parents=True, exist_ok=True)
    index_path = _index_path(cfg, mode)
    idx.save(index_path)
    report = {
        "mode": mode.value,
        "documents_indexed": idx.doc_count,
        "documents_skipped": len(read_result.skipped),
        "skipped": [{"line": s.line_no, "reason": s.reason} for s in read_result.skipped],
        "vocabulary_size": idx.vocabulary_size,
    }
    atomic_write_text(
        cfg.index_dir / f"{mode.value}.build.json",
        json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
    )
    if export_json is not None:
        atomic_write_text(export_json, idx.export_json() + "\n")
    logger.info("wrote %s (%d docs, %d terms)", index_path, idx.doc_count, idx.vocabulary_size)
    return report


def _load_system(cfg: Config, st: SearchType) -> SearchSystem:
    needed = IndexMode.SEMANTIC if st.uses_semantic_index else IndexMode.PLAIN
    path = _index_path(cfg, needed)
    if not path.exists():
        raise FileNotFoundError(
            f"missing index file {path}; build it with 'semindex index --mode {needed.value}'"
        )
    idx = load_index(path)
    lex = _load_lexicon(cfg) if st.expands_query else Lexicon()
    system = SearchSystem(
        lexicon=lex,
        stoplist=_load_stoplist(cfg),
        k1=cfg.k1,
        b=cfg.b,
        max_concept_tokens=cfg.max_concept_tokens,
    )
    if needed is IndexMode.SEMANTIC:
        system.semantic_index = idx
    else:
        system.plain_index = idx
    return system


def _run_batch(cfg: Config, st: SearchType) -> tuple[Path, Path]:
    queries_path = _require(cfg, "queries", "to run a batch")
    system = _load_system(cfg, st)
    queries = read_queries(queries_path)
    run = system.batch_run(queries, st, depth=cfg.depth, tag=cfg.tag)
    cfg.report_dir.mkdir(parents=True, exist_ok=True)
    run_path, found_path = _run_path(cfg, st), _found_path(cfg, st)
    write_run(run, run_path, found_path)
    logger.info("wrote %s (%d queries)", run_path, len(run.results))
    return run_path, found_path


def _evaluate_run_file(cfg: Config, run_file: Path, qrels) -> EvalResult:
    run = read_run(run_file, _sidecar_for(run_file))
    system_label = run_file.name.removesuffix(".run")
    result = evaluate_run(run, qrels, system=system_label)
    if result.skipped_qids:
        logger.warning(
            "%s: %d queries without relevance judgments skipped: %s",
            system_label,
            len(result.skipped_qids),
            ", ".join(result.skipped_qids),
        )
    return result


def _write_eval_outputs(cfg: Config, results: list[EvalResult]) -> str:
    cfg.report_dir.mkdir(parents=True, exist_ok=True)
    for result in results:
        stem = result.summary.system
        atomic_write_text(cfg.report_dir / f"{stem}.eval.tsv", render_records(result.records, "tsv"))
        atomic_write_text(cfg.report_dir / f"{stem}.eval.json", render_records(result.records, "json"))
    summaries = [r.summary for r in results]
    summary_tsv = render_summaries(summaries, "tsv")
    atomic_write_text(cfg.report_dir / "summary.tsv", summary_tsv)
    atomic_write_text(cfg.report_dir / "summary.json", render_summaries(summaries, "json"))
    return summary_tsv


def _compare_runs(cfg: Config, baseline: Path, treatments: list[Path]) -> str:
    qrels_path = _require(cfg, "qrels", "to compare runs")
    qrels = read_qrels(qrels_path)
    base_result = _evaluate_run_file(cfg, baseline, qrels)
    base_stem = baseline.name.removesuffix(".run")
    cfg.report_dir.mkdir(parents=True, exist_ok=True)

    stdout_parts = []
    treatment_results = []
    for treatment in treatments:
        result = _evaluate_run_file(cfg, treatment, qrels)
        treatment_results.append(result)
        stem = treatment.name.removesuffix(".run")
        report = delta_report(list(base_result.records), list(result.records))
        prefix = f"{base_stem}_vs_{stem}"
        atomic_write_text(cfg.report_dir / f"{prefix}.deltas.tsv", render_deltas(report.records, "tsv"))
        atomic_write_text(cfg.report_dir / f"{prefix}.deltas.json", render_deltas(report.records, "json"))
        buckets_tsv = render_buckets(report.buckets, "tsv")
        atomic_write_text(cfg.report_dir / f"{prefix}.buckets.tsv", buckets_tsv)
        atomic_write_text(cfg.report_dir / f"{prefix}.buckets.json", render_buckets(report.buckets, "json"))
        stdout_parts.append(f"== {prefix}\n{buckets_tsv}")

    if len(treatment_results) == 3:
        labels = tuple(r.summary.system for r in treatment_results)
        report = threeway_report(
            list(treatment_results[0].records),
            list(treatment_results[1].records),
            list(treatment_results[2].records),
            labels=labels,
        )
        threeway_tsv = render_threeway(report, "tsv")
        atomic_write_text(cfg.report_dir / "threeway.tsv", threeway_tsv)
        atomic_write_text(cfg.report_dir / "threeway.json", render_threeway(report, "json"))
        stdout_parts.append(f"== threeway\n{threeway_tsv}")
    return "\n".join(stdout_parts)


# -- subcommands ---------------------------------------------------------------


def cmd_index(cfg: Config, args: argparse.Namespace) -> int:
    mode = IndexMode(args.mode)
    report = _build_and_save(cfg, mode, args.export_json)
    print(
        f"indexed {report['documents_indexed']} documents "
        f"({report['documents_skipped']} skipped, "
        f"{report['vocabulary_size']} terms) -> {_index_path(cfg, mode)}"
    )
    return EXIT_OK


def cmd_batch(cfg: Config, args: argparse.Namespace) -> int:
    st = SearchType(args.search_type)
    run_path, found_path = _run_batch(cfg, st)
    print(f"wrote {run_path} and {found_path}")
    return EXIT_OK


def cmd_search(cfg: Config, args: argparse.Namespace) -> int:
    st = SearchType(args.search_type)
    system = _load_system(cfg, st)
    ranked = system.run_query(Query("q0", args.text), st, depth=cfg.depth)
    for entry in ranked.entries:
        print(f"{entry.rank}\t{entry.doc_id}\t{entry.score:.6f}")
    logger.info("found %d documents", ranked.found_count)
    return EXIT_OK


def cmd_eval(cfg: Config, args: argparse.Namespace) -> int:
    qrels_path = _require(cfg, "qrels", "to evaluate runs")
    qrels = read_qrels(qrels_path)
    results = [_evaluate_run_file(cfg, run_file, qrels) for run_file in args.runs]
    summary_tsv = _write_eval_outputs(cfg, results)
    print(summary_tsv, end="")
    return EXIT_OK


def cmd_compare(cfg: Config, args: argparse.Namespace) -> int:
    print(_compare_runs(cfg, args.baseline, args.treatments), end="")
    return EXIT_OK


def cmd_pipeline(cfg: Config, args: argparse.Namespace) -> int:
    """Full experiment: both indexes, all four run types, eval, compare."""
    for key in ("corpus", "lexicon", "queries", "qrels"):
        _require(cfg, key, "for the pipeline")
    _build_and_save(cfg, IndexMode.PLAIN)
    _build_and_save(cfg, IndexMode.SEMANTIC)
    run_paths = {st: _run_batch(cfg, st)[0] for st in SearchType}

    qrels = read_qrels(cfg.qrels)
    results = [_evaluate_run_file(cfg, run_paths[st], qrels) for st in SearchType]
    summary_tsv = _write_eval_outputs(cfg, results)
    comparison = _compare_runs(
        cfg,
        run_paths[SearchType.R0],
        [run_paths[SearchType.R1], run_paths[SearchType.R2], run_paths[SearchType.R3]],
    )
    print(summary_tsv)
    print(comparison, end="")
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="flat key = value config file")
    parser.add_argument("--lexicon", type=Path, help="lexicon JSONL file")
    parser.add_argument("--corpus", type=Path, help="corpus JSONL file")
    parser.add_argument("--stopwords", type=Path, help="stopword file, one token per line")
    parser.add_argument("--queries", type=Path, help="query TSV file (qid<TAB>text)")
    parser.add_argument("--qrels", type=Path, help="TREC qrels file")
    parser.add_argument("--index-dir", dest="index_dir", type=Path, help="index output directory")
    parser.add_argument("--report-dir", dest="report_dir", type=Path, help="report output directory")
    parser.add_argument("--k1", type=float, help="BM25 k1 (default 1.2)")
    parser.add_argument("--b", type=float, help="BM25 b (default 0.75)")
    parser.add_argument(
        "--max-concept-tokens",
        dest="max_concept_tokens",
        type=int,
        help="longest multiword concept to match (default 4)",
    )
    parser.add_argument("--depth", type=int, help="ranking depth kept in run files (default 1000)")
    parser.add_argument("--workers", type=int, help="parallel workers for index builds (default 1)")
    parser.add_argument("--tag", help=f"run tag (default {DEFAULT_RUN_TAG!r})")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semindex",
        description="Concept-based semantic indexing and retrieval experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and persist an inverted index")
    p.add_argument("--mode", choices=[m.value for m in IndexMode], required=True)
    p.add_argument("--export-json", dest="export_json", type=Path, help="also dump the index as JSON")
    _add_common_options(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("batch", help="run the query set in one search type")
    p.add_argument("--search-type", dest="search_type", choices=[s.value for s in SearchType], required=True)
    _add_common_options(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("search", help="run one ad-hoc query to stdout")
    p.add_argument("--search-type", dest="search_type", choices=[s.value for s in SearchType], default="R0")
    p.add_argument("text", help="query text")
    _add_common_options(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", help="evaluate run files against qrels")
    p.add_argument("runs", nargs="+", type=Path, help="run files to evaluate")
    _add_common_options(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="delta/bucket/three-way comparison of runs")
    p.add_argument("baseline", type=Path, help="baseline run file")
    p.add_argument("treatments", nargs="+", type=Path, help="treatment run files")
    _add_common_options(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("pipeline", help="index both modes, run R0-R3, evaluate, compare")
    _add_common_options(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def resolve_config(args: argparse.Namespace) -> Config:
    cfg = load_config(args.config) if args.config else Config()
    overrides = {
        key: getattr(args, key) for key in config_field_names() if hasattr(args, key)
    }
    apply_overrides(cfg, overrides)
    validate_sanity(cfg)
    return cfg


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = resolve_config(args)
        return args.func(cfg, args)
    except (UsageError, ConfigError, MissingIndexError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except DataError as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
