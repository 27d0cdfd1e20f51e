from __future__ import annotations

import io
import random

import pytest

from semindex import (
    IndexMode,
    Lexicon,
    LexiconMismatchWarning,
    MissingIndexError,
    Query,
    QueryFileError,
    RunFormatError,
    SearchSystem,
    SearchType,
    build_index,
    format_run,
    read_queries,
    read_run,
    write_run,
)

from helpers import make_lexicon, random_corpus

SIN_RECORDS = [("s1", "n", ["خطيئة", "إثم"])]


def build_system(corpus, lex: Lexicon, stoplist=frozenset()) -> SearchSystem:
    return SearchSystem(
        plain_index=build_index(corpus, IndexMode.PLAIN, stoplist=stoplist),
        semantic_index=build_index(corpus, IndexMode.SEMANTIC, lex, stoplist=stoplist),
        lexicon=lex,
        stoplist=stoplist,
    )


class TestSearchType:
    def test_index_and_expansion_mapping(self):
        assert not SearchType.R0.uses_semantic_index and not SearchType.R0.expands_query
        assert SearchType.R1.uses_semantic_index and SearchType.R1.expands_query
        assert not SearchType.R2.uses_semantic_index and SearchType.R2.expands_query
        assert SearchType.R3.uses_semantic_index and not SearchType.R3.expands_query


class TestRunQuery:
    def test_empty_lexicon_collapses_all_types(self):
        corpus = [("d1", "اثم ذنب"), ("d2", "بيت"), ("d3", "ذنب")]
        system = build_system(corpus, Lexicon())
        for text in ("اثم", "ذنب بيت", "غائب"):
            results = [
                system.run_query(Query("q", text), st) for st in SearchType
            ]
            assert all(r == results[0] for r in results[1:])

    def test_expansion_bridges_synonyms(self):
        # document says one synonym, query says the other
        lex = make_lexicon(SIN_RECORDS)
        system = build_system([("d1", "خطيئة")], lex)
        query = Query("q1", "اثم")
        assert system.run_query(query, SearchType.R0).found_count == 0
        assert system.run_query(query, SearchType.R2).found_count == 1
        assert system.run_query(query, SearchType.R1).found_count == 1

    def test_semantic_index_loses_surface_form(self):
        # document says the non-canonical synonym; R3's raw query misses it
        lex = make_lexicon(SIN_RECORDS)
        system = build_system([("d1", "اثم")], lex)
        query = Query("q1", "اثم")
        assert system.run_query(query, SearchType.R3).found_count == 0
        assert system.run_query(query, SearchType.R0).found_count == 1

    def test_stopwords_removed_from_query(self):
        system = build_system([("d1", "اثم")], Lexicon(), stoplist=frozenset({"في"}))
        ranked = system.run_query(Query("q1", "في اثم"), SearchType.R0)
        assert ranked.found_count == 1

    def test_qid_carried(self):
        system = build_system([("d1", "اثم")], Lexicon())
        assert system.run_query(Query("q42", "اثم"), SearchType.R0).qid == "q42"

    def test_missing_plain_index(self):
        system = SearchSystem(semantic_index=build_index([], IndexMode.SEMANTIC, Lexicon()))
        with pytest.raises(MissingIndexError, match="plain"):
            system.run_query(Query("q", "اثم"), SearchType.R0)

    def test_missing_semantic_index(self):
        system = SearchSystem(plain_index=build_index([], IndexMode.PLAIN))
        with pytest.raises(MissingIndexError, match="semantic"):
            system.run_query(Query("q", "اثم"), SearchType.R1)

    def test_swapped_index_modes_rejected(self):
        plain = build_index([], IndexMode.PLAIN)
        system = SearchSystem(plain_index=plain, semantic_index=plain)
        with pytest.raises(ValueError, match="Semantic mode"):
            system.run_query(Query("q", "اثم"), SearchType.R3)

    def test_lexicon_mismatch_warns_on_expansion(self):
        lex = make_lexicon(SIN_RECORDS)
        other = make_lexicon([("s9", "n", ["بيت", "دار"])])
        semantic = build_index([("d1", "اثم")], IndexMode.SEMANTIC, lex)
        system = SearchSystem(semantic_index=semantic, lexicon=other)
        with pytest.warns(LexiconMismatchWarning):
            system.run_query(Query("q", "بيت"), SearchType.R1)

    def test_matching_lexicon_does_not_warn(self, recwarn):
        lex = make_lexicon(SIN_RECORDS)
        semantic = build_index([("d1", "اثم")], IndexMode.SEMANTIC, lex)
        system = SearchSystem(semantic_index=semantic, lexicon=lex)
        system.run_query(Query("q", "اثم"), SearchType.R1)
        assert not [w for w in recwarn if issubclass(w.category, LexiconMismatchWarning)]

    def test_r2_found_set_contains_r0(self):
        rng = random.Random(23)
        vocab = ["اثم", "ذنب", "خطيئه", "بيت", "دار", "x", "y"]
        for trial in range(25):
            n_synsets = rng.randint(0, 4)
            records = []
            for i in range(n_synsets):
                lemmas = rng.sample(vocab, rng.randint(1, 3))
                records.append((f"s{i}", "n", lemmas))
            lex = make_lexicon(records)
            corpus = random_corpus(rng, rng.randint(1, 8), vocab=vocab, min_len=1, max_len=10)
            system = build_system(corpus, lex)
            query = Query("q", " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 3))))
            r0 = set(system.run_query(query, SearchType.R0).doc_ids())
            r2 = set(system.run_query(query, SearchType.R2).doc_ids())
            assert r0 <= r2

    def test_r1_and_r3_produce_valid_rankings(self):
        # replacement can lose or gain matches relative to R0; the only
        # guarantee is a well-formed ranking
        rng = random.Random(31)
        vocab = ["اثم", "ذنب", "خطيئه", "بيت", "دار", "x"]
        for _ in range(25):
            records = [
                (f"s{i}", "n", rng.sample(vocab, rng.randint(1, 3)))
                for i in range(rng.randint(0, 3))
            ]
            lex = make_lexicon(records)
            corpus = random_corpus(rng, rng.randint(1, 6), vocab=vocab, min_len=1, max_len=8)
            system = build_system(corpus, lex)
            query = Query("q", " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 3))))
            for st in (SearchType.R1, SearchType.R3):
                ranked = system.run_query(query, st)
                assert [e.rank for e in ranked.entries] == list(range(1, len(ranked.entries) + 1))
                scores = [e.score for e in ranked.entries]
                assert all(a >= b for a, b in zip(scores, scores[1:]))
                assert all(s > 0 for s in scores)
                assert ranked.found_count >= len(ranked.entries)


class TestBatchRun:
    def test_empty_query_list(self):
        system = build_system([("d1", "اثم")], Lexicon())
        run = system.batch_run([], SearchType.R0)
        assert run.results == ()
        assert format_run(run) == ""

    def test_duplicate_qids_rejected(self):
        system = build_system([("d1", "اثم")], Lexicon())
        with pytest.raises(QueryFileError, match="duplicate qid"):
            system.batch_run([Query("q1", "اثم"), Query("q1", "ذنب")], SearchType.R0)

    def test_batch_equals_concatenated_singles(self):
        system = build_system([("d1", "اثم ذنب"), ("d2", "ذنب"), ("d3", "بيت")], Lexicon())
        queries = [Query("q1", "اثم"), Query("q2", "ذنب"), Query("q3", "غائب")]
        batch = system.batch_run(queries, SearchType.R0, tag="t")
        singles = "".join(
            format_run(system.batch_run([q], SearchType.R0, tag="t")) for q in queries
        )
        assert format_run(batch) == singles

    def test_rerun_is_identical(self, tmp_path):
        lex = make_lexicon(SIN_RECORDS)
        system = build_system([("d1", "اثم ذنب"), ("d2", "خطيئة")], lex)
        queries = [Query("q1", "اثم"), Query("q2", "بيت")]
        paths = []
        for name in ("a", "b"):
            run = system.batch_run(queries, SearchType.R1, depth=10)
            run_path = tmp_path / f"{name}.run"
            found_path = tmp_path / f"{name}.found.json"
            write_run(run, run_path, found_path)
            paths.append((run_path, found_path))
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
        assert paths[0][1].read_bytes() == paths[1][1].read_bytes()

    def test_query_order_preserved(self):
        system = build_system([("d1", "اثم")], Lexicon())
        run = system.batch_run([Query("b", "اثم"), Query("a", "اثم")], SearchType.R0)
        assert [rl.qid for rl in run.results] == ["b", "a"]

    def test_error_annotated_with_qid(self):
        system = SearchSystem(plain_index=build_index([], IndexMode.PLAIN))
        with pytest.raises(MissingIndexError, match="query 'q7'"):
            system.batch_run([Query("q7", "اثم")], SearchType.R1)


class TestRunFiles:
    def test_trec_line_format(self):
        system = build_system([("d1", "اثم")], Lexicon())
        run = system.batch_run([Query("q1", "اثم")], SearchType.R0, tag="mytag")
        line = format_run(run).splitlines()[0]
        qid, q0, doc_id, rank, score, tag = line.split()
        assert (qid, q0, doc_id, rank, tag) == ("q1", "Q0", "d1", "1", "mytag")
        assert len(score.split(".")[1]) == 6

    def test_round_trip_with_sidecar(self, tmp_path):
        system = build_system([("d1", "اثم ذنب"), ("d2", "ذنب")], Lexicon())
        queries = [Query("q1", "ذنب"), Query("q2", "غائب"), Query("q3", "اثم")]
        run = system.batch_run(queries, SearchType.R0, depth=1, tag="t")
        run_path, found_path = tmp_path / "t.run", tmp_path / "t.found.json"
        write_run(run, run_path, found_path)
        loaded = read_run(run_path, found_path)
        assert [rl.qid for rl in loaded.results] == ["q1", "q2", "q3"]
        by_qid = {rl.qid: rl for rl in loaded.results}
        assert by_qid["q1"].found_count == 2  # truncated to depth 1 but found 2
        assert len(by_qid["q1"].entries) == 1
        assert by_qid["q2"].found_count == 0
        assert by_qid["q2"].entries == ()
        original = {rl.qid: rl for rl in run.results}
        for qid, rl in by_qid.items():
            assert rl.found_count == original[qid].found_count
            assert [e.doc_id for e in rl.entries] == [e.doc_id for e in original[qid].entries]

    def test_read_without_sidecar_falls_back_to_length(self, tmp_path):
        system = build_system([("d1", "اثم")], Lexicon())
        run = system.batch_run([Query("q1", "اثم")], SearchType.R0)
        run_path = tmp_path / "t.run"
        write_run(run, run_path)
        loaded = read_run(run_path)
        assert loaded.results[0].found_count == 1

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "bad.run"
        path.write_text("q1 Q0 d1 1 0.5 tag\nq1 Q0 d2 2\n", encoding="utf-8")
        with pytest.raises(RunFormatError, match="line 2"):
            read_run(path)

    def test_out_of_order_rank_rejected(self, tmp_path):
        path = tmp_path / "bad.run"
        path.write_text("q1 Q0 d1 2 0.5 tag\n", encoding="utf-8")
        with pytest.raises(RunFormatError, match="rank"):
            read_run(path)


class TestReadQueries:
    def test_tsv(self):
        queries = read_queries(io.StringIO("q1\tاثم كبير\nq2\tذنب\n"))
        assert queries == [Query("q1", "اثم كبير"), Query("q2", "ذنب")]

    def test_missing_tab(self):
        with pytest.raises(QueryFileError, match="line 1"):
            read_queries(io.StringIO("q1 اثم\n"))

    def test_duplicate_qid(self):
        with pytest.raises(QueryFileError, match="duplicate qid"):
            read_queries(io.StringIO("q1\tاثم\nq1\tذنب\n"))

    def test_blank_lines_skipped(self):
        assert len(read_queries(io.StringIO("\nq1\tاثم\n\n"))) == 1
