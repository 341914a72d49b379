import json

import pytest
from hypothesis import given, strategies as st

from knowmap.errors import (
    DuplicateConceptId,
    DuplicateId,
    MalformedRecord,
    MalformedRow,
    NonPositiveCount,
)
from knowmap.ingestion import (
    AnnotationTable,
    ConceptEntry,
    Gazetteer,
    build_annotation_table,
    dumps_corpus,
    export_eat,
    extract_concepts,
    import_eat,
    load_gazetteer,
    parse_corpus,
    parse_folder_tree,
    tokenize,
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestParseCorpus:
    def test_minimal_record(self, tmp_path):
        path = write(tmp_path, "c.jsonl", '{"id":"p1","title":"T","abstract":"A"}\n')
        records = parse_corpus(path)
        assert len(records) == 1
        assert records[0].id == "p1"
        assert records[0].title == "T"
        assert records[0].abstract == "A"

    def test_empty_file(self, tmp_path):
        assert parse_corpus(write(tmp_path, "c.jsonl", "")) == []

    def test_duplicate_id(self, tmp_path):
        path = write(tmp_path, "c.jsonl", '{"id":"p1"}\n{"id":"p1"}\n')
        with pytest.raises(DuplicateId):
            parse_corpus(path)

    def test_malformed_json_reports_line(self, tmp_path):
        path = write(tmp_path, "c.jsonl", '{"id":"p1"}\nnot json\n')
        with pytest.raises(MalformedRecord) as err:
            parse_corpus(path)
        assert err.value.line_no == 2

    def test_missing_id(self, tmp_path):
        with pytest.raises(MalformedRecord):
            parse_corpus(write(tmp_path, "c.jsonl", '{"title":"T"}\n'))

    def test_negative_year(self, tmp_path):
        with pytest.raises(MalformedRecord):
            parse_corpus(write(tmp_path, "c.jsonl", '{"id":"p1","year":-3}\n'))

    def test_empty_folder_segments_filtered(self, tmp_path):
        path = write(
            tmp_path, "c.jsonl", '{"id":"p1","folders":["A//B","", "//"]}\n'
        )
        records = parse_corpus(path)
        assert records[0].folder_paths == ["A/B"]

    def test_file_order_preserved(self, tmp_path):
        lines = "".join(json.dumps({"id": f"p{i}"}) + "\n" for i in range(20))
        records = parse_corpus(write(tmp_path, "c.jsonl", lines))
        assert [r.id for r in records] == [f"p{i}" for i in range(20)]

    def test_round_trip(self, tmp_path):
        text = (
            '{"id":"p1","title":"T","abstract":"A","authors":["X","Y"],"year":2001,'
            '"venue":"V","doi":"d","url":"u","folders":["A/B"]}\n'
            '{"id":"p2","title":"Only title"}\n'
        )
        records = parse_corpus(write(tmp_path, "c.jsonl", text))
        again = parse_corpus(write(tmp_path, "c2.jsonl", dumps_corpus(records)))
        assert again == records


class TestFolderTree:
    def test_union(self, tmp_path):
        path = write(
            tmp_path, "c.jsonl",
            '{"id":"p1","folders":["A/B"]}\n{"id":"p2","folders":["A/C"]}\n',
        )
        tree = parse_folder_tree(parse_corpus(path))
        assert tree.paths() == ["A", "A/B", "A/C"]
        assert tree.nodes["A"].children == ["A/B", "A/C"]
        assert tree.root.children == ["A"]

    def test_intermediate_materialised(self, tmp_path):
        path = write(tmp_path, "c.jsonl", '{"id":"p1","folders":["A/B/C"]}\n')
        tree = parse_folder_tree(parse_corpus(path))
        assert tree.paths() == ["A", "A/B", "A/B/C"]

    def test_no_folders(self, tmp_path):
        tree = parse_folder_tree(parse_corpus(write(tmp_path, "c.jsonl", '{"id":"p1"}\n')))
        assert tree.paths() == []
        assert tree.root.children == []


GAZ = "C001\tKRAS\tKRAS|K-ras\tHGNC\n"


class TestGazetteer:
    def test_basic_row(self, tmp_path):
        gaz = load_gazetteer(write(tmp_path, "g.tsv", GAZ))
        assert len(gaz.entries) == 1
        entry = gaz.entries[0]
        assert entry.concept_id == "C001"
        # KRAS duplicates the preferred name's normalised form; K-ras survives
        assert entry.surface_forms() == ["KRAS", "K-ras"]
        assert len(entry.surface_forms()) == 2

    def test_case_fold_collapses(self, tmp_path):
        gaz = load_gazetteer(write(tmp_path, "g.tsv", "C1\tFoo\tFOO|foo|Foo Bar\tX\n"))
        assert gaz.entries[0].surface_forms() == ["Foo", "Foo Bar"]

    def test_duplicate_concept_id(self, tmp_path):
        text = "C001\tA\tA\tX\nC001\tB\tB\tX\n"
        with pytest.raises(DuplicateConceptId):
            load_gazetteer(write(tmp_path, "g.tsv", text))

    def test_malformed_row(self, tmp_path):
        with pytest.raises(MalformedRow):
            load_gazetteer(write(tmp_path, "g.tsv", "C001\tonly-two-cols\n"))

    def test_source_filter(self, tmp_path):
        text = "C1\tA\tA\tHGNC\nC2\tB\tB\tMeSH\n"
        gaz = load_gazetteer(write(tmp_path, "g.tsv", text), source_vocabs=["MeSH"])
        assert [e.concept_id for e in gaz.entries] == ["C2"]


class TestExtractConcepts:
    def gaz(self, *rows):
        return Gazetteer([ConceptEntry(*row) for row in rows])

    def test_synonym_collapse(self):
        gaz = self.gaz(("C001", "KRAS", ["K-ras"], "HGNC"))
        assert extract_concepts("KRAS and K-ras", gaz) == {"C001": 2}

    def test_longest_match_wins(self):
        gaz = self.gaz(
            ("C_LONG", "non small cell lung cancer", [], "X"),
            ("C_SHORT", "lung cancer", [], "X"),
        )
        counts = extract_concepts("non small cell lung cancer", gaz)
        assert counts == {"C_LONG": 1}

    def test_empty_text(self):
        assert extract_concepts("", self.gaz(("C1", "x", [], "X"))) == {}

    def test_non_overlapping(self):
        gaz = self.gaz(("C1", "a b", [], "X"), ("C2", "b c", [], "X"))
        # greedy left-to-right: "a b" consumed first, then "c" alone matches nothing
        assert extract_concepts("a b c", gaz) == {"C1": 1}

    def test_punctuation_stripped(self):
        gaz = self.gaz(("C1", "tumor necrosis factor", [], "X"))
        assert extract_concepts("Tumor-necrosis factor!", gaz) == {"C1": 1}

    @given(st.text(alphabet="ab x-,.", min_size=0, max_size=60))
    def test_deterministic_and_no_nested_matches(self, text):
        gaz = self.gaz(("C1", "a b", [], "X"), ("C2", "a", [], "X"), ("C3", "b x a", [], "X"))
        first = extract_concepts(text, gaz)
        assert first == extract_concepts(text, gaz)
        # longest-match property: reconstruct matched spans and check disjointness
        tokens = tokenize(text)
        spans = []
        i = 0
        while i < len(tokens):
            for length in range(min(6, len(tokens) - i), 0, -1):
                if tuple(tokens[i : i + length]) in gaz.phrases:
                    spans.append((i, i + length))
                    i += length
                    break
            else:
                i += 1
        for (s1, e1) in spans:
            for (s2, e2) in spans:
                if (s1, e1) != (s2, e2):
                    assert e1 <= s2 or e2 <= s1  # disjoint


class TestAnnotationTable:
    def test_build_counts_rows(self, tmp_path):
        corpus = write(
            tmp_path, "c.jsonl",
            '{"id":"p1","title":"KRAS study"}\n{"id":"p2","title":"nothing here"}\n',
        )
        gaz = load_gazetteer(write(tmp_path, "g.tsv", GAZ))
        records = parse_corpus(corpus)
        table = build_annotation_table(records, gaz)
        assert set(table.rows) == {"p1", "p2"}
        assert table.rows["p1"] == {"C001": 1}
        assert table.rows["p2"] == {}
        assert records[0].concepts == {"C001"}

    def test_row_count_equals_corpus(self, tmp_path):
        lines = "".join(json.dumps({"id": f"p{i}", "title": "KRAS"}) + "\n" for i in range(9))
        records = parse_corpus(write(tmp_path, "c.jsonl", lines))
        gaz = load_gazetteer(write(tmp_path, "g.tsv", GAZ))
        assert len(build_annotation_table(records, gaz).rows) == 9


class TestImportEat:
    def test_basic(self, tmp_path):
        table = import_eat(write(tmp_path, "e.tsv", "p1\tC1\t3\n"))
        assert table.rows == {"p1": {"C1": 3}}

    def test_zero_count(self, tmp_path):
        with pytest.raises(NonPositiveCount):
            import_eat(write(tmp_path, "e.tsv", "p1\tC1\t0\n"))

    def test_duplicates_summed(self, tmp_path):
        table = import_eat(write(tmp_path, "e.tsv", "p1\tC1\t2\np1\tC1\t3\n"))
        assert table.rows == {"p1": {"C1": 5}}

    def test_unknown_entities_warn_not_fail(self, tmp_path, caplog):
        path = write(tmp_path, "e.tsv", "p1\tC1\t1\nghost\tC1\t1\n")
        with caplog.at_level("WARNING"):
            table = import_eat(path, known_ids=["p1"])
        assert set(table.rows) == {"p1"}
        assert any("ghost" in message for message in caplog.messages)

    def test_malformed_row(self, tmp_path):
        with pytest.raises(MalformedRow):
            import_eat(write(tmp_path, "e.tsv", "p1\tC1\tnot-a-number\n"))

    def test_export_round_trip(self, tmp_path):
        table = AnnotationTable(rows={"p2": {"C2": 1}, "p1": {"C1": 3, "C0": 2}})
        out = tmp_path / "out.tsv"
        export_eat(table, out)
        assert import_eat(out).rows == table.rows
