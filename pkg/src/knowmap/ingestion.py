"""Corpus ingestion: JSON-lines records, folder trees, gazetteer matching, annotation tables.

Concept extraction is deterministic dictionary matching: gazetteer surface forms
are normalised (case-folded, punctuation stripped) into token phrases and matched
greedily longest-first over the normalised token stream of each document.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DuplicateConceptId,
    DuplicateId,
    MalformedRecord,
    MalformedRow,
    NonPositiveCount,
)

log = logging.getLogger(__name__)

#: Longest gazetteer phrase considered during matching, in tokens.
MAX_PHRASE_TOKENS = 6

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

_CORPUS_FIELDS = ("id", "title", "abstract", "authors", "year", "venue", "doi", "url", "folders")


def tokenize(text: str) -> list[str]:
    """Case-folded alphanumeric tokens; punctuation acts as a separator."""
    return _TOKEN_RE.findall(text.casefold())


def normalize_phrase(surface: str) -> tuple[str, ...]:
    return tuple(tokenize(surface))


@dataclass
class EntityRecord:
    """One corpus document plus the concept set filled in by annotation."""

    id: str
    title: str = ""
    abstract: str = ""
    authors: list[str] = field(default_factory=list)
    year: int = 0
    venue: str | None = None
    doi: str | None = None
    url: str | None = None
    folder_paths: list[str] = field(default_factory=list)
    concepts: set[str] = field(default_factory=set)


@dataclass
class ConceptEntry:
    concept_id: str
    preferred_name: str
    synonyms: list[str]
    source_vocab: str = ""

    def surface_forms(self) -> list[str]:
        forms = [self.preferred_name]
        forms.extend(s for s in self.synonyms if s != self.preferred_name)
        return forms


class Gazetteer:
    """Concept dictionary indexed by normalised token phrase.

    When two entries normalise to the same phrase the first one loaded wins;
    there is no vocabulary precedence beyond file order.
    """

    def __init__(self, entries: Iterable[ConceptEntry]):
        self.entries: list[ConceptEntry] = list(entries)
        self.phrases: dict[tuple[str, ...], str] = {}
        self.max_phrase_len = 1
        for entry in self.entries:
            for form in entry.surface_forms():
                phrase = normalize_phrase(form)
                if not phrase:
                    continue
                if len(phrase) > MAX_PHRASE_TOKENS:
                    log.warning(
                        "gazetteer form %r (%s) exceeds %d tokens, skipped",
                        form, entry.concept_id, MAX_PHRASE_TOKENS,
                    )
                    continue
                if phrase in self.phrases:
                    continue
                self.phrases[phrase] = entry.concept_id
                self.max_phrase_len = max(self.max_phrase_len, len(phrase))

    def __len__(self) -> int:
        return len(self.entries)

    def names(self) -> dict[str, str]:
        """concept id -> preferred name (first entry wins)."""
        out: dict[str, str] = {}
        for entry in self.entries:
            out.setdefault(entry.concept_id, entry.preferred_name)
        return out


@dataclass
class AnnotationTable:
    """entity id -> concept id -> occurrence count (the curated/extracted annotation table)."""

    rows: dict[str, dict[str, int]] = field(default_factory=dict)

    def concepts_of(self, entity_id: str) -> set[str]:
        return set(self.rows.get(entity_id, ()))

    def entity_ids(self) -> list[str]:
        return sorted(self.rows)

    def concept_ids(self) -> list[str]:
        seen: set[str] = set()
        for row in self.rows.values():
            seen.update(row)
        return sorted(seen)


@dataclass
class FolderNode:
    path: str
    label: str
    parent: str | None
    children: list[str] = field(default_factory=list)


@dataclass
class FolderTree:
    """Union of record folder paths; the root is the empty path ``""``."""

    nodes: dict[str, FolderNode] = field(default_factory=dict)

    def __post_init__(self):
        if "" not in self.nodes:
            self.nodes[""] = FolderNode(path="", label="root", parent=None)

    @property
    def root(self) -> FolderNode:
        return self.nodes[""]

    def paths(self) -> list[str]:
        return sorted(p for p in self.nodes if p)


def _clean_folder_path(raw: str) -> str | None:
    segments = [seg for seg in raw.split("/") if seg.strip()]
    if not segments:
        return None
    return "/".join(segments)


def _parse_record(obj: dict, line_no: int) -> EntityRecord:
    def fail(reason: str):
        raise MalformedRecord(line_no, reason)

    if not isinstance(obj, dict):
        fail("record is not a JSON object")
    unknown = set(obj) - set(_CORPUS_FIELDS)
    if unknown:
        fail(f"unknown fields {sorted(unknown)}")
    entity_id = obj.get("id")
    if not isinstance(entity_id, str) or not entity_id:
        fail("missing or empty 'id'")
    title = obj.get("title", "")
    abstract = obj.get("abstract", "")
    if not isinstance(title, str) or not isinstance(abstract, str):
        fail("'title' and 'abstract' must be strings")
    authors = obj.get("authors", [])
    if not isinstance(authors, list) or not all(isinstance(a, str) for a in authors):
        fail("'authors' must be a list of strings")
    year = obj.get("year", 0)
    if not isinstance(year, int) or isinstance(year, bool) or year < 0:
        fail("'year' must be an integer >= 0")
    optional: dict[str, str | None] = {}
    for key in ("venue", "doi", "url"):
        value = obj.get(key)
        if value is not None and not isinstance(value, str):
            fail(f"'{key}' must be a string")
        optional[key] = value
    folders_raw = obj.get("folders", [])
    if not isinstance(folders_raw, list) or not all(isinstance(f, str) for f in folders_raw):
        fail("'folders' must be a list of strings")
    folder_paths = []
    for raw in folders_raw:
        cleaned = _clean_folder_path(raw)
        if cleaned is not None and cleaned not in folder_paths:
            folder_paths.append(cleaned)
    return EntityRecord(
        id=entity_id,
        title=title,
        abstract=abstract,
        authors=list(authors),
        year=year,
        venue=optional["venue"],
        doi=optional["doi"],
        url=optional["url"],
        folder_paths=folder_paths,
    )


def parse_corpus(path: str | Path) -> list[EntityRecord]:
    """Parse a UTF-8 JSON-lines corpus file, in file order.

    Raises MalformedRecord (with the offending line number) or DuplicateId.
    """
    records: list[EntityRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})") from exc
            record = _parse_record(obj, line_no)
            if record.id in seen:
                raise DuplicateId(record.id)
            seen.add(record.id)
            records.append(record)
    return records


def record_to_dict(record: EntityRecord) -> dict:
    """Corpus-schema dict for a record (concepts are derived, not part of the schema)."""
    out: dict = {"id": record.id}
    if record.title:
        out["title"] = record.title
    if record.abstract:
        out["abstract"] = record.abstract
    if record.authors:
        out["authors"] = record.authors
    if record.year:
        out["year"] = record.year
    for key in ("venue", "doi", "url"):
        value = getattr(record, key)
        if value is not None:
            out[key] = value
    if record.folder_paths:
        out["folders"] = record.folder_paths
    return out


def dumps_corpus(records: Sequence[EntityRecord]) -> str:
    return "".join(json.dumps(record_to_dict(r), ensure_ascii=False) + "\n" for r in records)


def write_corpus(records: Sequence[EntityRecord], path: str | Path) -> None:
    Path(path).write_text(dumps_corpus(records), encoding="utf-8")


def parse_folder_tree(records: Sequence[EntityRecord]) -> FolderTree:
    """Union of all record folder paths, with intermediate folders materialised."""
    tree = FolderTree()
    for record in records:
        for path in record.folder_paths:
            segments = path.split("/")
            for depth in range(1, len(segments) + 1):
                sub = "/".join(segments[:depth])
                if sub in tree.nodes:
                    continue
                parent = "/".join(segments[: depth - 1])
                tree.nodes[sub] = FolderNode(path=sub, label=segments[depth - 1], parent=parent)
    for node in tree.nodes.values():
        node.children = sorted(
            p for p, n in tree.nodes.items() if p and n.parent == node.path
        )
    return tree


def load_gazetteer(
    path: str | Path, source_vocabs: Iterable[str] | None = None
) -> Gazetteer:
    """Load a TSV gazetteer: conceptId, preferredName, synonym1|synonym2|..., sourceVocab.

    Lines starting with '#' and blank lines are skipped. `source_vocabs`, when
    given, keeps only entries from those vocabularies.
    """
    keep = set(source_vocabs) if source_vocabs is not None else None
    entries: list[ConceptEntry] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise MalformedRow(line_no, f"expected 4 tab-separated columns, got {len(cols)}")
            concept_id, preferred, synonyms_raw, vocab = cols
            if not concept_id:
                raise MalformedRow(line_no, "empty concept id")
            if concept_id in seen_ids:
                raise DuplicateConceptId(concept_id)
            seen_ids.add(concept_id)
            if not normalize_phrase(preferred):
                raise MalformedRow(line_no, "preferred name is empty after normalisation")
            synonyms: list[str] = []
            seen_forms = {normalize_phrase(preferred)}
            for raw in synonyms_raw.split("|"):
                if not raw:
                    continue
                phrase = normalize_phrase(raw)
                if not phrase:
                    raise MalformedRow(line_no, f"synonym {raw!r} is empty after normalisation")
                if phrase in seen_forms:
                    continue
                seen_forms.add(phrase)
                synonyms.append(raw)
            if keep is not None and vocab not in keep:
                continue
            entries.append(
                ConceptEntry(
                    concept_id=concept_id,
                    preferred_name=preferred,
                    synonyms=synonyms,
                    source_vocab=vocab,
                )
            )
    return Gazetteer(entries)


def extract_concepts(text: str, gazetteer: Gazetteer) -> dict[str, int]:
    """Greedy longest-match concept counts over the normalised token stream.

    Matches never overlap: after a phrase of length L is consumed the scan
    resumes after it, so no reported match is a sub-span of another.
    """
    tokens = tokenize(text)
    counts: dict[str, int] = {}
    i = 0
    n = len(tokens)
    max_len = min(gazetteer.max_phrase_len, MAX_PHRASE_TOKENS)
    while i < n:
        matched = False
        for length in range(min(max_len, n - i), 0, -1):
            phrase = tuple(tokens[i : i + length])
            concept_id = gazetteer.phrases.get(phrase)
            if concept_id is not None:
                counts[concept_id] = counts.get(concept_id, 0) + 1
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return counts


def build_annotation_table(
    records: Sequence[EntityRecord], gazetteer: Gazetteer
) -> AnnotationTable:
    """Annotate every record from its title + abstract; one row per record."""
    table = AnnotationTable()
    for record in records:
        counts = extract_concepts(record.title + " " + record.abstract, gazetteer)
        table.rows[record.id] = counts
        record.concepts = set(counts)
    return table


def import_eat(
    path: str | Path, known_ids: Iterable[str] | None = None
) -> AnnotationTable:
    """Import a curated annotation table: TSV rows of entityId, conceptId, count.

    Duplicate (entity, concept) rows are summed. When `known_ids` is given,
    rows for unknown entities are dropped with a warning rather than failing,
    so curation files can outlive corpus snapshots.
    """
    known = set(known_ids) if known_ids is not None else None
    table = AnnotationTable()
    unknown_seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise MalformedRow(line_no, f"expected 3 tab-separated columns, got {len(cols)}")
            entity_id, concept_id, count_raw = cols
            if not entity_id or not concept_id:
                raise MalformedRow(line_no, "empty entity or concept id")
            try:
                count = int(count_raw)
            except ValueError:
                raise MalformedRow(line_no, f"count {count_raw!r} is not an integer") from None
            if count < 1:
                raise NonPositiveCount(line_no, count)
            if known is not None and entity_id not in known:
                if entity_id not in unknown_seen:
                    unknown_seen.add(entity_id)
                    log.warning("annotation table row for unknown entity %r dropped", entity_id)
                continue
            row = table.rows.setdefault(entity_id, {})
            row[concept_id] = row.get(concept_id, 0) + count
    return table


def export_eat(table: AnnotationTable, path: str | Path) -> None:
    lines = []
    for entity_id in sorted(table.rows):
        for concept_id, count in sorted(table.rows[entity_id].items()):
            lines.append(f"{entity_id}\t{concept_id}\t{count}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def apply_table(records: Sequence[EntityRecord], table: AnnotationTable) -> None:
    """Set each record's concept set from the table and materialise missing rows."""
    for record in records:
        table.rows.setdefault(record.id, {})
        record.concepts = table.concepts_of(record.id)
