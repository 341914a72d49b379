"""Deterministic synthetic demo corpus: 200 records, 3-level folders, 500 concepts.

Used by the test suite and as a runnable example. Regeneration is
byte-identical: all content derives from one fixed RNG seed.

Run `python -m knowmap.demo <directory>` to write corpus.jsonl, gazetteer.tsv
and config.toml.
"""
from __future__ import annotations

import json
import random
import sys
from pathlib import Path

DEMO_SEED = 20240601

_DOMAINS = ("Oncology", "Immunology", "Biomarkers", "Modalities", "Informatics")
_SUBTOPICS = ("Mechanisms", "Clinical", "Assays", "Models")
_LEAVES = ("Discovery", "Validation")

_SYLLABLES = (
    "ver", "tal", "nex", "ori", "lum", "cra", "dex", "pan", "qui", "sor",
    "bri", "fen", "gal", "hes", "jor", "kel", "mir", "nol", "pra", "rex",
    "sil", "tor", "ulm", "vox", "wex", "yal", "zor", "ank", "bel", "cor",
)
_SUFFIXES = ("in", "ase", "ol", "ide", "ium", "an", "ex", "ate")
_VOCABS = ("MeSH", "HGNC", "NCI", "DRUGBANK", "HPO", "RXNORM")

_FIRST = ("A.", "B.", "C.", "D.", "E.", "F.", "G.", "H.", "J.", "K.", "L.", "M.")
_LAST = (
    "Archer", "Bellamy", "Cortez", "Devine", "Eklund", "Farrah", "Grieco",
    "Halvorsen", "Iqbal", "Jablonski", "Kowalczyk", "Lindqvist", "Moravec",
    "Nakagawa", "Okafor", "Petrov",
)
_VENUES = (
    "Journal of Synthetic Findings", "Annals of Systems Research",
    "Methods in Translational Analysis", "Quarterly Review of Evidence",
)


def _concept_name(rng: random.Random, index: int) -> str:
    stem = rng.choice(_SYLLABLES) + rng.choice(_SYLLABLES) + rng.choice(_SUFFIXES)
    return f"{stem.capitalize()}-{index:03d}"


def _synonyms(rng: random.Random, name: str) -> list[str]:
    base = name.split("-")[0]
    options = [
        name.replace("-", " "),
        base.upper(),
        f"{base} pathway",
        f"{base} receptor complex",
        f"activated {base.lower()} signalling cascade",
    ]
    count = rng.randint(1, 3)
    return options[:count]


def generate_demo() -> tuple[str, str]:
    """Returns (corpus JSON-lines text, gazetteer TSV text)."""
    rng = random.Random(DEMO_SEED)

    leaves: list[str] = []
    for domain in _DOMAINS:
        for sub in _SUBTOPICS:
            for leaf in _LEAVES:
                leaves.append(f"{domain}/{sub}/{leaf}")
    assert len(leaves) == 40

    # 500 concepts: 10 local per leaf (400) + 20 shared per domain (100).
    gazetteer_rows: list[str] = []
    local_pool: dict[str, list[str]] = {leaf: [] for leaf in leaves}
    shared_pool: dict[str, list[str]] = {domain: [] for domain in _DOMAINS}
    names: dict[str, str] = {}
    index = 0

    def add_concept(bucket: list[str]) -> None:
        nonlocal index
        concept_id = f"C{index:04d}"
        name = _concept_name(rng, index)
        synonyms = _synonyms(rng, name)
        vocab = _VOCABS[index % len(_VOCABS)]
        gazetteer_rows.append(
            f"{concept_id}\t{name}\t{'|'.join(synonyms)}\t{vocab}"
        )
        names[concept_id] = name
        bucket.append(concept_id)
        index += 1

    for leaf in leaves:
        for _ in range(10):
            add_concept(local_pool[leaf])
    for domain in _DOMAINS:
        for _ in range(20):
            add_concept(shared_pool[domain])
    assert index == 500

    def mention(concept_id: str) -> str:
        name = names[concept_id]
        forms = [name, name.replace("-", " "), name.split("-")[0].upper()]
        return rng.choice(forms)

    records: list[dict] = []
    for i in range(200):
        leaf = leaves[i % len(leaves)]
        domain = leaf.split("/")[0]
        folders = [leaf]
        if i % 7 == 3:
            folders.append(leaves[(i * 13 + 5) % len(leaves)])
        if i % 31 == 17:
            folders.append(leaves[(i * 29 + 11) % len(leaves)])
        if i == 42:  # the designated multi-occupancy showcase record
            folders = [leaf, leaves[7], leaves[23], leaves[31]]
        folders = list(dict.fromkeys(folders))

        local = rng.sample(local_pool[leaf], 7)
        shared = rng.sample(shared_pool[domain], 5)
        extra = rng.sample(shared_pool[rng.choice(_DOMAINS)], 2)
        mentions = local + shared + extra

        title = (
            f"{mention(mentions[0])} and {mention(mentions[1])} in "
            f"{leaf.split('/')[1].lower()} {leaf.split('/')[2].lower()}: "
            f"a study of {mention(mentions[2])}"
        )
        sentences = []
        body = mentions[2:]
        rng.shuffle(body)
        for chunk_start in range(0, len(body), 4):
            chunk = body[chunk_start : chunk_start + 4]
            listed = ", ".join(mention(c) for c in chunk)
            sentences.append(
                rng.choice(
                    (
                        f"We characterise {listed} across matched cohorts.",
                        f"Evidence links {listed} with the observed response.",
                        f"Profiling of {listed} suggests a shared mechanism.",
                        f"The roles of {listed} remain under active review.",
                    )
                )
            )
        abstract = " ".join(sentences)

        record = {
            "id": f"p{i:04d}",
            "title": title,
            "abstract": abstract,
            "authors": [
                f"{rng.choice(_FIRST)} {rng.choice(_LAST)}"
                for _ in range(rng.randint(1, 4))
            ],
            "year": rng.randint(1998, 2024),
            "folders": folders,
        }
        if i % 3 == 0:
            record["venue"] = rng.choice(_VENUES)
        if i % 4 == 0:
            record["doi"] = f"10.5555/demo.{i:04d}"
        if i % 5 == 0:
            record["url"] = f"https://example.org/papers/p{i:04d}"
        records.append(record)

    corpus = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)
    gazetteer = "\n".join(gazetteer_rows) + "\n"
    return corpus, gazetteer


DEMO_CONFIG = """\
# Demo build configuration. Paths are relative to this file.
corpus = "corpus.jsonl"
gazetteer = "gazetteer.tsv"
mode = "manual"
out = "demo.kcb"
tau = 5
padding = 0.08
entity_radius = 1.0
alpha = 0.5
beta = 0.5
grid_size = 256
seed = 7
"""


def write_demo(directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus, gazetteer = generate_demo()
    (directory / "corpus.jsonl").write_text(corpus, encoding="utf-8")
    (directory / "gazetteer.tsv").write_text(gazetteer, encoding="utf-8")
    (directory / "config.toml").write_text(DEMO_CONFIG, encoding="utf-8")


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "demo"
    write_demo(target)
    print(f"demo corpus written to {target}/")
