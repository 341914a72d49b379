"""End-to-end build orchestration: corpus inputs to a saved bundle."""
from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core_graph import DEFAULT_THRESHOLD, build_core_graph, ensure_connected
from .errors import ConfigError
from .hierarchy import (
    DEFAULT_PYRAMID,
    ConceptMatrix,
    backpropagate,
    discover_hierarchy,
    folder_topic_id,
    hierarchy_from_folders,
)
from .ingestion import (
    apply_table,
    build_annotation_table,
    import_eat,
    load_gazetteer,
    parse_corpus,
    parse_folder_tree,
)
from .layout import layout_hierarchy
from .occupancy import build_occupancy
from .store import GraphBundle, save_bundle
from .topography import (
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DEFAULT_COLOR_SCALE,
    DEFAULT_GRID_SIZE,
    DEFAULT_ISO_LEVELS,
    elevation_grid,
    extract_contours,
)

log = logging.getLogger(__name__)


@dataclass
class BuildConfig:
    """Build knobs; exactly one of `gazetteer` / `eat` supplies annotations."""

    corpus: str = ""
    gazetteer: str | None = None
    eat: str | None = None
    mode: str = "manual"  # "manual" (folder hierarchy) | "data" (discovered)
    out: str = "map.kcb"
    tau: int = DEFAULT_THRESHOLD
    pyramid: list[int] = field(default_factory=lambda: list(DEFAULT_PYRAMID))
    padding: float = 0.08
    entity_radius: float = 1.0
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    bandwidth: float | None = None
    grid_size: int = DEFAULT_GRID_SIZE
    iso_levels: list[float] = field(default_factory=lambda: list(DEFAULT_ISO_LEVELS))
    source_vocabs: list[str] | None = None
    seed: int = 0

    def validate(self) -> None:
        if not self.corpus:
            raise ConfigError("a corpus path is required")
        if bool(self.gazetteer) == bool(self.eat):
            raise ConfigError("exactly one of 'gazetteer' and 'eat' must be set")
        if self.mode not in ("manual", "data"):
            raise ConfigError(f"mode must be 'manual' or 'data', got {self.mode!r}")
        if self.tau < 1:
            raise ConfigError(f"tau must be >= 1, got {self.tau}")

    def as_dict(self) -> dict[str, Any]:
        return {
            "corpus": self.corpus,
            "gazetteer": self.gazetteer,
            "eat": self.eat,
            "mode": self.mode,
            "tau": self.tau,
            "pyramid": list(self.pyramid),
            "padding": self.padding,
            "entityRadius": self.entity_radius,
            "alpha": self.alpha,
            "beta": self.beta,
            "bandwidth": self.bandwidth,
            "gridSize": self.grid_size,
            "isoLevels": list(self.iso_levels),
            "sourceVocabs": self.source_vocabs,
            "seed": self.seed,
        }


def load_config(path: str | Path) -> BuildConfig:
    """Read a TOML config; relative input paths resolve against the file's directory."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc
    known = {f.name for f in fields(BuildConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    config = BuildConfig(**data)
    base = path.parent
    for key in ("corpus", "gazetteer", "eat", "out"):
        value = getattr(config, key)
        if value:
            setattr(config, key, str((base / value).resolve()))
    return config


def build_bundle(config: BuildConfig) -> GraphBundle:
    """Run the whole pipeline; the returned bundle is ready to save or serve."""
    config.validate()
    records = parse_corpus(config.corpus)
    log.info("parsed %d records from %s", len(records), config.corpus)

    names = None
    if config.gazetteer:
        gazetteer = load_gazetteer(config.gazetteer, source_vocabs=config.source_vocabs)
        log.info("gazetteer: %d concepts, %d phrases", len(gazetteer), len(gazetteer.phrases))
        table = build_annotation_table(records, gazetteer)
        names = gazetteer.names()
    else:
        table = import_eat(config.eat, known_ids=[r.id for r in records])
        apply_table(records, table)

    if config.mode == "manual":
        missing = [r.id for r in records if not r.folder_paths]
        if missing:
            raise ConfigError(
                f"manual mode requires folder paths on every record; "
                f"{len(missing)} record(s) have none (e.g. {missing[:3]})"
            )
        hierarchy = hierarchy_from_folders(parse_folder_tree(records))
        direct = {
            r.id: [folder_topic_id(p) for p in r.folder_paths] for r in records
        }
        assignment = backpropagate(direct, hierarchy)
    else:
        matrix = ConceptMatrix.from_table(table)
        hierarchy, assignment = discover_hierarchy(matrix, config.pyramid, names=names)

    graph = build_core_graph(table, threshold=config.tau)
    graph = ensure_connected(
        graph, table, folder_paths={r.id: r.folder_paths for r in records}
    )
    occupancy = build_occupancy(graph, assignment, hierarchy, table)
    layout = layout_hierarchy(
        hierarchy,
        occupancy,
        padding_ratio=config.padding,
        entity_radius=config.entity_radius,
        seed=config.seed,
    )
    grid = elevation_grid(
        layout,
        hierarchy,
        occupancy,
        width=config.grid_size,
        height=config.grid_size,
        bandwidth=config.bandwidth,
        alpha=config.alpha,
        beta=config.beta,
    )
    contours = extract_contours(grid, config.iso_levels)
    return GraphBundle(
        records=records,
        table=table,
        graph=graph,
        hierarchy=hierarchy,
        assignment=assignment,
        occupancy=occupancy,
        layout=layout,
        grid=grid,
        contours=contours,
        color_scale=DEFAULT_COLOR_SCALE,
        config=config.as_dict(),
    )


def summarize(bundle: GraphBundle) -> str:
    """Human-readable build statistics."""
    synthetic = sum(1 for e in bundle.graph.edges if e.synthetic)
    lines = [
        f"entities:        {len(bundle.records)}",
        f"concepts:        {len(bundle.table.concept_ids())}",
        f"similarity edges: {len(bundle.graph.edges)} ({synthetic} synthetic)",
        f"hierarchy depth: {bundle.hierarchy.max_depth}",
    ]
    for level in range(1, bundle.hierarchy.max_depth + 1):
        topics = len(bundle.hierarchy.level_topics(level))
        instances = len(bundle.occupancy.instances_at(level))
        edges = len(bundle.occupancy.edges_at(level))
        lines.append(
            f"  level {level}: {topics} topics, {instances} instances, {edges} edges"
        )
    lines.append(f"world radius:    {bundle.layout.world_radius:.2f}")
    return "\n".join(lines)


def build_and_save(config: BuildConfig) -> GraphBundle:
    bundle = build_bundle(config)
    save_bundle(bundle, config.out)
    log.info("bundle written to %s", config.out)
    return bundle
