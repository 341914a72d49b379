"""Persist and reload the complete build artefact, and export a graph-database script.

Bundles are single gzip-wrapped JSON files (`.kcb`) with deterministic key
order and a zeroed gzip timestamp, so identical builds produce identical
bytes. The export writes idempotent MERGE-style statements in the Cypher
dialect, one statement per node and per relationship.
"""
from __future__ import annotations

import gzip
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .core_graph import CoreGraph, SimilarityEdge
from .errors import CorruptBundle, VersionMismatch
from .hierarchy import TopicAssignment, TopicHierarchy, TopicNode
from .ingestion import AnnotationTable, EntityRecord
from .layout import Circle, LayoutTree
from .occupancy import InstanceEdge, InstanceNode, OccupancyGraph
from .topography import ColorScale, ContourPolyline, ContourSet, ElevationGrid

FORMAT_VERSION = 1
BUNDLE_SUFFIX = ".kcb"


@dataclass
class GraphBundle:
    """Everything the map service needs, as one immutable artefact."""

    records: list[EntityRecord]
    table: AnnotationTable
    graph: CoreGraph
    hierarchy: TopicHierarchy
    assignment: TopicAssignment
    occupancy: OccupancyGraph
    layout: LayoutTree
    grid: ElevationGrid
    contours: ContourSet
    color_scale: ColorScale
    config: dict[str, Any] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def record_by_id(self) -> dict[str, EntityRecord]:
        return {r.id: r for r in self.records}


# --- dict codecs ----------------------------------------------------------


def _record_dict(r: EntityRecord) -> dict:
    return {
        "id": r.id,
        "title": r.title,
        "abstract": r.abstract,
        "authors": r.authors,
        "year": r.year,
        "venue": r.venue,
        "doi": r.doi,
        "url": r.url,
        "folders": r.folder_paths,
        "concepts": sorted(r.concepts),
    }


def _record_from(d: dict) -> EntityRecord:
    return EntityRecord(
        id=d["id"],
        title=d["title"],
        abstract=d["abstract"],
        authors=list(d["authors"]),
        year=d["year"],
        venue=d["venue"],
        doi=d["doi"],
        url=d["url"],
        folder_paths=list(d["folders"]),
        concepts=set(d["concepts"]),
    )


def _circle_dict(c: Circle) -> dict:
    return {"cx": c.cx, "cy": c.cy, "r": c.r}


def _circle_from(d: dict) -> Circle:
    return Circle(cx=d["cx"], cy=d["cy"], r=d["r"])


def bundle_to_dict(bundle: GraphBundle) -> dict:
    return {
        "formatVersion": bundle.format_version,
        "config": bundle.config,
        "records": [_record_dict(r) for r in bundle.records],
        "annotations": {
            e: dict(sorted(row.items())) for e, row in sorted(bundle.table.rows.items())
        },
        "coreGraph": {
            "threshold": bundle.graph.threshold,
            "nodes": bundle.graph.nodes,
            "edges": [
                {"a": e.a, "b": e.b, "weight": e.weight, "synthetic": e.synthetic}
                for e in bundle.graph.edges
            ],
        },
        "hierarchy": {
            "rootId": bundle.hierarchy.root_id,
            "topics": [
                {
                    "id": t.topic_id,
                    "label": t.label,
                    "level": t.level,
                    "parent": t.parent,
                    "children": t.children,
                    "concepts": sorted(t.concept_signature),
                }
                for _, t in sorted(bundle.hierarchy.nodes.items())
            ],
        },
        "assignment": {
            "byLevel": {
                str(level): {e: sorted(tids) for e, tids in sorted(ents.items())}
                for level, ents in sorted(bundle.assignment.by_level.items())
            },
            "provenance": [
                [e, t, tag] for (e, t), tag in sorted(bundle.assignment.provenance.items())
            ],
            "directOrder": {
                e: list(tids) for e, tids in sorted(bundle.assignment.direct_order.items())
            },
        },
        "occupancy": {
            "instances": {
                str(level): [
                    {
                        "id": i.instance_id,
                        "entityId": i.entity_id,
                        "topicId": i.topic_id,
                        "kind": i.kind,
                        "tag": i.tag,
                    }
                    for i in instances
                ]
                for level, instances in sorted(bundle.occupancy.instances.items())
            },
            "edges": {
                str(level): [
                    {"a": e.a, "b": e.b, "kind": e.kind, "weight": e.weight}
                    for e in edges
                ]
                for level, edges in sorted(bundle.occupancy.edges.items())
            },
        },
        "layout": {
            "worldRadius": bundle.layout.world_radius,
            "paddingRatio": bundle.layout.padding_ratio,
            "entityRadius": bundle.layout.entity_radius,
            "topics": {
                t: _circle_dict(c) for t, c in sorted(bundle.layout.per_topic.items())
            },
            "instances": {
                i: _circle_dict(c) for i, c in sorted(bundle.layout.per_instance.items())
            },
        },
        "elevation": {
            "width": bundle.grid.width,
            "height": bundle.grid.height,
            "worldRadius": bundle.grid.world_radius,
            "values": [[float(v) for v in row] for row in bundle.grid.values],
        },
        "contours": {
            "isoLevels": list(bundle.contours.iso_levels),
            "lines": [
                [
                    {"points": [[x, y] for x, y in line.points], "closed": line.closed}
                    for line in lines
                ]
                for lines in bundle.contours.lines
            ],
        },
        "colorScale": {
            "seaLevel": bundle.color_scale.sea_level,
            "stops": [[e, list(c)] for e, c in bundle.color_scale.stops],
        },
    }


def bundle_from_dict(data: dict) -> GraphBundle:
    try:
        version = data["formatVersion"]
        if version != FORMAT_VERSION:
            raise VersionMismatch(version, FORMAT_VERSION)
        records = [_record_from(d) for d in data["records"]]
        table = AnnotationTable(
            rows={e: dict(row) for e, row in data["annotations"].items()}
        )
        cg = data["coreGraph"]
        graph = CoreGraph(
            nodes=list(cg["nodes"]),
            edges=[
                SimilarityEdge(
                    a=e["a"], b=e["b"], weight=e["weight"], synthetic=e["synthetic"]
                )
                for e in cg["edges"]
            ],
            threshold=cg["threshold"],
        )
        hier = TopicHierarchy(root_id=data["hierarchy"]["rootId"])
        for t in data["hierarchy"]["topics"]:
            hier.nodes[t["id"]] = TopicNode(
                topic_id=t["id"],
                label=t["label"],
                level=t["level"],
                parent=t["parent"],
                children=list(t["children"]),
                concept_signature=set(t["concepts"]),
            )
        assignment = TopicAssignment(
            by_level={
                int(level): {e: set(tids) for e, tids in ents.items()}
                for level, ents in data["assignment"]["byLevel"].items()
            },
            provenance={
                (e, t): tag for e, t, tag in data["assignment"]["provenance"]
            },
            direct_order={
                e: list(tids) for e, tids in data["assignment"]["directOrder"].items()
            },
        )
        occupancy = OccupancyGraph(
            instances={
                int(level): [
                    InstanceNode(
                        instance_id=i["id"],
                        entity_id=i["entityId"],
                        topic_id=i["topicId"],
                        level=int(level),
                        kind=i["kind"],
                        tag=i["tag"],
                    )
                    for i in instances
                ]
                for level, instances in data["occupancy"]["instances"].items()
            },
            edges={
                int(level): [
                    InstanceEdge(a=e["a"], b=e["b"], kind=e["kind"], weight=e["weight"])
                    for e in edges
                ]
                for level, edges in data["occupancy"]["edges"].items()
            },
        )
        lay = data["layout"]
        layout = LayoutTree(
            per_topic={t: _circle_from(c) for t, c in lay["topics"].items()},
            per_instance={i: _circle_from(c) for i, c in lay["instances"].items()},
            world_radius=lay["worldRadius"],
            padding_ratio=lay["paddingRatio"],
            entity_radius=lay["entityRadius"],
        )
        elev = data["elevation"]
        grid = ElevationGrid(
            width=elev["width"],
            height=elev["height"],
            world_radius=elev["worldRadius"],
            values=np.array(elev["values"], dtype=np.float64).reshape(
                elev["height"], elev["width"]
            ),
        )
        cont = data["contours"]
        contours = ContourSet(
            iso_levels=tuple(cont["isoLevels"]),
            lines=[
                [
                    ContourPolyline(
                        points=[(p[0], p[1]) for p in line["points"]],
                        closed=line["closed"],
                    )
                    for line in lines
                ]
                for lines in cont["lines"]
            ],
        )
        scale = ColorScale(
            sea_level=data["colorScale"]["seaLevel"],
            stops=[(e, (c[0], c[1], c[2])) for e, c in data["colorScale"]["stops"]],
        )
        bundle = GraphBundle(
            records=records,
            table=table,
            graph=graph,
            hierarchy=hier,
            assignment=assignment,
            occupancy=occupancy,
            layout=layout,
            grid=grid,
            contours=contours,
            color_scale=scale,
            config=dict(data["config"]),
            format_version=version,
        )
    except VersionMismatch:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptBundle(f"malformed bundle structure: {exc}") from exc
    validate_bundle(bundle)
    return bundle


def validate_bundle(bundle: GraphBundle) -> None:
    """Reject dangling cross-references."""
    entity_ids = {r.id for r in bundle.records}
    if set(bundle.graph.nodes) - entity_ids:
        raise CorruptBundle("graph nodes reference unknown entities")
    for edge in bundle.graph.edges:
        if edge.a not in entity_ids or edge.b not in entity_ids:
            raise CorruptBundle(f"similarity edge {edge.a}--{edge.b} references unknown entity")
    topics = bundle.hierarchy.nodes
    for topic in topics.values():
        if topic.parent is not None and topic.parent not in topics:
            raise CorruptBundle(f"topic {topic.topic_id} has unknown parent {topic.parent}")
    for level, ents in bundle.assignment.by_level.items():
        for entity_id, tids in ents.items():
            if entity_id not in entity_ids:
                raise CorruptBundle(f"assignment references unknown entity {entity_id}")
            for tid in tids:
                if tid not in topics:
                    raise CorruptBundle(f"assignment references unknown topic {tid}")
                if topics[tid].level != level:
                    raise CorruptBundle(f"topic {tid} misfiled at level {level}")
    instance_ids = set()
    for level, instances in bundle.occupancy.instances.items():
        for inst in instances:
            instance_ids.add(inst.instance_id)
            if inst.entity_id not in entity_ids or inst.topic_id not in topics:
                raise CorruptBundle(f"instance {inst.instance_id} has dangling references")
    for level, edges in bundle.occupancy.edges.items():
        at_level = {i.instance_id for i in bundle.occupancy.instances.get(level, [])}
        for edge in edges:
            if edge.a not in at_level or edge.b not in at_level:
                raise CorruptBundle(f"instance edge {edge.a}--{edge.b} crosses levels")
    for topic_id in topics:
        if topic_id not in bundle.layout.per_topic:
            raise CorruptBundle(f"topic {topic_id} missing from layout")
    for instance_id in instance_ids:
        if instance_id not in bundle.layout.per_instance:
            raise CorruptBundle(f"instance {instance_id} missing from layout")


# --- persistence ----------------------------------------------------------


def bundle_bytes(bundle: GraphBundle) -> bytes:
    """Deterministic gzip-wrapped JSON encoding of a bundle."""
    payload = json.dumps(
        bundle_to_dict(bundle), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    out = io.BytesIO()
    with gzip.GzipFile(fileobj=out, mode="wb", mtime=0) as zf:
        zf.write(payload)
    return out.getvalue()


def save_bundle(bundle: GraphBundle, path: str | Path) -> None:
    Path(path).write_bytes(bundle_bytes(bundle))


def load_bundle(path: str | Path) -> GraphBundle:
    raw = Path(path).read_bytes()
    try:
        payload = gzip.decompress(raw)
    except (OSError, EOFError) as exc:
        raise CorruptBundle(f"not a gzip container: {exc}") from exc
    try:
        data = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise CorruptBundle(f"invalid JSON payload: {exc.msg}") from exc
    if not isinstance(data, dict) or "formatVersion" not in data:
        raise CorruptBundle("missing formatVersion")
    return bundle_from_dict(data)


# --- graph-database export --------------------------------------------------


def _quote(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    text = str(value).replace("\\", "\\\\").replace("'", "\\'")
    return f"'{text}'"


def _props(pairs: dict[str, Any]) -> str:
    return ", ".join(f"{k}: {_quote(v)}" for k, v in pairs.items() if v is not None)


def graphdb_statements(bundle: GraphBundle) -> list[str]:
    """Idempotent node and relationship statements, one per line.

    Statement count equals node count (entities + topics + instances) plus
    edge count (similarity + hierarchy + annotation + matching edges).
    """
    statements: list[str] = []
    for record in sorted(bundle.records, key=lambda r: r.id):
        statements.append(
            f"MERGE (e:Entity {{id: {_quote(record.id)}}}) SET e += {{"
            + _props(
                {
                    "title": record.title,
                    "year": record.year,
                    "venue": record.venue,
                    "doi": record.doi,
                    "url": record.url,
                }
            )
            + "};"
        )
    for topic_id, topic in sorted(bundle.hierarchy.nodes.items()):
        if topic.level < 1:
            continue  # the synthetic root is structural, not data
        statements.append(
            f"MERGE (t:Topic {{id: {_quote(topic_id)}}}) SET t += {{"
            + _props({"label": topic.label, "level": topic.level})
            + "};"
        )
    for level in bundle.occupancy.levels():
        for inst in bundle.occupancy.instances_at(level):
            statements.append(
                f"MERGE (i:Instance {{id: {_quote(inst.instance_id)}}}) SET i += {{"
                + _props(
                    {
                        "entityId": inst.entity_id,
                        "topicId": inst.topic_id,
                        "level": inst.level,
                        "kind": inst.kind,
                        "tag": inst.tag,
                    }
                )
                + "};"
            )
    for edge in bundle.graph.edges:
        statements.append(
            f"MATCH (a:Entity {{id: {_quote(edge.a)}}}), (b:Entity {{id: {_quote(edge.b)}}}) "
            f"MERGE (a)-[r:SIMILAR_TO]->(b) SET r.weight = {edge.weight}, "
            f"r.synthetic = {str(edge.synthetic).lower()};"
        )
    for topic_id, topic in sorted(bundle.hierarchy.nodes.items()):
        if topic.parent is None or bundle.hierarchy.nodes[topic.parent].level < 1:
            continue
        statements.append(
            f"MATCH (p:Topic {{id: {_quote(topic.parent)}}}), (c:Topic {{id: {_quote(topic_id)}}}) "
            "MERGE (p)-[:HAS_CHILD]->(c);"
        )
    for (entity_id, topic_id), tag in sorted(bundle.assignment.provenance.items()):
        statements.append(
            f"MATCH (e:Entity {{id: {_quote(entity_id)}}}), (t:Topic {{id: {_quote(topic_id)}}}) "
            f"MERGE (e)-[r:ANNOTATED_TO]->(t) SET r.tag = {_quote(tag)};"
        )
    for level in bundle.occupancy.levels():
        for edge in bundle.occupancy.edges_at(level):
            if edge.kind != "matching":
                continue
            statements.append(
                f"MATCH (a:Instance {{id: {_quote(edge.a)}}}), (b:Instance {{id: {_quote(edge.b)}}}) "
                "MERGE (a)-[:MATCHES]->(b);"
            )
    return statements


def export_graphdb_script(bundle: GraphBundle, path: str | Path) -> int:
    """Write the statement file; returns the number of statements."""
    statements = graphdb_statements(bundle)
    lines = [
        "// Graph import script: entities, topics, instances and their relationships.",
        f"// {len(statements)} statements (MERGE-idempotent; safe to re-run).",
    ]
    lines.extend(statements)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(statements)
