"""Per-level occupancy graph: entity instances (originals + clones) and expanded edges.

Multi-topic entities are materialised once per (entity, topic) pair at each
level. Exactly one instance per entity and level is the original; the rest are
clones, star-connected to the original by matching edges. Similarity edges are
expanded to the full bipartite set between the two entities' instances and
classified within-topic or between-topic by endpoint topics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .core_graph import CoreGraph, SimilarityEdge
from .errors import MissingLevel
from .hierarchy import TopicAssignment, TopicHierarchy
from .ingestion import AnnotationTable


def instance_id(entity_id: str, topic_id: str) -> str:
    return f"{entity_id}::{topic_id}"


@dataclass(frozen=True)
class InstanceNode:
    instance_id: str
    entity_id: str
    topic_id: str
    level: int
    kind: str  # "original" | "clone"
    tag: str  # "direct" | "induced"


@dataclass(frozen=True)
class InstanceEdge:
    a: str
    b: str
    kind: str  # "within_topic" | "between_topic" | "matching"
    weight: int


@dataclass
class OccupancyGraph:
    instances: dict[int, list[InstanceNode]] = field(default_factory=dict)
    edges: dict[int, list[InstanceEdge]] = field(default_factory=dict)

    def levels(self) -> list[int]:
        return sorted(self.instances)

    def instances_at(self, level: int) -> list[InstanceNode]:
        return self.instances.get(level, [])

    def edges_at(self, level: int) -> list[InstanceEdge]:
        return self.edges.get(level, [])

    def of_entity(self, entity_id: str) -> list[InstanceNode]:
        out = []
        for level in self.levels():
            out.extend(i for i in self.instances[level] if i.entity_id == entity_id)
        return out


def _primary_topic(
    entity_id: str,
    level: int,
    candidates: Sequence[str],
    concepts: set[str],
    assignment: TopicAssignment,
    hierarchy: TopicHierarchy,
) -> str:
    """Where the original lives: best concept overlap with the topic signature,
    falling back to the first direct annotation path, then the smallest id."""
    ordered = sorted(candidates)
    scores = {
        t: len(concepts & hierarchy.nodes[t].concept_signature) for t in ordered
    }
    best = max(scores.values())
    if best > 0:
        return min(t for t in ordered if scores[t] == best)
    for direct_topic in assignment.direct_order.get(entity_id, ()):
        ancestor = hierarchy.ancestor_at_level(direct_topic, level)
        if ancestor in scores:
            return ancestor
    return ordered[0]


def spawn_instances(
    entity_id: str,
    concepts: set[str],
    assignment: TopicAssignment,
    hierarchy: TopicHierarchy,
) -> list[InstanceNode]:
    """One instance per topic in the entity's per-level sets; one original per level.

    Requires a back-propagated assignment: the entity's populated levels must
    be contiguous from 1 up to its deepest annotation.
    """
    levels = assignment.levels_of(entity_id)
    if levels:
        expected = list(range(1, max(levels) + 1))
        if levels != expected:
            missing = min(set(expected) - set(levels))
            raise MissingLevel(entity_id, missing)
    out: list[InstanceNode] = []
    for level in levels:
        topics = sorted(assignment.topics_at(entity_id, level))
        primary = _primary_topic(entity_id, level, topics, concepts, assignment, hierarchy)
        for topic_id in topics:
            out.append(
                InstanceNode(
                    instance_id=instance_id(entity_id, topic_id),
                    entity_id=entity_id,
                    topic_id=topic_id,
                    level=level,
                    kind="original" if topic_id == primary else "clone",
                    tag=assignment.provenance[(entity_id, topic_id)],
                )
            )
    return out


def matching_edges(instances: Sequence[InstanceNode]) -> list[InstanceEdge]:
    """Star from the original to every clone of one entity at one level."""
    originals = [i for i in instances if i.kind == "original"]
    if len(originals) != 1:
        raise ValueError("expected exactly one original instance")
    original = originals[0]
    return [
        InstanceEdge(a=original.instance_id, b=clone.instance_id, kind="matching", weight=0)
        for clone in sorted(instances, key=lambda i: i.instance_id)
        if clone.kind == "clone"
    ]


def expand_edges(
    edge: SimilarityEdge,
    instances_a: Sequence[InstanceNode],
    instances_b: Sequence[InstanceNode],
) -> list[InstanceEdge]:
    """Full bipartite expansion of a similarity edge over the two instance lists."""
    out = []
    for ia in instances_a:
        for ib in instances_b:
            lo, hi = sorted((ia, ib), key=lambda i: i.instance_id)
            kind = "within_topic" if ia.topic_id == ib.topic_id else "between_topic"
            out.append(InstanceEdge(a=lo.instance_id, b=hi.instance_id, kind=kind, weight=edge.weight))
    return out


def build_occupancy(
    graph: CoreGraph,
    assignment: TopicAssignment,
    hierarchy: TopicHierarchy,
    table: AnnotationTable,
) -> OccupancyGraph:
    """Assemble instances, matching stars and expanded edges for every level."""
    occupancy = OccupancyGraph()
    by_entity_level: dict[tuple[str, int], list[InstanceNode]] = {}
    for entity_id in graph.nodes:
        for inst in spawn_instances(entity_id, table.concepts_of(entity_id), assignment, hierarchy):
            occupancy.instances.setdefault(inst.level, []).append(inst)
            by_entity_level.setdefault((inst.entity_id, inst.level), []).append(inst)

    for (entity_id, level), instances in by_entity_level.items():
        for edge in matching_edges(instances):
            occupancy.edges.setdefault(level, []).append(edge)

    for sim_edge in graph.edges:
        for level in occupancy.instances:
            instances_a = by_entity_level.get((sim_edge.a, level))
            instances_b = by_entity_level.get((sim_edge.b, level))
            if instances_a and instances_b:
                occupancy.edges.setdefault(level, []).extend(
                    expand_edges(sim_edge, instances_a, instances_b)
                )

    for level in occupancy.instances:
        occupancy.instances[level].sort(key=lambda i: i.instance_id)
    for level in occupancy.edges:
        occupancy.edges[level].sort(key=lambda e: (e.a, e.b, e.kind))
    occupancy.instances = dict(sorted(occupancy.instances.items()))
    occupancy.edges = dict(sorted(occupancy.edges.items()))
    return occupancy
