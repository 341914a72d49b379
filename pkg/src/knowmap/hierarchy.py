"""Topic hierarchy: folder-derived trees, data-driven topic discovery, annotation back-propagation.

The data-driven path replaces model-based topic inference with a deterministic
greedy agglomeration of concept columns by average normalised pointwise mutual
information (NPMI), which keeps the same observable contract: k topics per
level, concept signatures per topic, and multi-topic entity assignment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyMatrix, InvalidPyramid, UnknownTopic
from .ingestion import AnnotationTable, FolderTree

ROOT_ID = "root"

#: Default per-level topic counts, top level first.
DEFAULT_PYRAMID = (10, 25, 60, 120, 200)

#: Entities join every topic overlapping at least this many of their concepts.
ASSIGN_MIN_OVERLAP = 2


@dataclass
class TopicNode:
    topic_id: str
    label: str
    level: int
    parent: str | None = None
    children: list[str] = field(default_factory=list)
    concept_signature: set[str] = field(default_factory=set)


@dataclass
class TopicHierarchy:
    nodes: dict[str, TopicNode] = field(default_factory=dict)
    root_id: str = ROOT_ID

    def __post_init__(self):
        if self.root_id not in self.nodes:
            self.nodes[self.root_id] = TopicNode(topic_id=self.root_id, label="root", level=0)

    @property
    def root(self) -> TopicNode:
        return self.nodes[self.root_id]

    @property
    def max_depth(self) -> int:
        return max(node.level for node in self.nodes.values())

    def level_topics(self, level: int) -> list[str]:
        return sorted(t for t, n in self.nodes.items() if n.level == level)

    def ancestors(self, topic_id: str) -> list[str]:
        """Ancestor ids from the immediate parent up to (and including) the root."""
        node = self.nodes[topic_id]
        out = []
        while node.parent is not None:
            out.append(node.parent)
            node = self.nodes[node.parent]
        return out

    def ancestor_at_level(self, topic_id: str, level: int) -> str | None:
        node = self.nodes[topic_id]
        while node.level > level:
            if node.parent is None:
                return None
            node = self.nodes[node.parent]
        return node.topic_id if node.level == level else None


@dataclass
class TopicAssignment:
    """Per-level entity-to-topic sets, with direct/induced provenance.

    `by_level` covers levels 1..maxDepth; the root (level 0) implicitly holds
    everything. `direct_order` preserves the order in which direct topics were
    supplied (folder-path order for manual hierarchies), which downstream
    placement rules use.
    """

    by_level: dict[int, dict[str, set[str]]] = field(default_factory=dict)
    provenance: dict[tuple[str, str], str] = field(default_factory=dict)
    direct_order: dict[str, list[str]] = field(default_factory=dict)

    def levels_of(self, entity_id: str) -> list[int]:
        return sorted(l for l, ents in self.by_level.items() if entity_id in ents)

    def topics_at(self, entity_id: str, level: int) -> set[str]:
        return self.by_level.get(level, {}).get(entity_id, set())

    def entity_ids(self) -> list[str]:
        seen: set[str] = set()
        for ents in self.by_level.values():
            seen.update(ents)
        return sorted(seen)

    def entity_set(self, topic_id: str, level: int) -> set[str]:
        return {
            e for e, topics in self.by_level.get(level, {}).items() if topic_id in topics
        }


def folder_topic_id(path: str) -> str:
    """Deterministic topic id for a folder path."""
    return f"{ROOT_ID}/{path}"


def hierarchy_from_folders(tree: FolderTree) -> TopicHierarchy:
    """One topic per folder; levels are distances from the root."""
    hierarchy = TopicHierarchy()
    for path in tree.paths():
        node = tree.nodes[path]
        level = path.count("/") + 1
        parent = ROOT_ID if node.parent == "" else folder_topic_id(node.parent)
        hierarchy.nodes[folder_topic_id(path)] = TopicNode(
            topic_id=folder_topic_id(path),
            label=node.label,
            level=level,
            parent=parent,
        )
    for topic in hierarchy.nodes.values():
        topic.children = sorted(
            t for t, n in hierarchy.nodes.items() if n.parent == topic.topic_id
        )
    return hierarchy


def backpropagate(
    direct: Mapping[str, Iterable[str]], hierarchy: TopicHierarchy
) -> TopicAssignment:
    """Annotate each entity to every ancestor of its direct topics, up to the root.

    Direct topics keep the tag "direct" even when they are ancestors of other
    direct topics; everything else on the paths is tagged "induced".
    """
    assignment = TopicAssignment()
    for entity_id in sorted(direct):
        topics = list(direct[entity_id])
        for topic_id in topics:
            if topic_id not in hierarchy.nodes:
                raise UnknownTopic(topic_id)
        assignment.direct_order[entity_id] = topics
        for topic_id in topics:
            assignment.provenance[(entity_id, topic_id)] = "direct"
        for topic_id in topics:
            chain = [topic_id] + hierarchy.ancestors(topic_id)
            for tid in chain:
                node = hierarchy.nodes[tid]
                if node.level == 0:
                    continue
                assignment.by_level.setdefault(node.level, {}).setdefault(
                    entity_id, set()
                ).add(tid)
                assignment.provenance.setdefault((entity_id, tid), "induced")
    return assignment


@dataclass
class ConceptMatrix:
    """Binary entity-by-concept presence matrix."""

    entity_ids: list[str]
    concept_ids: list[str]
    data: np.ndarray  # bool, shape (n_entities, n_concepts)

    @classmethod
    def from_table(cls, table: AnnotationTable) -> "ConceptMatrix":
        entity_ids = table.entity_ids()
        concept_ids = table.concept_ids()
        index = {c: j for j, c in enumerate(concept_ids)}
        data = np.zeros((len(entity_ids), len(concept_ids)), dtype=bool)
        for i, entity_id in enumerate(entity_ids):
            for concept_id in table.rows[entity_id]:
                data[i, index[concept_id]] = True
        return cls(entity_ids=entity_ids, concept_ids=concept_ids, data=data)


def _npmi_matrix(data: np.ndarray) -> np.ndarray:
    """Pairwise NPMI between concept columns, in [-1, 1].

    Zero co-occurrence scores -1; co-occurrence in every document scores 1.
    """
    n_docs, n_concepts = data.shape
    counts = data.astype(np.float64)
    cooc = counts.T @ counts
    df = np.diag(cooc).copy()
    p_i = df / n_docs
    p_ij = cooc / n_docs
    with np.errstate(divide="ignore", invalid="ignore"):
        pmi = np.log(p_ij) - np.log(p_i[:, None]) - np.log(p_i[None, :])
        denom = -np.log(p_ij)
        npmi = pmi / denom
    npmi = np.where(p_ij <= 0.0, -1.0, npmi)
    npmi = np.where(p_ij >= 1.0, 1.0, npmi)
    np.fill_diagonal(npmi, 1.0)
    # float subtraction order differs across the diagonal; mirror for exact symmetry
    upper = np.triu(npmi)
    return upper + np.triu(npmi, 1).T


def _agglomerate(data: np.ndarray, k: int) -> list[list[int]]:
    """Merge concept columns into at most k clusters, most-correlated pair first.

    Average linkage over the pairwise NPMI matrix (Lance-Williams update).
    Score ties break on the lexicographically smallest pair of cluster
    representatives, a representative being the smallest member column.
    Columns with zero co-occurrence everywhere score -1 against everything and
    therefore merge last.
    """
    n = data.shape[1]
    if k >= n:
        return [[j] for j in range(n)]
    scores = _npmi_matrix(data)
    sizes = np.ones(n)
    alive = np.ones(n, dtype=bool)
    members: list[list[int] | None] = [[j] for j in range(n)]
    np.fill_diagonal(scores, -np.inf)
    remaining = n
    while remaining > k:
        masked = np.where(alive[:, None] & alive[None, :], scores, -np.inf)
        best = masked.max()
        ii, jj = np.nonzero(masked == best)
        pick = min((i, j) for i, j in zip(ii.tolist(), jj.tolist()) if i < j)
        i, j = pick
        # Average-linkage update: host the merged cluster at the smaller index
        # so representatives stay equal to positions.
        merged = (sizes[i] * scores[i, :] + sizes[j] * scores[j, :]) / (sizes[i] + sizes[j])
        scores[i, :] = merged
        scores[:, i] = merged
        scores[i, i] = -np.inf
        sizes[i] += sizes[j]
        alive[j] = False
        members[i].extend(members[j])  # type: ignore[union-attr]
        members[j] = None
        remaining -= 1
    return [sorted(m) for m in members if m is not None]


def _topic_id(prefix: str, index: int, total: int) -> str:
    width = max(3, len(str(max(total - 1, 0))))
    return f"{prefix}{index:0{width}d}"


def discover_topics(
    matrix: ConceptMatrix,
    k: int,
    id_prefix: str = "t",
    names: Mapping[str, str] | None = None,
) -> tuple[list[TopicNode], dict[str, set[str]]]:
    """Cluster concepts into at most k topics and assign entities to them.

    Topic labels are the top-3 cluster concepts by document frequency. An
    entity joins every topic sharing >= 2 of its concepts and always joins its
    best-overlap topic (smaller topic id on ties), so nobody is left out.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if matrix.data.size == 0:
        raise EmptyMatrix("entity-concept matrix is empty")
    clusters = _agglomerate(matrix.data, k)
    clusters.sort(key=lambda m: m[0])
    df = matrix.data.sum(axis=0)

    topics: list[TopicNode] = []
    for idx, member_cols in enumerate(clusters):
        top = sorted(member_cols, key=lambda j: (-int(df[j]), matrix.concept_ids[j]))[:3]
        concept_ids = {matrix.concept_ids[j] for j in member_cols}
        label_parts = []
        for j in top:
            cid = matrix.concept_ids[j]
            label_parts.append(names.get(cid, cid) if names else cid)
        topics.append(
            TopicNode(
                topic_id=_topic_id(id_prefix, idx, len(clusters)),
                label=", ".join(label_parts),
                level=0,
                concept_signature=concept_ids,
            )
        )

    signatures = [set(m) for m in clusters]
    assignment: dict[str, set[str]] = {}
    for i, entity_id in enumerate(matrix.entity_ids):
        cols = set(np.nonzero(matrix.data[i])[0].tolist())
        scores = [len(cols & sig) for sig in signatures]
        best = max(range(len(scores)), key=lambda idx: (scores[idx], -idx))
        # max() keeps the earliest index on ties because -idx decreases.
        chosen = {idx for idx, s in enumerate(scores) if s >= ASSIGN_MIN_OVERLAP}
        chosen.add(best)
        assignment[entity_id] = {topics[idx].topic_id for idx in chosen}
    return topics, assignment


def link_levels(
    lower: Mapping[str, set[str]], upper: Mapping[str, set[str]]
) -> dict[str, str]:
    """Parent each lower topic to the upper topic with the most similar entity set.

    Similarity is Jaccard over entity sets; ties go to the smaller upper topic
    id, so every lower topic gets exactly one parent.
    """
    if not lower or not upper:
        raise ValueError("both levels must be non-empty")
    mapping: dict[str, str] = {}
    upper_ids = sorted(upper)
    for lower_id in sorted(lower):
        lower_set = lower[lower_id]
        best_id = upper_ids[0]
        best_score = -1.0
        for upper_id in upper_ids:
            upper_set = upper[upper_id]
            union = len(lower_set | upper_set)
            score = (len(lower_set & upper_set) / union) if union else 0.0
            if score > best_score:
                best_score = score
                best_id = upper_id
        mapping[lower_id] = best_id
    return mapping


def discover_hierarchy(
    matrix: ConceptMatrix,
    pyramid: Sequence[int] = DEFAULT_PYRAMID,
    names: Mapping[str, str] | None = None,
) -> tuple[TopicHierarchy, TopicAssignment]:
    """Build a full data-driven hierarchy: one clustering per level, stitched bottom-up.

    `pyramid` lists topic counts from the top level down and must be strictly
    increasing (fewer topics higher up). A synthetic root is added above the
    top level and assignments are re-propagated through the stitched tree.
    """
    pyramid = list(pyramid)
    if not pyramid or any((not isinstance(x, int)) or x < 1 for x in pyramid):
        raise InvalidPyramid(f"pyramid must be positive integers, got {pyramid}")
    if any(pyramid[i] >= pyramid[i + 1] for i in range(len(pyramid) - 1)):
        raise InvalidPyramid(
            f"pyramid must strictly increase from top level to bottom, got {pyramid}"
        )
    if matrix.data.size == 0:
        raise EmptyMatrix("entity-concept matrix is empty")

    per_level: list[tuple[list[TopicNode], dict[str, set[str]]]] = []
    for depth, k in enumerate(pyramid, start=1):
        topics, assign = discover_topics(matrix, k, id_prefix=f"t{depth}.", names=names)
        for topic in topics:
            topic.level = depth
        per_level.append((topics, assign))

    hierarchy = TopicHierarchy()
    for topics, _ in per_level:
        for topic in topics:
            hierarchy.nodes[topic.topic_id] = topic

    for topic in per_level[0][0]:
        topic.parent = ROOT_ID

    def entity_sets(level_idx: int) -> dict[str, set[str]]:
        topics, assign = per_level[level_idx]
        sets: dict[str, set[str]] = {t.topic_id: set() for t in topics}
        for entity_id, tids in assign.items():
            for tid in tids:
                sets[tid].add(entity_id)
        return sets

    for level_idx in range(len(pyramid) - 1, 0, -1):
        mapping = link_levels(entity_sets(level_idx), entity_sets(level_idx - 1))
        for lower_id, upper_id in mapping.items():
            hierarchy.nodes[lower_id].parent = upper_id

    for topic in hierarchy.nodes.values():
        topic.children = sorted(
            t for t, n in hierarchy.nodes.items() if n.parent == topic.topic_id
        )

    direct: dict[str, list[str]] = {}
    for entity_id in matrix.entity_ids:
        topics_for_entity: list[str] = []
        for topics, assign in per_level:
            topics_for_entity.extend(sorted(assign.get(entity_id, ())))
        direct[entity_id] = topics_for_entity
    return hierarchy, backpropagate(direct, hierarchy)
