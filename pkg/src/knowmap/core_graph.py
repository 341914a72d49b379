"""Entity similarity graph: shared-concept edges, threshold sparsification, connectivity repair."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import EmptyCorpus
from .ingestion import AnnotationTable

DEFAULT_THRESHOLD = 5


@dataclass(frozen=True)
class SimilarityEdge:
    """Undirected weighted edge; endpoints kept in id order (a < b).

    `synthetic` marks edges added by connectivity repair, which may sit below
    the sparsification threshold (down to weight 0).
    """

    a: str
    b: str
    weight: int
    synthetic: bool = False


@dataclass
class CoreGraph:
    nodes: list[str]
    edges: list[SimilarityEdge]
    threshold: int

    def adjacency(self) -> dict[str, list[SimilarityEdge]]:
        adj: dict[str, list[SimilarityEdge]] = {n: [] for n in self.nodes}
        for edge in self.edges:
            adj[edge.a].append(edge)
            adj[edge.b].append(edge)
        return adj


def shared_concepts(a: set[str], b: set[str]) -> int:
    """Number of concepts two entities have in common."""
    return len(a & b)


def _pair_weights(table: AnnotationTable) -> dict[tuple[str, str], int]:
    """Shared-concept counts for every co-occurring entity pair, via an inverted index.

    Pairs with weight 0 never appear.
    """
    by_concept: dict[str, list[str]] = {}
    for entity_id in sorted(table.rows):
        for concept_id in table.rows[entity_id]:
            by_concept.setdefault(concept_id, []).append(entity_id)
    weights: dict[tuple[str, str], int] = {}
    for entities in by_concept.values():
        for i in range(len(entities)):
            for j in range(i + 1, len(entities)):
                pair = (entities[i], entities[j])
                weights[pair] = weights.get(pair, 0) + 1
    return weights


def build_core_graph(table: AnnotationTable, threshold: int = DEFAULT_THRESHOLD) -> CoreGraph:
    """Edges connect entities sharing at least `threshold` concepts.

    Every entity appears as a node even when isolated. Output is independent
    of row order (nodes and edges are sorted).
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    if not table.rows:
        raise EmptyCorpus("annotation table has no entities")
    nodes = sorted(table.rows)
    edges = [
        SimilarityEdge(a=a, b=b, weight=w)
        for (a, b), w in sorted(_pair_weights(table).items())
        if w >= threshold
    ]
    return CoreGraph(nodes=nodes, edges=edges, threshold=threshold)


class _UnionFind:
    def __init__(self, items: Sequence[str]):
        self.parent = {item: item for item in items}

    def find(self, item: str) -> str:
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a: str, b: str) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True

    def components(self) -> dict[str, list[str]]:
        comps: dict[str, list[str]] = {}
        for item in self.parent:
            comps.setdefault(self.find(item), []).append(item)
        return {root: sorted(members) for root, members in comps.items()}


def count_components(graph: CoreGraph) -> int:
    uf = _UnionFind(graph.nodes)
    for edge in graph.edges:
        uf.union(edge.a, edge.b)
    return len(uf.components())


def _folder_prefix_len(paths_a: Sequence[str], paths_b: Sequence[str]) -> int:
    best = 0
    for pa in paths_a:
        sa = pa.split("/")
        for pb in paths_b:
            sb = pb.split("/")
            common = 0
            for x, y in zip(sa, sb):
                if x != y:
                    break
                common += 1
            best = max(best, common)
    return best


def ensure_connected(
    graph: CoreGraph,
    table: AnnotationTable,
    folder_paths: Mapping[str, Sequence[str]] | None = None,
) -> CoreGraph:
    """Join all components into one, adding exactly (components - 1) synthetic edges.

    Sub-threshold cross-component pairs are added maximum-weight first (a
    maximum spanning tree over components). Components sharing zero concepts
    with the rest are attached by weight-0 edges to the entity pair with the
    longest common folder-path prefix, smallest ids on ties.
    """
    uf = _UnionFind(graph.nodes)
    n_components = len(graph.nodes)
    for edge in graph.edges:
        if uf.union(edge.a, edge.b):
            n_components -= 1
    if n_components <= 1:
        return graph

    added: list[SimilarityEdge] = []

    # Maximum-weight repair over co-occurring pairs (all below threshold by
    # construction, otherwise they would already be edges).
    cross = sorted(_pair_weights(table).items(), key=lambda kv: (-kv[1], kv[0]))
    for (a, b), weight in cross:
        if n_components == 1:
            break
        if uf.union(a, b):
            added.append(SimilarityEdge(a=a, b=b, weight=weight, synthetic=True))
            n_components -= 1

    # Zero-overlap leftovers: attach by folder-path affinity.
    if n_components > 1:
        comps = sorted(uf.components().values(), key=lambda members: members[0])
        base = list(comps[0])
        for members in comps[1:]:
            best: tuple[int, str, str] | None = None
            for u in members:
                pu = folder_paths.get(u, ()) if folder_paths else ()
                for v in base:
                    pv = folder_paths.get(v, ()) if folder_paths else ()
                    score = _folder_prefix_len(pu, pv)
                    key = (-score, min(u, v), max(u, v))
                    if best is None or key < (-best[0], best[1], best[2]):
                        best = (score, min(u, v), max(u, v))
            assert best is not None
            added.append(SimilarityEdge(a=best[1], b=best[2], weight=0, synthetic=True))
            uf.union(best[1], best[2])
            base.extend(members)
            base.sort()

    edges = sorted(graph.edges + added, key=lambda e: (e.a, e.b))
    return CoreGraph(nodes=list(graph.nodes), edges=edges, threshold=graph.threshold)
