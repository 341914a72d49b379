import random

import pytest

from knowmap.core_graph import SimilarityEdge, build_core_graph, ensure_connected
from knowmap.errors import MissingLevel
from knowmap.hierarchy import backpropagate, folder_topic_id, hierarchy_from_folders
from knowmap.ingestion import AnnotationTable, EntityRecord, parse_folder_tree
from knowmap.occupancy import (
    build_occupancy,
    expand_edges,
    matching_edges,
    spawn_instances,
)


def manual(paths_by_id):
    records = [EntityRecord(id=i, folder_paths=p) for i, p in paths_by_id.items()]
    hierarchy = hierarchy_from_folders(parse_folder_tree(records))
    direct = {r.id: [folder_topic_id(p) for p in r.folder_paths] for r in records}
    return hierarchy, backpropagate(direct, hierarchy)


class TestSpawnInstances:
    def test_worked_clone_example(self):
        # one topic at level 1, two topics at level 2 -> exactly 2 level-2 instances
        hierarchy, assignment = manual({"e": ["A/B", "A/C"]})
        instances = spawn_instances("e", set(), assignment, hierarchy)
        level1 = [i for i in instances if i.level == 1]
        level2 = [i for i in instances if i.level == 2]
        assert len(level1) == 1 and level1[0].kind == "original"
        assert len(level2) == 2
        assert sorted(i.kind for i in level2) == ["clone", "original"]

    def test_single_topic_per_level_no_clones(self):
        hierarchy, assignment = manual({"e": ["A/B/C"]})
        instances = spawn_instances("e", set(), assignment, hierarchy)
        assert len(instances) == 3
        assert all(i.kind == "original" for i in instances)

    def test_three_topics_one_original(self):
        hierarchy, assignment = manual({"e": ["A/B", "A/C", "A/D"]})
        level2 = [
            i for i in spawn_instances("e", set(), assignment, hierarchy) if i.level == 2
        ]
        assert len(level2) == 3
        assert sum(1 for i in level2 if i.kind == "original") == 1

    def test_original_follows_first_direct_path(self):
        hierarchy, assignment = manual({"e": ["A/C", "A/B"]})
        level2 = [
            i for i in spawn_instances("e", set(), assignment, hierarchy) if i.level == 2
        ]
        original = next(i for i in level2 if i.kind == "original")
        assert original.topic_id == folder_topic_id("A/C")

    def test_original_by_concept_overlap(self):
        hierarchy, assignment = manual({"e": ["A/B", "A/C"]})
        hierarchy.nodes[folder_topic_id("A/C")].concept_signature = {"C1", "C2"}
        hierarchy.nodes[folder_topic_id("A/B")].concept_signature = {"C9"}
        level2 = [
            i
            for i in spawn_instances("e", {"C1", "C2"}, assignment, hierarchy)
            if i.level == 2
        ]
        original = next(i for i in level2 if i.kind == "original")
        assert original.topic_id == folder_topic_id("A/C")

    def test_tags_direct_vs_induced(self):
        hierarchy, assignment = manual({"e": ["A/B"]})
        instances = spawn_instances("e", set(), assignment, hierarchy)
        by_level = {i.level: i for i in instances}
        assert by_level[1].tag == "induced"
        assert by_level[2].tag == "direct"

    def test_missing_level_detected(self):
        hierarchy, assignment = manual({"e": ["A/B"]})
        del assignment.by_level[1]  # corrupt: level gap
        with pytest.raises(MissingLevel):
            spawn_instances("e", set(), assignment, hierarchy)


class TestMatchingEdges:
    def make(self, n_clones):
        hierarchy, assignment = manual(
            {"e": [f"A/T{k}" for k in range(n_clones + 1)]}
        )
        return [
            i for i in spawn_instances("e", set(), assignment, hierarchy) if i.level == 2
        ]

    def test_star_from_original(self):
        instances = self.make(2)
        edges = matching_edges(instances)
        assert len(edges) == 2
        original = next(i for i in instances if i.kind == "original")
        assert all(e.a == original.instance_id for e in edges)
        assert all(e.kind == "matching" and e.weight == 0 for e in edges)

    def test_single_original_no_edges(self):
        assert matching_edges(self.make(0)) == []

    def test_k_clones_k_edges(self):
        for k in (1, 3, 5):
            assert len(matching_edges(self.make(k))) == k


class TestExpandEdges:
    def instances_for(self, paths_by_id, entity, level):
        hierarchy, assignment = manual(paths_by_id)
        return [
            i
            for i in spawn_instances(entity, set(), assignment, hierarchy)
            if i.level == level
        ]

    def test_two_by_one(self):
        paths = {"a": ["X/P", "X/Q"], "b": ["X/P"]}
        ia = self.instances_for(paths, "a", 2)
        ib = self.instances_for(paths, "b", 2)
        edges = expand_edges(SimilarityEdge("a", "b", 7), ia, ib)
        assert len(edges) == 2
        assert all(e.weight == 7 for e in edges)

    def test_same_topic_within(self):
        paths = {"a": ["X/P"], "b": ["X/P"]}
        edges = expand_edges(
            SimilarityEdge("a", "b", 5),
            self.instances_for(paths, "a", 2),
            self.instances_for(paths, "b", 2),
        )
        assert [e.kind for e in edges] == ["within_topic"]

    def test_bipartite_count_and_kinds(self):
        paths = {"a": ["X/P", "X/Q"], "b": ["X/P", "X/R", "Y/S"]}
        ia = self.instances_for(paths, "a", 2)
        ib = self.instances_for(paths, "b", 2)
        edges = expand_edges(SimilarityEdge("a", "b", 3), ia, ib)
        assert len(edges) == len(ia) * len(ib) == 6
        within = [e for e in edges if e.kind == "within_topic"]
        assert len(within) == 1  # only the X/P pairing shares a topic


def build_world(paths_by_id, concept_sets, tau=2):
    table = AnnotationTable(
        rows={e: {c: 1 for c in cs} for e, cs in concept_sets.items()}
    )
    hierarchy, assignment = manual(paths_by_id)
    graph = build_core_graph(table, threshold=tau)
    graph = ensure_connected(graph, table, folder_paths=paths_by_id)
    return build_occupancy(graph, assignment, hierarchy, table), graph, assignment


class TestBuildOccupancy:
    def test_clone_free_levels_mirror_core_graph(self):
        shared = {"C1", "C2"}
        occupancy, graph, _ = build_world(
            {"a": ["X/P"], "b": ["X/P"], "c": ["X/Q"]},
            {"a": shared, "b": shared, "c": shared},
        )
        for level in occupancy.levels():
            sim_edges = [e for e in occupancy.edges_at(level) if e.kind != "matching"]
            assert len(sim_edges) == len(graph.edges)
            assert sorted(e.weight for e in sim_edges) == sorted(
                e.weight for e in graph.edges
            )

    def test_instance_count_identity(self):
        occupancy, _, assignment = build_world(
            {"a": ["X/P", "Y/Q"], "b": ["X/P"], "c": ["X", "Y"]},
            {"a": {"C1"}, "b": {"C1"}, "c": {"C1"}},
        )
        for level in occupancy.levels():
            expected = sum(
                len(assignment.topics_at(e, level)) for e in ("a", "b", "c")
            )
            assert len(occupancy.instances_at(level)) == expected

    def test_one_original_per_entity_level(self):
        occupancy, _, _ = build_world(
            {"a": ["X/P", "X/Q", "Y/R"], "b": ["X/P"]},
            {"a": {"C1"}, "b": {"C1"}},
        )
        for level in occupancy.levels():
            per_entity = {}
            for inst in occupancy.instances_at(level):
                if inst.kind == "original":
                    per_entity[inst.entity_id] = per_entity.get(inst.entity_id, 0) + 1
            for entity, count in per_entity.items():
                assert count == 1

    def test_within_between_classification(self):
        occupancy, _, _ = build_world(
            {"a": ["X/P", "X/Q"], "b": ["X/P"]},
            {"a": {"C1", "C2"}, "b": {"C1", "C2"}},
        )
        instances = {
            i.instance_id: i
            for level in occupancy.levels()
            for i in occupancy.instances_at(level)
        }
        for level in occupancy.levels():
            for edge in occupancy.edges_at(level):
                a, b = instances[edge.a], instances[edge.b]
                assert a.level == b.level == level
                if edge.kind == "matching":
                    assert a.entity_id == b.entity_id
                elif edge.kind == "within_topic":
                    assert a.topic_id == b.topic_id
                else:
                    assert a.topic_id != b.topic_id

    def test_projection_recovers_core_graph(self):
        rng = random.Random(2024)
        leaves = ["X/P", "X/Q", "Y/R", "Y/S"]
        paths, concepts = {}, {}
        vocab = [f"C{k}" for k in range(12)]
        for i in range(18):
            eid = f"e{i:02d}"
            paths[eid] = rng.sample(leaves, rng.randint(1, 2))
            concepts[eid] = set(rng.sample(vocab, rng.randint(2, 7)))
        occupancy, graph, _ = build_world(paths, concepts, tau=3)
        instances = {
            i.instance_id: i
            for level in occupancy.levels()
            for i in occupancy.instances_at(level)
        }
        max_level = max(occupancy.levels())
        for level in occupancy.levels():
            projected = set()
            for edge in occupancy.edges_at(level):
                if edge.kind == "matching":
                    continue
                a = instances[edge.a].entity_id
                b = instances[edge.b].entity_id
                projected.add((min(a, b), max(a, b)))
            # entities only reach levels up to their deepest annotation, so
            # projection recovers the edges whose endpoints both live here
            at_level = {i.entity_id for i in occupancy.instances_at(level)}
            expected = {
                (e.a, e.b)
                for e in graph.edges
                if e.a in at_level and e.b in at_level
            }
            assert projected == expected
            if level == max_level or level == 1:
                # every entity is annotated at level 1; full recovery there
                if level == 1:
                    assert projected == {(e.a, e.b) for e in graph.edges}

    def test_per_level_edge_count_oracle(self):
        rng = random.Random(77)
        leaves = ["X/P", "X/Q", "Y/R"]
        paths, concepts = {}, {}
        vocab = [f"C{k}" for k in range(10)]
        for i in range(14):
            eid = f"e{i:02d}"
            paths[eid] = rng.sample(leaves, rng.randint(1, 2))
            concepts[eid] = set(rng.sample(vocab, rng.randint(1, 6)))
        occupancy, graph, assignment = build_world(paths, concepts, tau=3)
        for level in occupancy.levels():
            counts = {}
            for inst in occupancy.instances_at(level):
                counts[inst.entity_id] = counts.get(inst.entity_id, 0) + 1
            expected_sim = sum(
                counts.get(e.a, 0) * counts.get(e.b, 0) for e in graph.edges
            )
            expected_matching = sum(max(0, c - 1) for c in counts.values())
            assert len(occupancy.edges_at(level)) == expected_sim + expected_matching

    def test_deterministic_ordering(self):
        occupancy, _, _ = build_world(
            {"a": ["X/P", "X/Q"], "b": ["X/P"]},
            {"a": {"C1", "C2"}, "b": {"C1", "C2"}},
        )
        for level in occupancy.levels():
            ids = [i.instance_id for i in occupancy.instances_at(level)]
            assert ids == sorted(ids)
