import gzip
import json
from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from knowmap.service import build_snapshot, create_app, export_csv, search

IDENTITY = {"Accept-Encoding": "identity"}
GZIP = {"Accept-Encoding": "gzip"}


@pytest.fixture(scope="module")
def client(demo_snapshot):
    app = create_app(lambda: demo_snapshot)
    with TestClient(app) as c:
        yield c


class TestSnapshot:
    def test_per_depth_coverage(self, demo_snapshot):
        assert sorted(demo_snapshot.payload_raw) == list(
            range(1, demo_snapshot.max_depth + 1)
        )

    def test_rebuild_byte_identical(self, demo_bundle, demo_snapshot):
        again = build_snapshot(demo_bundle)
        assert again.payload_raw == demo_snapshot.payload_raw
        assert again.payload_gzip == demo_snapshot.payload_gzip

    def test_gzip_decompresses_to_raw(self, demo_snapshot):
        for depth, raw in demo_snapshot.payload_raw.items():
            assert gzip.decompress(demo_snapshot.payload_gzip[depth]) == raw
            assert len(demo_snapshot.payload_gzip[depth]) < len(raw)


class TestEmptyCorpusSnapshot:
    def test_zero_entity_bundle_yields_valid_empty_payloads(self):
        from knowmap.hierarchy import TopicNode
        from test_store import make_empty_bundle

        bundle = make_empty_bundle()
        # hierarchy with one topic but not a single entity
        from knowmap.layout import layout_hierarchy
        from knowmap.topography import elevation_grid, extract_contours

        bundle.hierarchy.nodes["t"] = TopicNode("t", "lonely", 1, parent="root")
        bundle.hierarchy.root.children = ["t"]
        bundle.layout = layout_hierarchy(bundle.hierarchy, bundle.occupancy)
        bundle.grid = elevation_grid(
            bundle.layout, bundle.hierarchy, bundle.occupancy, width=9, height=9
        )
        bundle.contours = extract_contours(bundle.grid)

        snapshot = build_snapshot(bundle)
        assert sorted(snapshot.payload_raw) == [1]
        payload = json.loads(snapshot.payload_raw[1])
        assert payload["instances"] == []
        assert payload["edges"] == []
        assert [t["id"] for t in payload["topics"]] == ["t"]
        app = create_app(lambda: snapshot)
        with TestClient(app) as client:
            assert client.get("/api/map?depth=1").status_code == 200


class TestMapEndpoint:
    def test_payload_matches_occupancy(self, client, demo_bundle):
        depth = demo_bundle.hierarchy.max_depth
        payload = json.loads(client.get(f"/api/map?depth={depth}", headers=IDENTITY).content)
        expected_ids = {
            i.instance_id for i in demo_bundle.occupancy.instances_at(depth)
        }
        got_ids = {i["id"] for i in payload["instances"]}
        assert got_ids == expected_ids
        assert payload["depth"] == depth
        assert payload["maxDepth"] == demo_bundle.hierarchy.max_depth

    def test_depth_zero_rejected(self, client):
        response = client.get("/api/map?depth=0")
        assert response.status_code == 400
        assert response.json()["error"] == "InvalidDepth"

    def test_depth_not_integer_rejected(self, client):
        assert client.get("/api/map?depth=abc").status_code == 400

    def test_depth_beyond_max_rejected(self, client, demo_snapshot):
        assert client.get(f"/api/map?depth={demo_snapshot.max_depth + 1}").status_code == 400

    def test_repeated_requests_identical_with_cache_header(self, client):
        first = client.get("/api/map?depth=1", headers=IDENTITY)
        second = client.get("/api/map?depth=1", headers=IDENTITY)
        assert first.content == second.content
        assert first.headers["x-cache"] == "hit"

    def test_gzip_negotiation(self, client):
        plain = client.get("/api/map?depth=2", headers=IDENTITY)
        zipped = client.get("/api/map?depth=2", headers=GZIP)
        assert zipped.headers.get("content-encoding") == "gzip"
        assert "content-encoding" not in plain.headers
        # httpx transparently decompresses; bodies must agree
        assert zipped.content == plain.content
        assert int(zipped.headers["content-length"]) < int(plain.headers["content-length"])

    def test_not_ready_returns_503(self):
        app = create_app(lambda: None)
        with TestClient(app) as c:
            assert c.get("/api/map?depth=1").status_code == 503


class TestSearchEndpoint:
    def test_empty_query_rejected(self, client):
        assert client.get("/api/search?q=").status_code == 400
        assert client.get("/api/search?q=%20%20").status_code == 400

    def test_no_matches_is_200_empty(self, client):
        body = client.get("/api/search?q=zzzzqqqq").json()
        assert body == {"topics": [], "entities": []}

    def test_exact_topic_label_ranked_first(self, client, demo_bundle):
        label = demo_bundle.hierarchy.nodes["root/Oncology"].label
        body = client.get(f"/api/search?q={label}").json()
        assert body["topics"][0]["label"] == label

    def test_title_hit_outranks_abstract_hit(self, demo_snapshot):
        # pick a token present in one title, then find an abstract-only match
        probe = None
        for entry in demo_snapshot.entity_entries:
            token = entry.title_cf.split()[0]
            others = [
                e
                for e in demo_snapshot.entity_entries
                if token not in e.title_cf and token in e.abstract_cf
            ]
            if others:
                probe = (token, entry, others)
                break
        assert probe is not None
        token, titled, others = probe
        result = search(demo_snapshot, token, limit=1000)
        scores = {e["entityId"]: e["score"] for e in result["entities"]}
        assert scores[titled.entity_id] > scores[others[0].entity_id]

    def test_ranking_deterministic(self, demo_snapshot):
        a = search(demo_snapshot, "validation")
        b = search(demo_snapshot, "validation")
        assert a == b

    def test_limit_respected(self, client):
        body = client.get("/api/search?q=a&limit=5").json()
        assert len(body["topics"]) <= 5
        assert len(body["entities"]) <= 5


class TestEntityEndpoint:
    def test_detail_instances_match_occupancy(self, client, demo_bundle):
        entity_id = demo_bundle.records[0].id
        detail = client.get(f"/api/entity/{entity_id}").json()
        expected = {
            i.instance_id
            for level in demo_bundle.occupancy.levels()
            for i in demo_bundle.occupancy.instances_at(level)
            if i.entity_id == entity_id
        }
        assert {i["id"] for i in detail["instances"]} == expected
        assert detail["title"] == demo_bundle.records[0].title

    def test_multi_topic_entity_lists_every_instance(self, client, demo_bundle):
        # the demo's showcase record occupies several topics
        detail = client.get("/api/entity/p0042").json()
        level_counts = {}
        for inst in detail["instances"]:
            level_counts[inst["level"]] = level_counts.get(inst["level"], 0) + 1
        assert max(level_counts.values()) >= 3

    def test_unknown_entity_404(self, client):
        response = client.get("/api/entity/nope")
        assert response.status_code == 404
        assert response.json()["error"] == "UnknownEntity"


class TestExportEndpoint:
    def test_two_known_ids_three_lines(self, client, demo_bundle):
        ids = [demo_bundle.records[0].id, demo_bundle.records[1].id]
        response = client.post("/api/export", json=ids)
        lines = response.text.strip().splitlines()
        assert len(lines) == 3
        assert lines[0] == "id,title,authors,year,venue,doi,url"

    def test_unknown_id_skipped_with_warning(self, client, demo_bundle):
        ids = [demo_bundle.records[0].id, "ghost"]
        response = client.post("/api/export", json=ids)
        assert len(response.text.strip().splitlines()) == 2
        assert "ghost" in response.headers["x-warning"]

    def test_empty_list_rejected(self, client):
        assert client.post("/api/export", json=[]).status_code == 400

    def test_rows_in_request_order(self, client, demo_bundle):
        ids = [demo_bundle.records[2].id, demo_bundle.records[0].id]
        body = client.post("/api/export", json=ids).text.strip().splitlines()
        assert body[1].startswith(ids[0] + ",")
        assert body[2].startswith(ids[1] + ",")

    def test_comma_fields_quoted(self, demo_snapshot):
        # any demo title containing a comma must be quoted per CSV rules
        text, _ = export_csv(
            demo_snapshot, [e.entity_id for e in demo_snapshot.entity_entries[:50]]
        )
        import csv as csv_mod
        import io

        rows = list(csv_mod.reader(io.StringIO(text)))
        assert rows[0] == list(("id", "title", "authors", "year", "venue", "doi", "url"))
        for row, entry in zip(rows[1:], demo_snapshot.entity_entries[:50]):
            assert row[1] == entry.title  # round-trips even with commas


class TestConcurrency:
    def test_concurrent_identical_requests(self, client):
        def fetch(_):
            return client.get("/api/map?depth=2", headers=IDENTITY).content

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(fetch, range(32)))
        assert len(set(results)) == 1

    def test_read_only_service(self, client, demo_snapshot):
        before = dict(demo_snapshot.payload_raw)
        client.get("/api/map?depth=1")
        client.get("/api/search?q=study")
        client.post("/api/export", json=[demo_snapshot.entity_entries[0].entity_id])
        assert demo_snapshot.payload_raw == before
