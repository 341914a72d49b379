"""Map service: pre-rendered per-depth payloads served from an in-memory snapshot.

Every payload is encoded (and gzipped) once at snapshot build time; request
handling only negotiates the encoding and returns cached bytes, so concurrent
readers always see identical responses. Snapshots are immutable; replacing one
is a single reference swap.
"""
from __future__ import annotations

import csv
import gzip
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .ingestion import tokenize
from .store import GraphBundle

log = logging.getLogger(__name__)

EXPORT_COLUMNS = ("id", "title", "authors", "year", "venue", "doi", "url")
DEFAULT_SEARCH_LIMIT = 20

TITLE_WEIGHT = 3
TOPIC_LABEL_WEIGHT = 2
BODY_WEIGHT = 1
PREFIX_BONUS = 1


@dataclass
class _EntityEntry:
    entity_id: str
    title: str
    year: int
    title_cf: str
    abstract_cf: str
    authors_cf: list[str]


@dataclass
class _TopicEntry:
    topic_id: str
    label: str
    level: int
    label_cf: str


@dataclass
class Snapshot:
    """Immutable, fully pre-rendered service state for one bundle."""

    bundle: GraphBundle
    max_depth: int
    payload_raw: dict[int, bytes] = field(default_factory=dict)
    payload_gzip: dict[int, bytes] = field(default_factory=dict)
    search_index: dict[str, set[str]] = field(default_factory=dict)
    entity_entries: list[_EntityEntry] = field(default_factory=list)
    topic_entries: list[_TopicEntry] = field(default_factory=list)
    entity_details: dict[str, dict] = field(default_factory=dict)


def _encode(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _map_payload(bundle: GraphBundle, depth: int, max_depth: int) -> dict:
    layout = bundle.layout
    instances = [
        {
            "id": inst.instance_id,
            "entityId": inst.entity_id,
            "topicId": inst.topic_id,
            "kind": inst.kind,
            "tag": inst.tag,
            "circle": _circle_json(layout.per_instance[inst.instance_id]),
        }
        for inst in bundle.occupancy.instances_at(depth)
    ]
    edges = [
        {"a": e.a, "b": e.b, "kind": e.kind, "weight": e.weight}
        for e in bundle.occupancy.edges_at(depth)
    ]
    topics = [
        {
            "id": topic_id,
            "label": bundle.hierarchy.nodes[topic_id].label,
            "level": level,
            "circle": _circle_json(layout.per_topic[topic_id]),
        }
        for level in range(1, depth + 1)
        for topic_id in bundle.hierarchy.level_topics(level)
    ]
    return {
        "depth": depth,
        "maxDepth": max_depth,
        "worldRadius": layout.world_radius,
        "entityRadius": layout.entity_radius,
        "instances": instances,
        "edges": edges,
        "topics": topics,
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


def _circle_json(circle) -> dict:
    return {"cx": circle.cx, "cy": circle.cy, "r": circle.r}


def build_snapshot(bundle: GraphBundle) -> Snapshot:
    """Pre-render every depth payload, the search index and entity details."""
    max_depth = bundle.hierarchy.max_depth
    snapshot = Snapshot(bundle=bundle, max_depth=max_depth)

    for depth in range(1, max_depth + 1):
        raw = _encode(_map_payload(bundle, depth, max_depth))
        snapshot.payload_raw[depth] = raw
        snapshot.payload_gzip[depth] = gzip.compress(raw, mtime=0)

    for record in bundle.records:
        entry = _EntityEntry(
            entity_id=record.id,
            title=record.title,
            year=record.year,
            title_cf=record.title.casefold(),
            abstract_cf=record.abstract.casefold(),
            authors_cf=[a.casefold() for a in record.authors],
        )
        snapshot.entity_entries.append(entry)
        for token in tokenize(f"{record.title} {record.abstract} {' '.join(record.authors)}"):
            snapshot.search_index.setdefault(token, set()).add(record.id)
    snapshot.entity_entries.sort(key=lambda e: e.entity_id)

    for topic_id, topic in sorted(bundle.hierarchy.nodes.items()):
        if topic.level < 1:
            continue
        snapshot.topic_entries.append(
            _TopicEntry(
                topic_id=topic_id,
                label=topic.label,
                level=topic.level,
                label_cf=topic.label.casefold(),
            )
        )
        for token in tokenize(topic.label):
            snapshot.search_index.setdefault(token, set()).add(topic_id)

    by_id = bundle.record_by_id()
    instances_by_entity: dict[str, list[dict]] = {}
    for level in bundle.occupancy.levels():
        for inst in bundle.occupancy.instances_at(level):
            instances_by_entity.setdefault(inst.entity_id, []).append(
                {
                    "id": inst.instance_id,
                    "level": inst.level,
                    "topicId": inst.topic_id,
                    "kind": inst.kind,
                    "tag": inst.tag,
                    "circle": _circle_json(bundle.layout.per_instance[inst.instance_id]),
                }
            )
    for record in bundle.records:
        snapshot.entity_details[record.id] = {
            "id": record.id,
            "title": record.title,
            "abstract": record.abstract,
            "authors": record.authors,
            "year": record.year,
            "venue": record.venue,
            "doi": record.doi,
            "url": record.url,
            "concepts": sorted(record.concepts),
            "instances": sorted(
                instances_by_entity.get(record.id, []),
                key=lambda d: (d["level"], d["id"]),
            ),
        }
    return snapshot


def search(snapshot: Snapshot, query: str, limit: int = DEFAULT_SEARCH_LIMIT) -> dict:
    """Ranked topic and entity matches for a case-insensitive query.

    Scores: 3 for a title hit, 2 for a topic-label hit, 1 for an abstract or
    author hit, plus 1 when the matched field starts with the query. Ties
    break on id.
    """
    q = query.casefold()
    topics = []
    for entry in snapshot.topic_entries:
        score = 0
        if q in entry.label_cf:
            score += TOPIC_LABEL_WEIGHT
            if entry.label_cf.startswith(q):
                score += PREFIX_BONUS
        if score:
            topics.append(
                {
                    "topicId": entry.topic_id,
                    "label": entry.label,
                    "level": entry.level,
                    "score": score,
                }
            )
    topics.sort(key=lambda d: (-d["score"], d["topicId"]))

    entities = []
    for entry in snapshot.entity_entries:
        score = 0
        prefix = False
        if q in entry.title_cf:
            score += TITLE_WEIGHT
            prefix = prefix or entry.title_cf.startswith(q)
        if q in entry.abstract_cf or any(q in a for a in entry.authors_cf):
            score += BODY_WEIGHT
            prefix = (
                prefix
                or entry.abstract_cf.startswith(q)
                or any(a.startswith(q) for a in entry.authors_cf)
            )
        if score:
            if prefix:
                score += PREFIX_BONUS
            entities.append(
                {
                    "entityId": entry.entity_id,
                    "title": entry.title,
                    "year": entry.year,
                    "score": score,
                }
            )
    entities.sort(key=lambda d: (-d["score"], d["entityId"]))
    return {"topics": topics[:limit], "entities": entities[:limit]}


def export_csv(snapshot: Snapshot, entity_ids: list[str]) -> tuple[str, list[str]]:
    """CSV rows in request order; unknown ids are skipped and reported."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(EXPORT_COLUMNS)
    unknown: list[str] = []
    for entity_id in entity_ids:
        detail = snapshot.entity_details.get(entity_id)
        if detail is None:
            unknown.append(entity_id)
            continue
        writer.writerow(
            [
                detail["id"],
                detail["title"],
                "; ".join(detail["authors"]),
                detail["year"],
                detail["venue"] or "",
                detail["doi"] or "",
                detail["url"] or "",
            ]
        )
    return buffer.getvalue(), unknown


def _error(status: int, code: str, detail: str = "") -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


def _accepts_gzip(request: Request) -> bool:
    return "gzip" in request.headers.get("accept-encoding", "").lower()


def _bytes_response(
    request: Request,
    raw: bytes,
    gz: bytes | None = None,
    media_type: str = "application/json",
    headers: dict[str, str] | None = None,
) -> Response:
    out = dict(headers or {})
    out["Vary"] = "Accept-Encoding"
    if _accepts_gzip(request):
        body = gz if gz is not None else gzip.compress(raw, mtime=0)
        out["Content-Encoding"] = "gzip"
        return Response(content=body, media_type=media_type, headers=out)
    return Response(content=raw, media_type=media_type, headers=out)


def create_app(get_snapshot: Callable[[], Snapshot | None]) -> FastAPI:
    """HTTP facade over an immutable snapshot provider.

    The provider is called per request, so swapping in a new snapshot is
    atomic: a request sees entirely the old or entirely the new one.
    """
    app = FastAPI(title="knowmap", docs_url=None, redoc_url=None)

    @app.get("/api/map")
    def get_map(request: Request, depth: str = "") -> Response:
        snapshot = get_snapshot()
        if snapshot is None:
            return _error(503, "SnapshotNotReady", "no bundle loaded")
        try:
            d = int(depth)
        except ValueError:
            return _error(400, "InvalidDepth", f"depth {depth!r} is not an integer")
        if not 1 <= d <= snapshot.max_depth:
            return _error(
                400, "InvalidDepth", f"depth must be in [1, {snapshot.max_depth}]"
            )
        return _bytes_response(
            request,
            snapshot.payload_raw[d],
            snapshot.payload_gzip[d],
            headers={"X-Cache": "hit"},
        )

    @app.get("/api/search")
    def get_search(
        request: Request, q: str = "", limit: int = DEFAULT_SEARCH_LIMIT
    ) -> Response:
        snapshot = get_snapshot()
        if snapshot is None:
            return _error(503, "SnapshotNotReady", "no bundle loaded")
        if not q.strip():
            return _error(400, "EmptyQuery", "q must be non-empty")
        result = search(snapshot, q.strip(), limit=max(1, limit))
        return _bytes_response(request, _encode(result))

    @app.get("/api/entity/{entity_id}")
    def get_entity(request: Request, entity_id: str) -> Response:
        snapshot = get_snapshot()
        if snapshot is None:
            return _error(503, "SnapshotNotReady", "no bundle loaded")
        detail = snapshot.entity_details.get(entity_id)
        if detail is None:
            return _error(404, "UnknownEntity", f"no entity {entity_id!r}")
        return _bytes_response(request, _encode(detail))

    @app.post("/api/export")
    async def post_export(request: Request) -> Response:
        snapshot = get_snapshot()
        if snapshot is None:
            return _error(503, "SnapshotNotReady", "no bundle loaded")
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError:
            return _error(400, "EmptyList", "body must be a JSON list of entity ids")
        if not isinstance(body, list) or not all(isinstance(x, str) for x in body):
            return _error(400, "EmptyList", "body must be a JSON list of entity ids")
        if not body:
            return _error(400, "EmptyList", "no entity ids given")
        text, unknown = export_csv(snapshot, body)
        headers = {"Content-Disposition": "attachment; filename=export.csv"}
        if unknown:
            headers["X-Warning"] = "unknown ids skipped: " + ",".join(unknown)
        return _bytes_response(
            request, text.encode("utf-8"), media_type="text/csv", headers=headers
        )

    return app


def serve(
    bundle_path: str,
    host: str = "127.0.0.1",
    port: int = 8000,
    ui_dir: str | None = None,
) -> None:
    """Load a bundle, build the snapshot and run the HTTP server (blocking)."""
    import uvicorn

    from .store import load_bundle

    bundle = load_bundle(bundle_path)
    snapshot = build_snapshot(bundle)
    log.info(
        "snapshot ready: %d entities, depths 1..%d",
        len(bundle.records),
        snapshot.max_depth,
    )
    app = create_app(lambda: snapshot)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    uvicorn.run(app, host=host, port=port, log_level="warning")
