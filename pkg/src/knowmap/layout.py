"""Nested circle layout and the geographic view-state codec.

Sibling circles are packed with an incremental front-chain algorithm: the
first two circles sit mutually tangent astride the origin, and every further
circle is placed tangent to two consecutive circles of the advancing front,
splicing out any front circles the newcomer would overlap. Parent circles are
sized by the smallest enclosing circle of their packed contents plus a padding
ring.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EmptyInput, MalformedFragment, OutOfRange
from .hierarchy import TopicHierarchy
from .occupancy import InstanceNode, OccupancyGraph

#: Relative slack used when testing circle overlap during packing; an order of
#: magnitude tighter than the layout's published 1e-9 non-overlap tolerance.
_PACK_EPS = 1e-10

#: Relative slack for "already enclosed" tests in the enclosing-circle search.
_ENCLOSE_EPS = 1e-9

_ENCLOSE_SEED = 0x517CC1B7


@dataclass
class Circle:
    cx: float
    cy: float
    r: float

    def translated(self, dx: float, dy: float) -> "Circle":
        return Circle(self.cx + dx, self.cy + dy, self.r)


# --- sibling packing (front chain) --------------------------------------


class _Node:
    __slots__ = ("circle", "next", "previous")

    def __init__(self, circle: Circle):
        self.circle = circle
        self.next: "_Node" = self
        self.previous: "_Node" = self


def _place(b: Circle, a: Circle, c: Circle) -> None:
    """Position c tangent to both a and b, on the outward side."""
    dx = b.cx - a.cx
    dy = b.cy - a.cy
    d2 = dx * dx + dy * dy
    if d2:
        a2 = (a.r + c.r) ** 2
        b2 = (b.r + c.r) ** 2
        if a2 > b2:
            x = (d2 + b2 - a2) / (2 * d2)
            y = math.sqrt(max(0.0, b2 / d2 - x * x))
            c.cx = b.cx - x * dx - y * dy
            c.cy = b.cy - x * dy + y * dx
        else:
            x = (d2 + a2 - b2) / (2 * d2)
            y = math.sqrt(max(0.0, a2 / d2 - x * x))
            c.cx = a.cx + x * dx - y * dy
            c.cy = a.cy + x * dy + y * dx
    else:
        c.cx = a.cx + c.r
        c.cy = a.cy


def _intersects(a: Circle, b: Circle) -> bool:
    dr = a.r + b.r - _PACK_EPS * max(a.r, b.r)
    dx = b.cx - a.cx
    dy = b.cy - a.cy
    return dr > 0 and dr * dr > dx * dx + dy * dy


def _score(node: _Node) -> float:
    """Squared distance of the weighted midpoint of a front pair from the origin."""
    a = node.circle
    b = node.next.circle
    ab = a.r + b.r
    dx = (a.cx * b.r + b.cx * a.r) / ab
    dy = (a.cy * b.r + b.cy * a.r) / ab
    return dx * dx + dy * dy


def pack_siblings(radii: Sequence[float]) -> list[Circle]:
    """Pack circles of the given radii around the origin without overlaps.

    Output circles correspond to the input radii in order.
    """
    if len(radii) == 0:
        raise EmptyInput("no radii to pack")
    if any(not (r > 0) or not math.isfinite(r) for r in radii):
        raise ValueError("all radii must be positive and finite")
    circles = [Circle(0.0, 0.0, float(r)) for r in radii]
    n = len(circles)
    if n == 1:
        return circles

    a, b = circles[0], circles[1]
    a.cx, a.cy = -b.r, 0.0
    b.cx, b.cy = a.r, 0.0
    if n == 2:
        return circles

    c = circles[2]
    _place(b, a, c)
    na, nb, nc = _Node(a), _Node(b), _Node(c)
    na.next = nc.previous = nb
    nb.next = na.previous = nc
    nc.next = nb.previous = na

    i = 3
    while i < n:
        c = circles[i]
        _place(na.circle, nb.circle, c)
        nc = _Node(c)

        # Walk the front outward from the insertion pair; on collision, splice
        # the front to the colliding circle and retry the placement.
        j = nb.next
        k = na.previous
        sj = nb.circle.r
        sk = na.circle.r
        retry = False
        while True:
            if sj <= sk:
                if _intersects(j.circle, c):
                    nb = j
                    na.next = nb
                    nb.previous = na
                    retry = True
                    break
                sj += j.circle.r
                j = j.next
            else:
                if _intersects(k.circle, c):
                    na = k
                    na.next = nb
                    nb.previous = na
                    retry = True
                    break
                sk += k.circle.r
                k = k.previous
            if j is k.next:
                break
        if retry:
            continue

        # Success: insert c between a and b on the front.
        nc.previous = na
        nc.next = nb
        na.next = nb.previous = nc

        # Re-anchor at the front pair closest to the origin.
        best = na
        best_score = _score(na)
        node = nc.next
        while node is not nc:
            s = _score(node)
            if s < best_score:
                best_score = s
                best = node
            node = node.next
        na = best
        nb = na.next
        i += 1

    return circles


# --- smallest enclosing circle (Welzl-style, extended to circles) --------


def _encloses_not(a: Circle, b: Circle) -> bool:
    dr = a.r - b.r
    dx = b.cx - a.cx
    dy = b.cy - a.cy
    return dr < 0 or dr * dr < dx * dx + dy * dy


def _encloses_weak(a: Circle, b: Circle) -> bool:
    dr = a.r - b.r + _ENCLOSE_EPS * max(a.r, b.r, 1.0)
    dx = b.cx - a.cx
    dy = b.cy - a.cy
    return dr > 0 and dr * dr > dx * dx + dy * dy


def _encloses_weak_all(a: Circle, basis: Sequence[Circle]) -> bool:
    return all(_encloses_weak(a, b) for b in basis)


def _basis_of_two(a: Circle, b: Circle) -> Circle:
    x21 = b.cx - a.cx
    y21 = b.cy - a.cy
    r21 = b.r - a.r
    length = math.sqrt(x21 * x21 + y21 * y21)
    if length == 0.0:
        return Circle(a.cx, a.cy, max(a.r, b.r))
    return Circle(
        (a.cx + b.cx + x21 / length * r21) / 2,
        (a.cy + b.cy + y21 / length * r21) / 2,
        (length + a.r + b.r) / 2,
    )


def _basis_of_three(a: Circle, b: Circle, c: Circle) -> Circle:
    # Solve |p - p_i| = r - r_i for all three circles (internal tangency).
    a2 = a.cx - b.cx
    a3 = a.cx - c.cx
    b2 = a.cy - b.cy
    b3 = a.cy - c.cy
    c2 = b.r - a.r
    c3 = c.r - a.r
    d1 = a.cx * a.cx + a.cy * a.cy - a.r * a.r
    d2 = d1 - b.cx * b.cx - b.cy * b.cy + b.r * b.r
    d3 = d1 - c.cx * c.cx - c.cy * c.cy + c.r * c.r
    ab = a3 * b2 - a2 * b3
    xa = (b2 * d3 - b3 * d2) / (ab * 2) - a.cx
    xb = (b3 * c2 - b2 * c3) / ab
    ya = (a2 * d3 - a3 * d2) / (ab * -2) - a.cy
    yb = (a2 * c3 - a3 * c2) / ab
    qa = xb * xb + yb * yb - 1
    qb = 2 * (a.r + xa * xb + ya * yb)
    qc = xa * xa + ya * ya - a.r * a.r
    if abs(qa) > 1e-6:
        r = -(qb + math.sqrt(max(0.0, qb * qb - 4 * qa * qc))) / (2 * qa)
    else:
        r = -qc / qb
    return Circle(a.cx + xa + xb * r, a.cy + ya + yb * r, r)


def _basis_circle(basis: Sequence[Circle]) -> Circle:
    if len(basis) == 1:
        b = basis[0]
        return Circle(b.cx, b.cy, b.r)
    if len(basis) == 2:
        return _basis_of_two(basis[0], basis[1])
    return _basis_of_three(basis[0], basis[1], basis[2])


def _extend_basis(basis: list[Circle], p: Circle) -> list[Circle]:
    if _encloses_weak_all(p, basis):
        return [p]
    for i in range(len(basis)):
        if _encloses_not(p, basis[i]) and _encloses_weak_all(_basis_of_two(basis[i], p), basis):
            return [basis[i], p]
    for i in range(len(basis) - 1):
        for j in range(i + 1, len(basis)):
            if (
                _encloses_not(_basis_of_two(basis[i], basis[j]), p)
                and _encloses_not(_basis_of_two(basis[i], p), basis[j])
                and _encloses_not(_basis_of_two(basis[j], p), basis[i])
                and _encloses_weak_all(_basis_of_three(basis[i], basis[j], p), basis)
            ):
                return [basis[i], basis[j], p]
    raise ArithmeticError("enclosing-circle basis extension failed")


def enclosing_circle(circles: Sequence[Circle], seed: int = _ENCLOSE_SEED) -> Circle:
    """Smallest circle containing all input circles.

    Randomised incremental search over a support basis of at most three
    circles; the shuffle is seeded, so results are deterministic. The minimal
    circle is unique, so the seed only affects float noise in the last bits.
    """
    if len(circles) == 0:
        raise EmptyInput("no circles to enclose")
    shuffled = list(circles)
    random.Random(seed).shuffle(shuffled)
    basis: list[Circle] = []
    enclosing: Circle | None = None
    i = 0
    while i < len(shuffled):
        p = shuffled[i]
        if enclosing is not None and _encloses_weak(enclosing, p):
            i += 1
        else:
            basis = _extend_basis(basis, p)
            enclosing = _basis_circle(basis)
            i = 0
    assert enclosing is not None
    return enclosing


# --- hierarchy layout ----------------------------------------------------


@dataclass
class LayoutTree:
    per_topic: dict[str, Circle] = field(default_factory=dict)
    per_instance: dict[str, Circle] = field(default_factory=dict)
    world_radius: float = 0.0
    padding_ratio: float = 0.08
    entity_radius: float = 1.0


def layout_hierarchy(
    hierarchy: TopicHierarchy,
    occupancy: OccupancyGraph,
    padding_ratio: float = 0.08,
    entity_radius: float = 1.0,
    seed: int = _ENCLOSE_SEED,
) -> LayoutTree:
    """Bottom-up nested packing of topic circles and entity instances.

    Each topic packs its children's circles together with its own-level
    instances (equal circles of `entity_radius`), ordered by descending
    subtree instance count with topics before instances on ties, then id.
    The topic circle is the smallest enclosing circle of the packed content
    inflated by `padding_ratio`; the root's circle sets the world radius.
    """
    by_topic: dict[str, list[InstanceNode]] = {}
    for level in occupancy.levels():
        for inst in occupancy.instances_at(level):
            by_topic.setdefault(inst.topic_id, []).append(inst)

    counts: dict[str, int] = {}

    def subtree_count(topic_id: str) -> int:
        if topic_id not in counts:
            node = hierarchy.nodes[topic_id]
            counts[topic_id] = len(by_topic.get(topic_id, [])) + sum(
                subtree_count(child) for child in node.children
            )
        return counts[topic_id]

    radii: dict[str, float] = {}
    placements: dict[str, list[tuple[str, str, Circle]]] = {}

    def build(topic_id: str) -> None:
        node = hierarchy.nodes[topic_id]
        for child in node.children:
            build(child)
        items: list[tuple[int, int, str, float]] = []
        for child in node.children:
            items.append((subtree_count(child), 0, child, radii[child]))
        for inst in by_topic.get(topic_id, ()):
            items.append((1, 1, inst.instance_id, entity_radius))
        if not items:
            radii[topic_id] = entity_radius
            placements[topic_id] = []
            return
        items.sort(key=lambda it: (-it[0], it[1], it[2]))
        packed = pack_siblings([it[3] for it in items])
        enclosure = enclosing_circle(packed, seed=seed)
        radii[topic_id] = enclosure.r * (1 + padding_ratio)
        placements[topic_id] = [
            (kind_name(it[1]), it[2], circle.translated(-enclosure.cx, -enclosure.cy))
            for it, circle in zip(items, packed)
        ]

    def kind_name(rank: int) -> str:
        return "topic" if rank == 0 else "instance"

    build(hierarchy.root_id)

    layout = LayoutTree(
        padding_ratio=padding_ratio,
        entity_radius=entity_radius,
        world_radius=radii[hierarchy.root_id],
    )
    layout.per_topic[hierarchy.root_id] = Circle(0.0, 0.0, radii[hierarchy.root_id])

    def descend(topic_id: str) -> None:
        centre = layout.per_topic[topic_id]
        for kind, key, rel in placements[topic_id]:
            absolute = rel.translated(centre.cx, centre.cy)
            if kind == "topic":
                layout.per_topic[key] = absolute
                descend(key)
            else:
                layout.per_instance[key] = absolute

    descend(hierarchy.root_id)
    return layout


# --- geographic projection and view-state codec --------------------------

LON_LIMIT = 180.0
LAT_LIMIT = 85.0


@dataclass(frozen=True)
class ViewState:
    lon: float  # degrees in [-180, 180]
    lat: float  # degrees in [-85, 85]
    alt: float  # zoom fraction in [0, 1]; 1 shows the whole world


def _check_range(state: ViewState) -> None:
    if not (-LON_LIMIT <= state.lon <= LON_LIMIT):
        raise OutOfRange(f"lon {state.lon} outside [-180, 180]")
    if not (-LAT_LIMIT <= state.lat <= LAT_LIMIT):
        raise OutOfRange(f"lat {state.lat} outside [-85, 85]")
    if not (0.0 <= state.alt <= 1.0):
        raise OutOfRange(f"alt {state.alt} outside [0, 1]")


def encode_view(state: ViewState) -> str:
    """URL fragment with six fixed decimals per field."""
    _check_range(state)
    return f"lon={state.lon:.6f}&lat={state.lat:.6f}&alt={state.alt:.6f}"


def decode_view(fragment: str) -> ViewState:
    fragment = fragment.lstrip("#")
    parts = fragment.split("&")
    values: dict[str, float] = {}
    for part in parts:
        key, sep, raw = part.partition("=")
        if not sep or key not in ("lon", "lat", "alt") or key in values:
            raise MalformedFragment(f"unexpected fragment part {part!r}")
        try:
            values[key] = float(raw)
        except ValueError:
            raise MalformedFragment(f"{key} value {raw!r} is not a number") from None
    if set(values) != {"lon", "lat", "alt"}:
        raise MalformedFragment(f"fragment must contain lon, lat and alt: {fragment!r}")
    state = ViewState(lon=values["lon"], lat=values["lat"], alt=values["alt"])
    _check_range(state)
    return state


def project(x: float, y: float, world_radius: float) -> tuple[float, float]:
    """Layout point to (lon, lat); the world circle spans the full ranges."""
    return LON_LIMIT * x / world_radius, LAT_LIMIT * y / world_radius


def unproject(lon: float, lat: float, world_radius: float) -> tuple[float, float]:
    return lon * world_radius / LON_LIMIT, lat * world_radius / LAT_LIMIT
