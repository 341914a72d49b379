"""Elevation field, contour extraction and colouring for the map's terrain.

Elevation blends two signals over the world square: how deeply a point is
nested in topic circles, and a Gaussian kernel density of entity positions.
Contours come from marching squares with linear interpolation along cell
edges; saddle cells are disambiguated by the cell-centre average.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import OutOfRange
from .hierarchy import TopicHierarchy
from .layout import LayoutTree
from .occupancy import OccupancyGraph

DEFAULT_GRID_SIZE = 512
DEFAULT_ISO_LEVELS = tuple(round(0.05 + 0.1 * i, 2) for i in range(10))
DEFAULT_ALPHA = 0.5
DEFAULT_BETA = 0.5


@dataclass
class ElevationGrid:
    """Row-major scalar field sampled at grid nodes over [-R, R]^2."""

    width: int
    height: int
    world_radius: float
    values: np.ndarray  # shape (height, width), float64 in [0, 1]

    def xs(self) -> np.ndarray:
        return np.linspace(-self.world_radius, self.world_radius, self.width)

    def ys(self) -> np.ndarray:
        return np.linspace(-self.world_radius, self.world_radius, self.height)

    def interpolate(self, x: float, y: float) -> float:
        """Bilinear interpolation at a world point (clamped to the grid)."""
        sx = (x + self.world_radius) / (2 * self.world_radius) * (self.width - 1)
        sy = (y + self.world_radius) / (2 * self.world_radius) * (self.height - 1)
        sx = min(max(sx, 0.0), self.width - 1.0)
        sy = min(max(sy, 0.0), self.height - 1.0)
        j0 = min(int(sx), self.width - 2)
        i0 = min(int(sy), self.height - 2)
        tx = sx - j0
        ty = sy - i0
        v = self.values
        return float(
            v[i0, j0] * (1 - tx) * (1 - ty)
            + v[i0, j0 + 1] * tx * (1 - ty)
            + v[i0 + 1, j0] * (1 - tx) * ty
            + v[i0 + 1, j0 + 1] * tx * ty
        )


@dataclass
class ContourPolyline:
    points: list[tuple[float, float]]
    closed: bool


@dataclass
class ContourSet:
    iso_levels: tuple[float, ...]
    lines: list[list[ContourPolyline]]  # aligned with iso_levels


def elevation_grid(
    layout: LayoutTree,
    hierarchy: TopicHierarchy,
    occupancy: OccupancyGraph,
    width: int = DEFAULT_GRID_SIZE,
    height: int = DEFAULT_GRID_SIZE,
    bandwidth: float | None = None,
    alpha: float = DEFAULT_ALPHA,
    beta: float = DEFAULT_BETA,
) -> ElevationGrid:
    """Blend topic nesting depth with entity kernel density, normalised to [0, 1].

    Density kernels sit on each entity's deepest-level instances. Points
    outside every top-level topic circle are clamped to zero: that is the sea.
    """
    if width < 2 or height < 2:
        raise ValueError("elevation grid needs at least 2x2 nodes")
    if bandwidth is None:
        bandwidth = 1.5 * layout.entity_radius
    radius = layout.world_radius
    xs = np.linspace(-radius, radius, width)
    ys = np.linspace(-radius, radius, height)

    nest = np.zeros((height, width))
    max_depth = hierarchy.max_depth
    for topic_id, circle in layout.per_topic.items():
        if hierarchy.nodes[topic_id].level < 1:
            continue
        dx2 = (xs - circle.cx) ** 2
        dy2 = (ys - circle.cy) ** 2
        nest += (dy2[:, None] + dx2[None, :]) <= circle.r**2
    if max_depth > 0:
        nest /= max_depth

    density = np.zeros((height, width))
    deepest: dict[str, int] = {}
    for level in occupancy.levels():
        for inst in occupancy.instances_at(level):
            deepest[inst.entity_id] = max(deepest.get(inst.entity_id, 0), inst.level)
    two_bw2 = 2.0 * bandwidth * bandwidth
    for level in occupancy.levels():
        for inst in occupancy.instances_at(level):
            if inst.level != deepest[inst.entity_id]:
                continue
            circle = layout.per_instance[inst.instance_id]
            kx = np.exp(-((xs - circle.cx) ** 2) / two_bw2)
            ky = np.exp(-((ys - circle.cy) ** 2) / two_bw2)
            density += np.outer(ky, kx)
    peak = density.max()
    if peak > 0:
        density /= peak

    values = alpha * nest + beta * density

    sea = np.ones((height, width), dtype=bool)
    for topic_id in hierarchy.level_topics(1):
        circle = layout.per_topic[topic_id]
        dx2 = (xs - circle.cx) ** 2
        dy2 = (ys - circle.cy) ** 2
        sea &= (dy2[:, None] + dx2[None, :]) > circle.r**2
    values[sea] = 0.0

    top = values.max()
    if top > 0:
        values /= top
    return ElevationGrid(width=width, height=height, world_radius=radius, values=values)


# --- marching squares ----------------------------------------------------

# Cell corners, counter-clockwise from the (row, col) node:
#   0: (i, j)   1: (i, j+1)   2: (i+1, j+1)   3: (i+1, j)
# Edges between corner pairs:
_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))

# Case index bit k set  <=>  corner k is above the iso level. Each entry lists
# the crossed-edge pairs to connect; cases 5 and 10 are saddles resolved at
# runtime by the cell-centre average.
_CASES: dict[int, tuple[tuple[int, int], ...]] = {
    0: (),
    1: ((3, 0),),
    2: ((0, 1),),
    3: ((3, 1),),
    4: ((1, 2),),
    6: ((0, 2),),
    7: ((3, 2),),
    8: ((2, 3),),
    9: ((2, 0),),
    11: ((2, 1),),
    12: ((1, 3),),
    13: ((1, 0),),
    14: ((0, 3),),
    15: (),
}
_SADDLE_HIGH = {5: ((0, 1), (2, 3)), 10: ((1, 2), (3, 0))}
_SADDLE_LOW = {5: ((3, 0), (1, 2)), 10: ((0, 1), (2, 3))}


def _cell_segments(
    corners: Sequence[float], iso: float
) -> tuple[tuple[int, int], ...]:
    """Crossed-edge pairs for one cell, given its four corner values."""
    case = 0
    for bit, value in enumerate(corners):
        if value > iso:
            case |= 1 << bit
    if case in _CASES:
        return _CASES[case]
    centre = sum(corners) / 4.0
    return _SADDLE_HIGH[case] if centre > iso else _SADDLE_LOW[case]


def _edge_key(i: int, j: int, edge: int) -> tuple[int, int, int]:
    """Grid-global identity of a cell edge: (node row, node col, 0=horiz|1=vert)."""
    if edge == 0:
        return (i, j, 0)
    if edge == 1:
        return (i, j + 1, 1)
    if edge == 2:
        return (i + 1, j, 0)
    return (i, j, 1)


def _edge_point(
    grid: ElevationGrid, xs: np.ndarray, ys: np.ndarray, i: int, j: int, edge: int, iso: float
) -> tuple[float, float]:
    corner_nodes = (((i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)))
    (ia, ja), (ib, jb) = corner_nodes[_EDGES[edge][0]], corner_nodes[_EDGES[edge][1]]
    va = float(grid.values[ia, ja])
    vb = float(grid.values[ib, jb])
    t = 0.5 if vb == va else (iso - va) / (vb - va)
    t = min(max(t, 0.0), 1.0)
    x = xs[ja] + t * (xs[jb] - xs[ja])
    y = ys[ia] + t * (ys[ib] - ys[ia])
    return (float(x), float(y))


def extract_contours(
    grid: ElevationGrid, iso_levels: Sequence[float] = DEFAULT_ISO_LEVELS
) -> ContourSet:
    """Marching-squares polylines per iso level, chained and flagged closed/open."""
    iso_levels = tuple(iso_levels)
    if any(iso_levels[i] >= iso_levels[i + 1] for i in range(len(iso_levels) - 1)):
        raise ValueError("iso levels must be strictly ascending")
    xs = grid.xs()
    ys = grid.ys()
    values = grid.values
    all_lines: list[list[ContourPolyline]] = []
    for iso in iso_levels:
        above = values > iso
        crossed = above[:-1, :-1] | above[:-1, 1:] | above[1:, 1:] | above[1:, :-1]
        uniform = above[:-1, :-1] & above[:-1, 1:] & above[1:, 1:] & above[1:, :-1]
        cells = np.argwhere(crossed & ~uniform)

        # segment list plus edge-key adjacency for chaining
        segments: list[tuple[tuple[int, int, int], tuple[int, int, int]]] = []
        points: dict[tuple[int, int, int], tuple[float, float]] = {}
        by_edge: dict[tuple[int, int, int], list[int]] = {}
        for i, j in cells:
            i = int(i)
            j = int(j)
            corners = (
                float(values[i, j]),
                float(values[i, j + 1]),
                float(values[i + 1, j + 1]),
                float(values[i + 1, j]),
            )
            for ea, eb in _cell_segments(corners, iso):
                ka = _edge_key(i, j, ea)
                kb = _edge_key(i, j, eb)
                if ka not in points:
                    points[ka] = _edge_point(grid, xs, ys, i, j, ea, iso)
                if kb not in points:
                    points[kb] = _edge_point(grid, xs, ys, i, j, eb, iso)
                index = len(segments)
                segments.append((ka, kb))
                by_edge.setdefault(ka, []).append(index)
                by_edge.setdefault(kb, []).append(index)

        used = [False] * len(segments)
        polylines: list[ContourPolyline] = []

        def walk(start_seg: int, start_key: tuple[int, int, int]) -> list[tuple[int, int, int]]:
            """Follow the chain from one end of a segment as far as it goes."""
            chain = [start_key]
            seg = start_seg
            key = start_key
            while True:
                used[seg] = True
                ka, kb = segments[seg]
                key = kb if key == ka else ka
                chain.append(key)
                nxt = [s for s in by_edge[key] if not used[s]]
                if not nxt:
                    return chain
                seg = nxt[0]

        for start in range(len(segments)):
            if used[start]:
                continue
            ka, kb = segments[start]
            chain = walk(start, ka)
            closed = chain[0] == chain[-1]
            if not closed:
                # extend backwards from the original starting end
                tail = [s for s in by_edge[ka] if not used[s]]
                if tail:
                    back = walk(tail[0], ka)
                    chain = list(reversed(back))[:-1] + chain
                    closed = chain[0] == chain[-1]
            polylines.append(
                ContourPolyline(points=[points[k] for k in chain], closed=closed)
            )
        polylines.sort(key=lambda p: (p.points[0], len(p.points)))
        all_lines.append(polylines)
    return ContourSet(iso_levels=iso_levels, lines=all_lines)


# --- colour scale ---------------------------------------------------------

RGB = tuple[int, int, int]


@dataclass
class ColorScale:
    """Piecewise-linear elevation colouring with a water sub-ramp below sea level.

    Stops are ascending; the sea level appears twice, closing the water ramp
    and opening the land ramp. At exactly sea level the land colour wins.
    """

    sea_level: float
    stops: list[tuple[float, RGB]]


DEFAULT_COLOR_SCALE = ColorScale(
    sea_level=0.05,
    stops=[
        (0.00, (13, 41, 84)),
        (0.05, (90, 154, 200)),
        (0.05, (233, 212, 168)),
        (0.25, (133, 186, 118)),
        (0.50, (168, 174, 97)),
        (0.75, (150, 118, 84)),
        (0.92, (201, 201, 201)),
        (1.00, (250, 250, 250)),
    ],
)


def colorize(elevation: float, scale: ColorScale = DEFAULT_COLOR_SCALE) -> RGB:
    """Colour for a normalised elevation value."""
    if not (0.0 <= elevation <= 1.0):
        raise OutOfRange(f"elevation {elevation} outside [0, 1]")
    stops = scale.stops
    if elevation < scale.sea_level:
        # water ramp: up to and including the first stop at sea level
        cut = next(
            (i for i, (e, _) in enumerate(stops) if e >= scale.sea_level), len(stops) - 1
        )
        segment = stops[: cut + 1]
    else:
        # land ramp: from the last stop at or below sea level
        cut = 0
        for i, (e, _) in enumerate(stops):
            if e <= scale.sea_level:
                cut = i
        segment = stops[cut:]
    if elevation <= segment[0][0]:
        return segment[0][1]
    for (e0, c0), (e1, c1) in zip(segment, segment[1:]):
        if elevation <= e1:
            if e1 == e0:
                return c1
            t = (elevation - e0) / (e1 - e0)
            return tuple(round(c0[ch] + t * (c1[ch] - c0[ch])) for ch in range(3))  # type: ignore[return-value]
    return segment[-1][1]


def _css(colour: RGB) -> str:
    return f"rgb({colour[0]},{colour[1]},{colour[2]})"


def export_svg(
    layout: LayoutTree,
    hierarchy: TopicHierarchy,
    contours: ContourSet,
    scale: ColorScale = DEFAULT_COLOR_SCALE,
    size: int = 1024,
) -> str:
    """Documentation figure: water background, contour paths, topic circles.

    One <path> element per contour polyline.
    """
    radius = layout.world_radius
    factor = size / (2 * radius)

    def sx(x: float) -> float:
        return (x + radius) * factor

    def sy(y: float) -> float:
        return (radius - y) * factor  # flip so +y points up

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="{_css(colorize(0.0, scale))}"/>',
    ]
    for iso, polylines in zip(contours.iso_levels, contours.lines):
        colour = _css(colorize(min(iso, 1.0), scale))
        for line in polylines:
            coords = " L ".join(f"{sx(x):.2f} {sy(y):.2f}" for x, y in line.points)
            closing = " Z" if line.closed else ""
            parts.append(
                f'<path d="M {coords}{closing}" fill="none" stroke="{colour}" stroke-width="1"/>'
            )
    for topic_id in sorted(layout.per_topic):
        circle = layout.per_topic[topic_id]
        level = hierarchy.nodes[topic_id].level
        parts.append(
            f'<circle cx="{sx(circle.cx):.2f}" cy="{sy(circle.cy):.2f}" '
            f'r="{circle.r * factor:.2f}" fill="none" stroke="rgba(40,40,40,0.5)" '
            f'stroke-width="{max(0.5, 2.0 - 0.5 * level):.1f}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
