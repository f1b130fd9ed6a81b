"""
Cabin geometry: typed regions, portals between them, exits, seats and the
navigation graph agents route over.

Coordinates are metres; x runs fore to aft along the fuselage, y runs across the
cabin from the port (L) side to the starboard (R) side.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import (
    IO,
    Any,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import networkx as nx

from .collisions import Wall, WallIndex

logger = logging.getLogger(__name__)

Point = Tuple[float, float]
Segment = Tuple[Point, Point]

EXIT_LABELS = ("1L", "1R", "2L", "2R", "3L", "3R", "4L", "4R")
EXIT_DOOR_WIDTH = 1.23
SEAT_ROW_SPACE = 0.33
WALL_MARGIN = 0.005  # a region admits a disc of at most its half-width minus this
GEOM_EPS = 1e-9


class LayoutError(Exception):
    """Custom exception for cabin layout errors"""

    pass


class NoRoute(LayoutError):
    """No portal path connects a region to an exit"""

    pass


class UnknownId(LayoutError):
    """A region or exit id does not exist in the layout"""

    pass


class RegionKind(Enum):
    """Walkable region types, each with its own speed multiplier"""

    AISLE = "aisle"
    LOBBY = "lobby"
    ROW = "row"

    @property
    def speed_modifier(self) -> float:
        return SPEED_MODIFIERS[self]


SPEED_MODIFIERS: Dict[RegionKind, float] = {
    RegionKind.LOBBY: 1.542,
    RegionKind.AISLE: 1.0,
    RegionKind.ROW: 0.71,
}


def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def midpoint(segment: Segment) -> Point:
    (ax, ay), (bx, by) = segment
    return ((ax + bx) / 2.0, (ay + by) / 2.0)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle"""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def centre(self) -> Point:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def contains(self, p: Point, eps: float = 0.0) -> bool:
        return (
            self.x0 - eps <= p[0] <= self.x1 + eps
            and self.y0 - eps <= p[1] <= self.y1 + eps
        )

    def interiors_overlap(self, other: "Rect") -> bool:
        dx = min(self.x1, other.x1) - max(self.x0, other.x0)
        dy = min(self.y1, other.y1) - max(self.y0, other.y0)
        return dx > GEOM_EPS and dy > GEOM_EPS

    def nearest_point(self, p: Point) -> Point:
        return (min(max(p[0], self.x0), self.x1), min(max(p[1], self.y0), self.y1))

    def inset(self, margin: float) -> "Rect":
        """Shrink by `margin`, never past the centre line"""
        mx = min(margin, self.width / 2.0)
        my = min(margin, self.height / 2.0)
        return Rect(self.x0 + mx, self.y0 + my, self.x1 - mx, self.y1 - my)

    def sides(self) -> List[Segment]:
        """Bottom, top, left, right"""
        return [
            ((self.x0, self.y0), (self.x1, self.y0)),
            ((self.x0, self.y1), (self.x1, self.y1)),
            ((self.x0, self.y0), (self.x0, self.y1)),
            ((self.x1, self.y0), (self.x1, self.y1)),
        ]

    def side_holding(self, segment: Segment) -> Optional[int]:
        """Index into sides() of the side that contains `segment`, if any"""
        (ax, ay), (bx, by) = segment
        for index, ((sx0, sy0), (sx1, sy1)) in enumerate(self.sides()):
            if sy0 == sy1 or abs(sy0 - sy1) < GEOM_EPS:
                if abs(ay - sy0) < GEOM_EPS and abs(by - sy0) < GEOM_EPS:
                    lo, hi = min(ax, bx), max(ax, bx)
                    if lo >= sx0 - GEOM_EPS and hi <= sx1 + GEOM_EPS:
                        return index
            else:
                if abs(ax - sx0) < GEOM_EPS and abs(bx - sx0) < GEOM_EPS:
                    lo, hi = min(ay, by), max(ay, by)
                    if lo >= sy0 - GEOM_EPS and hi <= sy1 + GEOM_EPS:
                        return index
        return None


@dataclass(frozen=True)
class Region:
    id: int
    kind: RegionKind
    rect: Rect


@dataclass(frozen=True)
class Portal:
    """Virtual door between two adjacent regions (not an aircraft exit)"""

    id: int
    region_a: int
    region_b: int
    segment: Segment
    width: float

    @property
    def midpoint(self) -> Point:
        return midpoint(self.segment)

    def other(self, region_id: int) -> int:
        return self.region_b if region_id == self.region_a else self.region_a


@dataclass(frozen=True)
class Exit:
    id: str
    segment: Segment
    width: float = EXIT_DOOR_WIDTH
    available: bool = True

    @property
    def midpoint(self) -> Point:
        return midpoint(self.segment)


@dataclass(frozen=True)
class Seat:
    id: int
    position: Point
    row_index: int
    zone: int
    label: str = ""


@dataclass(frozen=True)
class Waypoint:
    """A routing target: a portal midpoint or the final exit midpoint"""

    point: Point
    portal_id: Optional[int] = None
    exit_id: Optional[str] = None
    region_id: Optional[int] = None  # region entered through the portal

    @property
    def is_exit(self) -> bool:
        return self.exit_id is not None


@dataclass(frozen=True, eq=False)
class CabinLayout:
    """The static world. Immutable; derived indexes are built lazily."""

    regions: Tuple[Region, ...]
    portals: Tuple[Portal, ...]
    exits: Tuple[Exit, ...]
    seats: Tuple[Seat, ...]
    zone_exit_map: Mapping[int, str] = field(default_factory=dict)
    name: str = ""
    notes: Mapping[str, Any] = field(default_factory=dict)

    # --- lookups -----------------------------------------------------------

    @cached_property
    def region_by_id(self) -> Dict[int, Region]:
        return {r.id: r for r in self.regions}

    @cached_property
    def portal_by_id(self) -> Dict[int, Portal]:
        return {p.id: p for p in self.portals}

    @cached_property
    def exit_by_id(self) -> Dict[str, Exit]:
        return {e.id: e for e in self.exits}

    @cached_property
    def seat_by_id(self) -> Dict[int, Seat]:
        return {s.id: s for s in self.seats}

    @cached_property
    def portals_by_region(self) -> Dict[int, List[Portal]]:
        index: Dict[int, List[Portal]] = {r.id: [] for r in self.regions}
        for portal in sorted(self.portals, key=lambda p: p.id):
            for rid in (portal.region_a, portal.region_b):
                if rid in index:
                    index[rid].append(portal)
        return index

    @cached_property
    def available_exits(self) -> FrozenSet[str]:
        return frozenset(e.id for e in self.exits if e.available)

    @cached_property
    def adjacency(self) -> nx.MultiGraph:
        """Regions as nodes, one edge per portal"""
        graph = nx.MultiGraph()
        graph.add_nodes_from(r.id for r in self.regions)
        for portal in self.portals:
            graph.add_edge(portal.region_a, portal.region_b, key=portal.id)
        return graph

    @cached_property
    def exit_region(self) -> Dict[str, Optional[int]]:
        """Region whose boundary holds each exit segment (lowest id wins)"""
        result: Dict[str, Optional[int]] = {}
        for exit_ in self.exits:
            holder = None
            for region in sorted(self.regions, key=lambda r: r.id):
                if region.rect.side_holding(exit_.segment) is not None:
                    holder = region.id
                    break
            result[exit_.id] = holder
        return result

    @cached_property
    def exit_normal(self) -> Dict[str, Point]:
        """Unit normal of each exit segment pointing out of the cabin"""
        normals: Dict[str, Point] = {}
        for exit_ in self.exits:
            (ax, ay), (bx, by) = exit_.segment
            length = math.hypot(bx - ax, by - ay) or 1.0
            nx_, ny_ = -(by - ay) / length, (bx - ax) / length
            holder = self.exit_region.get(exit_.id)
            mid = exit_.midpoint
            if holder is not None:
                cx, cy = self.region_by_id[holder].rect.centre
                if (cx - mid[0]) * nx_ + (cy - mid[1]) * ny_ > 0:
                    nx_, ny_ = -nx_, -ny_
            normals[exit_.id] = (nx_, ny_)
        return normals

    def region_clearance(self, region_id: int) -> float:
        """Largest disc radius the region admits between its walls"""
        rect = self.region_by_id[region_id].rect
        return max(0.0, min(rect.width, rect.height) / 2.0 - WALL_MARGIN)

    # --- spatial queries ---------------------------------------------------

    @cached_property
    def _region_grid(self) -> Dict[Tuple[int, int], Tuple[int, ...]]:
        cell = 0.5
        grid: Dict[Tuple[int, int], List[int]] = {}
        for region in sorted(self.regions, key=lambda r: r.id):
            rect = region.rect
            for ix in range(math.floor(rect.x0 / cell), math.floor(rect.x1 / cell) + 1):
                for iy in range(
                    math.floor(rect.y0 / cell), math.floor(rect.y1 / cell) + 1
                ):
                    grid.setdefault((ix, iy), []).append(region.id)
        return {key: tuple(ids) for key, ids in grid.items()}

    def region_at(self, p: Point) -> Optional[Region]:
        key = (math.floor(p[0] / 0.5), math.floor(p[1] / 0.5))
        for rid in self._region_grid.get(key, ()):
            region = self.region_by_id[rid]
            if region.rect.contains(p):
                return region
        return None

    def exit_crossed(self, p: Point) -> Optional[str]:
        """Available exit whose segment the point has passed through, if any"""
        for exit_id in sorted(self.available_exits):
            exit_ = self.exit_by_id[exit_id]
            (ax, ay), (bx, by) = exit_.segment
            nx_, ny_ = self.exit_normal[exit_id]
            beyond = (p[0] - ax) * nx_ + (p[1] - ay) * ny_
            if beyond <= 0.0 or beyond > 2.0:
                continue
            ux, uy = bx - ax, by - ay
            along = ((p[0] - ax) * ux + (p[1] - ay) * uy) / (ux * ux + uy * uy)
            if 0.0 <= along <= 1.0:
                return exit_id
        return None

    def despawn_point(self, exit_id: str, depth: float = 1.0) -> Point:
        mid = self.exit_by_id[exit_id].midpoint
        nx_, ny_ = self.exit_normal[exit_id]
        return (mid[0] + nx_ * depth, mid[1] + ny_ * depth)

    def through_point(self, waypoint: Waypoint, depth: float) -> Point:
        """Steering target just past a portal, inside the region it leads to"""
        if waypoint.is_exit:
            return self.despawn_point(waypoint.exit_id)
        if waypoint.portal_id is None or waypoint.region_id is None:
            return waypoint.point
        portal = self.portal_by_id[waypoint.portal_id]
        (ax, ay), (bx, by) = portal.segment
        length = math.hypot(bx - ax, by - ay) or 1.0
        nx_, ny_ = -(by - ay) / length, (bx - ax) / length
        mid = portal.midpoint
        cx, cy = self.region_by_id[waypoint.region_id].rect.centre
        if (cx - mid[0]) * nx_ + (cy - mid[1]) * ny_ < 0:
            nx_, ny_ = -nx_, -ny_
        step = min(depth, self.region_clearance(waypoint.region_id))
        return (mid[0] + nx_ * step, mid[1] + ny_ * step)

    # --- walls -------------------------------------------------------------

    @cached_property
    def walls(self) -> Tuple[Wall, ...]:
        """Region sides minus portal and available-exit openings, plus doors"""
        walls: List[Wall] = []
        for region in sorted(self.regions, key=lambda r: r.id):
            cap = self.region_clearance(region.id)
            openings: Dict[int, List[Tuple[float, float]]] = {}
            for portal in self.portals_by_region[region.id]:
                side = region.rect.side_holding(portal.segment)
                if side is not None:
                    openings.setdefault(side, []).append(_span(portal.segment, side))
            for exit_ in self.exits:
                if not exit_.available:
                    continue
                side = region.rect.side_holding(exit_.segment)
                if side is not None:
                    openings.setdefault(side, []).append(_span(exit_.segment, side))
            for side, ((sx0, sy0), (sx1, sy1)) in enumerate(region.rect.sides()):
                horizontal = side < 2
                lo, hi = (sx0, sx1) if horizontal else (sy0, sy1)
                holes = openings.get(side, [])
                for a, b in _subtract(lo, hi, holes):
                    piece_cap = _opening_cap(cap, a, b, holes)
                    if horizontal:
                        walls.append(Wall(a, sy0, b, sy0, piece_cap))
                    else:
                        walls.append(Wall(sx0, a, sx0, b, piece_cap))
        for exit_ in sorted(self.exits, key=lambda e: e.id):
            holder = self.exit_region.get(exit_.id)
            if not exit_.available or holder is None:
                continue
            (ax, ay), (bx, by) = exit_.segment
            walls.append(Wall(ax, ay, bx, by, self.region_clearance(holder), exit_.id))
        return tuple(walls)

    @cached_property
    def wall_index(self) -> WallIndex:
        return WallIndex(self.walls)

    # --- routing -----------------------------------------------------------

    @cached_property
    def _portal_graph(self) -> nx.Graph:
        graph = nx.Graph()
        for portal in sorted(self.portals, key=lambda p: p.id):
            graph.add_node(("portal", portal.id))
        for region in sorted(self.regions, key=lambda r: r.id):
            for p, q in itertools.combinations(self.portals_by_region[region.id], 2):
                graph.add_edge(
                    ("portal", p.id),
                    ("portal", q.id),
                    weight=distance(p.midpoint, q.midpoint),
                )
        for exit_ in sorted(self.exits, key=lambda e: e.id):
            holder = self.exit_region.get(exit_.id)
            if not exit_.available or holder is None:
                continue
            graph.add_node(("exit", exit_.id))
            for portal in self.portals_by_region[holder]:
                graph.add_edge(
                    ("exit", exit_.id),
                    ("portal", portal.id),
                    weight=distance(exit_.midpoint, portal.midpoint),
                )
        return graph

    @cached_property
    def _route_tables(self) -> Dict[str, Tuple[Dict[Any, float], Dict[Any, list]]]:
        return {}

    def _routes_to(self, exit_id: str) -> Tuple[Dict[Any, float], Dict[Any, list]]:
        tables = self._route_tables
        if exit_id not in tables:
            node = ("exit", exit_id)
            if node not in self._portal_graph:
                tables[exit_id] = ({}, {})
            else:
                tables[exit_id] = nx.single_source_dijkstra(
                    self._portal_graph, node, weight="weight"
                )
        return tables[exit_id]

    def nav_path(
        self, from_region: int, to_exit: str, origin: Optional[Point] = None
    ) -> List[Waypoint]:
        if from_region not in self.region_by_id:
            raise UnknownId(f"Unknown region id: {from_region}")
        if to_exit not in self.exit_by_id:
            raise UnknownId(f"Unknown exit id: {to_exit}")
        exit_ = self.exit_by_id[to_exit]
        if not exit_.available:
            raise NoRoute(f"Exit {to_exit} is not available")

        start = origin if origin is not None else self.region_by_id[from_region].rect.centre
        holder = self.exit_region.get(to_exit)
        best_cost = math.inf
        best_nodes: Optional[List[Any]] = None

        if holder == from_region:
            best_cost = distance(start, exit_.midpoint)
            best_nodes = []

        dist, paths = self._routes_to(to_exit)
        for portal in self.portals_by_region[from_region]:
            node = ("portal", portal.id)
            if node not in dist:
                continue
            cost = distance(start, portal.midpoint) + dist[node]
            if cost < best_cost - GEOM_EPS:
                best_cost = cost
                best_nodes = list(reversed(paths[node]))[:-1]

        if best_nodes is None:
            raise NoRoute(f"No route from region {from_region} to exit {to_exit}")

        portal_ids = [pid for _, pid in best_nodes]
        waypoints: List[Waypoint] = []
        current = from_region
        for i, pid in enumerate(portal_ids):
            portal = self.portal_by_id[pid]
            if i + 1 < len(portal_ids):
                following = self.portal_by_id[portal_ids[i + 1]]
                stays = current in (following.region_a, following.region_b)
            else:
                stays = holder == current
            if stays:
                # equal-cost detour through a portal of the region we are in
                continue
            current = portal.other(current)
            waypoints.append(Waypoint(portal.midpoint, portal_id=pid, region_id=current))
        waypoints.append(Waypoint(exit_.midpoint, exit_id=to_exit))
        return waypoints

    # --- derivation --------------------------------------------------------

    def with_exits_available(self, exit_ids: Iterable[str]) -> "CabinLayout":
        """Copy of the layout with exactly `exit_ids` available"""
        wanted = set(exit_ids)
        unknown = wanted - set(self.exit_by_id)
        if unknown:
            raise UnknownId(f"Unknown exit ids: {', '.join(sorted(unknown))}")
        exits = tuple(replace(e, available=e.id in wanted) for e in self.exits)
        return replace(self, exits=exits)

    def with_zone_exit_map(self, zone_exit_map: Mapping[int, str]) -> "CabinLayout":
        return replace(self, zone_exit_map=dict(zone_exit_map))


def _span(segment: Segment, side: int) -> Tuple[float, float]:
    (ax, ay), (bx, by) = segment
    if side < 2:
        return (min(ax, bx), max(ax, bx))
    return (min(ay, by), max(ay, by))


def _subtract(
    lo: float, hi: float, holes: Sequence[Tuple[float, float]]
) -> List[Tuple[float, float]]:
    pieces = []
    cursor = lo
    for a, b in sorted(holes):
        if a > cursor + GEOM_EPS:
            pieces.append((cursor, a))
        cursor = max(cursor, b)
    if hi > cursor + GEOM_EPS:
        pieces.append((cursor, hi))
    return pieces


def _opening_cap(
    cap: float, a: float, b: float, holes: Sequence[Tuple[float, float]]
) -> float:
    """A wall piece ending at an opening admits no more clearance than the opening"""
    for lo, hi in holes:
        if abs(hi - a) <= GEOM_EPS or abs(lo - b) <= GEOM_EPS:
            cap = min(cap, max(0.0, (hi - lo) / 2.0 - WALL_MARGIN))
    return cap


def region_at(layout: CabinLayout, p: Point) -> Optional[Region]:
    """Region containing p; ties on shared boundaries go to the lowest id"""
    return layout.region_at(p)


def nav_path(
    layout: CabinLayout, from_region: int, to_exit: str, origin: Optional[Point] = None
) -> List[Waypoint]:
    """
    Shortest portal path from a region to an exit.

    Edge weights are distances between consecutive portal midpoints, with a
    terminal leg to the exit midpoint. The first leg starts at `origin`
    (default: the region centre).

    Raises:
        UnknownId: bad region or exit id
        NoRoute: exit unavailable or not connected
    """
    return layout.nav_path(from_region, to_exit, origin)


def path_length(origin: Point, waypoints: Sequence[Waypoint]) -> float:
    total = 0.0
    current = origin
    for waypoint in waypoints:
        total += distance(current, waypoint.point)
        current = waypoint.point
    return total


def validate_layout(
    layout: CabinLayout, expected_zone_counts: Optional[Mapping[int, int]] = None
) -> List[str]:
    """Check the layout invariants and return a list of violations"""
    violations: List[str] = []
    regions = sorted(layout.regions, key=lambda r: r.id)

    for kind, ids in (
        ("region", [r.id for r in layout.regions]),
        ("portal", [p.id for p in layout.portals]),
        ("exit", [e.id for e in layout.exits]),
        ("seat", [s.id for s in layout.seats]),
    ):
        for dup in sorted({i for i in ids if ids.count(i) > 1}, key=str):
            violations.append(f"duplicate: {kind} id {dup} is used more than once")

    for region in regions:
        rect = region.rect
        if not (rect.x0 < rect.x1 and rect.y0 < rect.y1):
            violations.append(f"degenerate: region {region.id} has an empty rectangle")
        if region.kind is RegionKind.ROW and abs(rect.width - SEAT_ROW_SPACE) > 1e-6:
            violations.append(
                f"row depth: region {region.id} is {rect.width:.3f} m deep, "
                f"expected {SEAT_ROW_SPACE} m"
            )

    for a, b in itertools.combinations(regions, 2):
        if a.rect.interiors_overlap(b.rect):
            violations.append(f"overlap: regions {a.id} and {b.id} overlap")

    for portal in sorted(layout.portals, key=lambda p: p.id):
        missing = [
            rid
            for rid in (portal.region_a, portal.region_b)
            if rid not in layout.region_by_id
        ]
        if missing:
            violations.append(
                f"portal: portal {portal.id} references unknown region(s) "
                f"{', '.join(map(str, missing))}"
            )
            continue
        length = distance(*portal.segment)
        if length <= GEOM_EPS or abs(length - portal.width) > 1e-6:
            violations.append(
                f"portal: portal {portal.id} width {portal.width} does not match "
                f"segment length {length:.6f}"
            )
        for rid in (portal.region_a, portal.region_b):
            if layout.region_by_id[rid].rect.side_holding(portal.segment) is None:
                violations.append(
                    f"portal: portal {portal.id} is not on the boundary of region {rid}"
                )

    for exit_ in sorted(layout.exits, key=lambda e: e.id):
        if exit_.id not in EXIT_LABELS:
            violations.append(f"exit: exit {exit_.id} is not a valid door label")
        length = distance(*exit_.segment)
        if abs(exit_.width - EXIT_DOOR_WIDTH) > 1e-6 or abs(length - exit_.width) > 1e-6:
            violations.append(
                f"exit: exit {exit_.id} must be {EXIT_DOOR_WIDTH} m wide "
                f"(width {exit_.width}, segment {length:.6f})"
            )
        if layout.exit_region.get(exit_.id) is None:
            violations.append(f"exit: exit {exit_.id} is not on any region boundary")
            continue
        mid = exit_.midpoint
        nx_, ny_ = layout.exit_normal[exit_.id]
        if layout.region_at((mid[0] + nx_ * 1e-3, mid[1] + ny_ * 1e-3)) is not None:
            violations.append(f"exit: exit {exit_.id} is not on the cabin hull")

    row_regions = [r for r in regions if r.kind is RegionKind.ROW]
    seat_regions: Dict[int, int] = {}
    for seat in sorted(layout.seats, key=lambda s: s.id):
        holders = [r.id for r in row_regions if r.rect.contains(seat.position)]
        if len(holders) != 1:
            violations.append(
                f"seat: seat {seat.id} lies in {len(holders)} row regions, expected 1"
            )
        else:
            seat_regions[seat.id] = holders[0]
        if seat.zone not in layout.zone_exit_map:
            violations.append(f"seat: seat {seat.id} zone {seat.zone} has no exit")

    for zone, exit_id in sorted(layout.zone_exit_map.items()):
        if exit_id not in layout.available_exits:
            violations.append(f"zone: zone {zone} maps to unavailable exit {exit_id}")

    for rid in sorted(set(seat_regions.values())):
        for exit_id in sorted(layout.available_exits):
            try:
                layout.nav_path(rid, exit_id)
            except NoRoute:
                violations.append(
                    f"unreachable: region {rid} cannot reach exit {exit_id}"
                )

    if expected_zone_counts is not None:
        counts = zone_counts(layout)
        for zone, expected in sorted(expected_zone_counts.items()):
            if counts.get(zone, 0) != expected:
                violations.append(
                    f"zone count: zone {zone} has {counts.get(zone, 0)} seats, "
                    f"expected {expected}"
                )

    return violations


def zone_counts(layout: CabinLayout) -> Dict[int, int]:
    counts: Dict[int, int] = {}
    for seat in layout.seats:
        counts[seat.zone] = counts.get(seat.zone, 0) + 1
    return dict(sorted(counts.items()))


# --- layout files ----------------------------------------------------------


def _num(value: float) -> float:
    return round(float(value), 6)


def _point(p: Point) -> List[float]:
    return [_num(p[0]), _num(p[1])]


def layout_to_dict(layout: CabinLayout) -> Dict[str, Any]:
    return {
        "name": layout.name,
        "regions": [
            {
                "id": r.id,
                "kind": r.kind.value,
                "rect": [_num(r.rect.x0), _num(r.rect.y0), _num(r.rect.x1), _num(r.rect.y1)],
            }
            for r in layout.regions
        ],
        "portals": [
            {
                "id": p.id,
                "region_a": p.region_a,
                "region_b": p.region_b,
                "segment": [_point(p.segment[0]), _point(p.segment[1])],
                "width": _num(p.width),
            }
            for p in layout.portals
        ],
        "exits": [
            {
                "id": e.id,
                "segment": [_point(e.segment[0]), _point(e.segment[1])],
                "width": _num(e.width),
                "available": e.available,
            }
            for e in layout.exits
        ],
        "seats": [
            {
                "id": s.id,
                "label": s.label,
                "position": _point(s.position),
                "row_index": s.row_index,
                "zone": s.zone,
            }
            for s in layout.seats
        ],
        "zone_exit_map": {str(z): e for z, e in sorted(layout.zone_exit_map.items())},
        "notes": dict(layout.notes),
    }


def layout_from_dict(data: Mapping[str, Any]) -> CabinLayout:
    """Build a layout from its file representation"""
    try:
        regions = tuple(
            Region(
                id=int(r["id"]),
                kind=RegionKind(r["kind"]),
                rect=Rect(*(float(v) for v in r["rect"])),
            )
            for r in data["regions"]
        )
        portals = tuple(
            Portal(
                id=int(p["id"]),
                region_a=int(p["region_a"]),
                region_b=int(p["region_b"]),
                segment=_segment(p["segment"]),
                width=float(p["width"]),
            )
            for p in data["portals"]
        )
        exits = tuple(
            Exit(
                id=str(e["id"]),
                segment=_segment(e["segment"]),
                width=float(e.get("width", EXIT_DOOR_WIDTH)),
                available=bool(e.get("available", True)),
            )
            for e in data["exits"]
        )
        seats = tuple(
            Seat(
                id=int(s["id"]),
                position=(float(s["position"][0]), float(s["position"][1])),
                row_index=int(s["row_index"]),
                zone=int(s["zone"]),
                label=str(s.get("label", "")),
            )
            for s in data["seats"]
        )
        zone_exit_map = {int(z): str(e) for z, e in data.get("zone_exit_map", {}).items()}
    except (KeyError, TypeError, ValueError) as e:
        raise LayoutError(f"Malformed layout data: {e!r}")

    return CabinLayout(
        regions=regions,
        portals=portals,
        exits=exits,
        seats=seats,
        zone_exit_map=zone_exit_map,
        name=str(data.get("name", "")),
        notes=dict(data.get("notes", {})),
    )


def _segment(raw: Sequence[Sequence[float]]) -> Segment:
    (ax, ay), (bx, by) = raw
    return ((float(ax), float(ay)), (float(bx), float(by)))


def dump_layout(layout: CabinLayout, stream: IO[str]) -> None:
    json.dump(layout_to_dict(layout), stream, indent=2)
    stream.write("\n")


def load_layout(source: Union[str, Path, IO[str]]) -> CabinLayout:
    """Read a layout file (JSON syntax) from a path or an open stream"""
    try:
        if isinstance(source, (str, Path)):
            with open(source, "r") as f:
                data = json.load(f)
        else:
            data = json.load(source)
    except json.JSONDecodeError as e:
        raise LayoutError(f"Layout file is not valid JSON: {e}")
    except OSError as e:
        raise LayoutError(f"Cannot read layout file: {e}")
    if not isinstance(data, dict):
        raise LayoutError("Layout file must contain a JSON object")
    return layout_from_dict(data)
