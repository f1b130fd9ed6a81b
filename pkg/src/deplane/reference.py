"""
Parametric 420-seat, two-aisle Boeing 777-200 cabin.

Three seat sections sit between four full-width door lobbies. Each seat row is
a 0.33 m row-space region in front of a 0.48 m seat; the two aisles split every
row into left, centre and right blocks. Zone membership starts from the
nearest exit along the fuselage and whole rows are then moved across zone
boundaries until the zone populations match the published counts.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .cabin import (
    EXIT_DOOR_WIDTH,
    SEAT_ROW_SPACE,
    CabinLayout,
    Exit,
    LayoutError,
    Portal,
    Rect,
    Region,
    RegionKind,
    Seat,
    validate_layout,
)

logger = logging.getLogger(__name__)

CABIN_WIDTH = 5.84
SIDE_MARGIN = 0.34
SEAT_WIDTH = 0.43
AISLE_WIDTH = 0.43
SEAT_DEPTH = 0.48
ROW_PITCH = SEAT_ROW_SPACE + SEAT_DEPTH
LOBBY_LENGTH = 2.0

REFERENCE_ZONE_COUNTS: Dict[int, int] = {1: 75, 2: 115, 3: 155, 4: 75}
REFERENCE_ZONE_EXITS: Dict[int, str] = {1: "1R", 2: "2R", 3: "3R", 4: "4L"}
REFERENCE_AVAILABLE_EXITS = ("1R", "2R", "3R", "4L")

BLOCK_LETTERS = {
    "left": ("A", "B", "C"),
    "centre": ("D", "E", "F", "G"),
    "right": ("H", "J", "K"),
}

# (left, centre, right) seats per row, one tuple per row, sections fore to aft.
# Rows behind a lobby are trimmed for galley and door clearance.
SECTION_ROWS: Tuple[Tuple[Tuple[int, int, int], ...], ...] = (
    ((3, 0, 3), (2, 4, 3)) + ((3, 4, 3),) * 11,
    ((3, 0, 3), (2, 4, 3)) + ((3, 4, 3),) * 14,
    ((3, 0, 3), (2, 4, 3)) + ((3, 4, 3),) * 10 + ((3, 4, 2), (2, 4, 2), (2, 4, 2)),
)


@dataclass(frozen=True)
class _Row:
    number: int
    x: float  # fore edge of the row space
    blocks: Tuple[int, int, int]

    @property
    def seats(self) -> int:
        return sum(self.blocks)


def _r(value: float) -> float:
    return round(value, 6)


def _block_bands() -> Dict[str, Tuple[float, float]]:
    left0 = SIDE_MARGIN
    left1 = left0 + 3 * SEAT_WIDTH
    centre0 = left1 + AISLE_WIDTH
    centre1 = centre0 + 4 * SEAT_WIDTH
    right0 = centre1 + AISLE_WIDTH
    right1 = right0 + 3 * SEAT_WIDTH
    return {
        "left": (_r(left0), _r(left1)),
        "aisle_left": (_r(left1), _r(centre0)),
        "centre": (_r(centre0), _r(centre1)),
        "aisle_right": (_r(centre1), _r(right0)),
        "right": (_r(right0), _r(right1)),
    }


def _lay_out_rows() -> Tuple[List[Tuple[float, float]], List[List[_Row]]]:
    """Lobby x-extents and the rows of each section"""
    lobbies: List[Tuple[float, float]] = []
    sections: List[List[_Row]] = []
    x = 0.0
    number = 1
    for rows in SECTION_ROWS:
        lobbies.append((_r(x), _r(x + LOBBY_LENGTH)))
        x += LOBBY_LENGTH
        section = []
        for blocks in rows:
            section.append(_Row(number, _r(x), blocks))
            number += 1
            x += ROW_PITCH
        sections.append(section)
    lobbies.append((_r(x), _r(x + LOBBY_LENGTH)))
    return lobbies, sections


def balance_zones(
    row_positions: Sequence[float],
    row_seats: Sequence[int],
    exit_positions: Sequence[float],
    targets: Sequence[int],
) -> Tuple[List[int], List[int]]:
    """
    Assign rows to zones (1-based, fore to aft).

    Rows first go to the exit nearest along the fuselage; zone boundaries then
    move to the rows where the running seat count hits the cumulative targets.

    Returns:
        (zone per row, indices of rows whose zone differs from the nearest exit)

    Raises:
        LayoutError: when no row boundary yields the target counts
    """
    nearest = [
        1 + min(range(len(exit_positions)), key=lambda k: abs(exit_positions[k] - x))
        for x in row_positions
    ]

    zones: List[int] = []
    cumulative_targets = [sum(targets[: k + 1]) for k in range(len(targets))]
    running = 0
    zone = 1
    for seats in row_seats:
        while zone < len(targets) and running >= cumulative_targets[zone - 1]:
            zone += 1
        zones.append(zone)
        running += seats

    counts = [0] * len(targets)
    for z, seats in zip(zones, row_seats):
        counts[z - 1] += seats
    if counts != list(targets):
        raise LayoutError(
            f"Rows cannot be split into zones of {list(targets)} seats (got {counts})"
        )

    moved = [i for i, (a, b) in enumerate(zip(zones, nearest)) if a != b]
    return zones, moved


def build_reference_layout() -> CabinLayout:
    """Build the validated 420-seat reference cabin"""
    bands = _block_bands()
    lobbies, sections = _lay_out_rows()
    all_rows = [row for section in sections for row in section]

    rects: List[Tuple[RegionKind, Rect, str]] = []
    for x0, x1 in lobbies:
        rects.append((RegionKind.LOBBY, Rect(x0, 0.0, x1, CABIN_WIDTH), "lobby"))
    for section in sections:
        x0 = section[0].x
        x1 = _r(section[-1].x + ROW_PITCH)
        for band in ("aisle_left", "aisle_right"):
            y0, y1 = bands[band]
            rects.append((RegionKind.AISLE, Rect(x0, y0, x1, y1), band))
        for row in section:
            for block, count in zip(("left", "centre", "right"), row.blocks):
                if count == 0:
                    continue
                y0, y1 = bands[block]
                rect = Rect(row.x, y0, _r(row.x + SEAT_ROW_SPACE), y1)
                rects.append((RegionKind.ROW, rect, f"{row.number}:{block}"))

    rects.sort(key=lambda item: (item[1].x0, item[1].y0))
    regions = tuple(Region(i, kind, rect) for i, (kind, rect, _) in enumerate(rects))
    tag_of = {regions[i].id: tag for i, (_, _, tag) in enumerate(rects)}
    by_tag: Dict[str, List[Region]] = {}
    for region in regions:
        by_tag.setdefault(tag_of[region.id], []).append(region)

    portals: List[Portal] = []

    def connect(a: Region, b: Region, segment) -> None:
        (ax, ay), (bx, by) = segment
        width = _r(abs(bx - ax) + abs(by - ay))
        portals.append(Portal(len(portals), a.id, b.id, segment, width))

    lobby_regions = sorted(by_tag["lobby"], key=lambda r: r.rect.x0)
    for band in ("aisle_left", "aisle_right"):
        for aisle in sorted(by_tag[band], key=lambda r: r.rect.x0):
            fore = next(lb for lb in lobby_regions if lb.rect.x1 == aisle.rect.x0)
            aft = next(lb for lb in lobby_regions if lb.rect.x0 == aisle.rect.x1)
            y0, y1 = aisle.rect.y0, aisle.rect.y1
            connect(fore, aisle, ((aisle.rect.x0, y0), (aisle.rect.x0, y1)))
            connect(aisle, aft, ((aisle.rect.x1, y0), (aisle.rect.x1, y1)))

    def aisle_at(band: str, x: float) -> Region:
        return next(a for a in by_tag[band] if a.rect.x0 <= x <= a.rect.x1)

    for row in all_rows:
        x0, x1 = row.x, _r(row.x + SEAT_ROW_SPACE)
        left_aisle = aisle_at("aisle_left", row.x)
        right_aisle = aisle_at("aisle_right", row.x)
        for region in by_tag.get(f"{row.number}:left", []):
            y = region.rect.y1
            connect(region, left_aisle, ((x0, y), (x1, y)))
        for region in by_tag.get(f"{row.number}:centre", []):
            connect(left_aisle, region, ((x0, region.rect.y0), (x1, region.rect.y0)))
            connect(region, right_aisle, ((x0, region.rect.y1), (x1, region.rect.y1)))
        for region in by_tag.get(f"{row.number}:right", []):
            y = region.rect.y0
            connect(right_aisle, region, ((x0, y), (x1, y)))

    exits: List[Exit] = []
    for number, (x0, x1) in enumerate(lobbies, start=1):
        door0 = _r((x0 + x1) / 2.0 - EXIT_DOOR_WIDTH / 2.0)
        door1 = _r(door0 + EXIT_DOOR_WIDTH)
        for side, y in (("L", 0.0), ("R", CABIN_WIDTH)):
            exit_id = f"{number}{side}"
            exits.append(
                Exit(
                    id=exit_id,
                    segment=((door0, y), (door1, y)),
                    width=EXIT_DOOR_WIDTH,
                    available=exit_id in REFERENCE_AVAILABLE_EXITS,
                )
            )

    exit_x = [
        (lobbies[int(e[0]) - 1][0] + lobbies[int(e[0]) - 1][1]) / 2.0
        for e in (REFERENCE_ZONE_EXITS[z] for z in sorted(REFERENCE_ZONE_EXITS))
    ]
    zones, moved = balance_zones(
        [row.x + SEAT_ROW_SPACE / 2.0 for row in all_rows],
        [row.seats for row in all_rows],
        exit_x,
        [REFERENCE_ZONE_COUNTS[z] for z in sorted(REFERENCE_ZONE_COUNTS)],
    )

    seats: List[Seat] = []
    for row, zone in zip(all_rows, zones):
        seat_x = _r(row.x + SEAT_ROW_SPACE / 2.0)
        for block, count in zip(("left", "centre", "right"), row.blocks):
            letters = BLOCK_LETTERS[block]
            y0, _ = bands[block]
            if count < len(letters):
                # trimmed blocks lose their window seat
                keep = letters[1:] if block == "left" else letters[:count]
                offset = 1 if block == "left" else 0
            else:
                keep = letters
                offset = 0
            for k, letter in enumerate(keep[:count]):
                y = _r(y0 + (k + offset + 0.5) * SEAT_WIDTH)
                seats.append(
                    Seat(
                        id=len(seats),
                        position=(seat_x, y),
                        row_index=row.number,
                        zone=zone,
                        label=f"{row.number}{letter}",
                    )
                )

    layout = CabinLayout(
        regions=regions,
        portals=tuple(portals),
        exits=tuple(exits),
        seats=tuple(seats),
        zone_exit_map=dict(REFERENCE_ZONE_EXITS),
        name="777-200 reference (420 seats)",
        notes={
            "load_balanced_rows": [
                {"row": all_rows[i].number, "zone": zones[i]} for i in moved
            ],
            "row_pitch": _r(ROW_PITCH),
            "cabin_width": CABIN_WIDTH,
        },
    )

    violations = validate_layout(layout, REFERENCE_ZONE_COUNTS)
    if violations:
        raise LayoutError(
            "Reference layout failed validation: " + "; ".join(violations)
        )
    logger.debug(
        "Built reference layout: %d regions, %d portals, %d seats",
        len(layout.regions),
        len(layout.portals),
        len(layout.seats),
    )
    return layout
