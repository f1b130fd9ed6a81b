"""
Disc separation and wall constraints for the movement engine.

Agents are discs. After every tentative move, overlapping pairs are pushed apart
along their centre line (each partner takes a share of the overlap according to
its mobility) and every mobile disc is pushed out of the walls near it, sweep
after sweep. A mobile disc that still overlaps a neighbour at the end stays
where it started the step.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

logger = logging.getLogger(__name__)

EPS = 1e-12
SETTLE_SWEEPS = 25


@dataclass(frozen=True)
class Wall:
    """A solid segment. `cap` bounds the clearance a disc keeps from it."""

    ax: float
    ay: float
    bx: float
    by: float
    cap: float = math.inf
    door: Optional[str] = None  # exit id when this segment is a closable door

    def nearest_point(self, x: float, y: float) -> Tuple[float, float]:
        ux, uy = self.bx - self.ax, self.by - self.ay
        length2 = ux * ux + uy * uy
        if length2 < EPS:
            return self.ax, self.ay
        t = ((x - self.ax) * ux + (y - self.ay) * uy) / length2
        t = min(1.0, max(0.0, t))
        return self.ax + t * ux, self.ay + t * uy

    def side(self, x: float, y: float) -> float:
        """Signed area of (a, b, p); the sign tells which side p is on."""
        return (self.bx - self.ax) * (y - self.ay) - (self.by - self.ay) * (x - self.ax)


class WallIndex:
    """Uniform grid over wall segments for near-point queries"""

    def __init__(self, walls: Iterable[Wall], cell: float = 0.5, reach: float = 0.5):
        self.walls: Tuple[Wall, ...] = tuple(walls)
        self.cell = cell
        self.reach = reach
        self._grid: Dict[Tuple[int, int], List[int]] = defaultdict(list)
        for index, wall in enumerate(self.walls):
            x0 = min(wall.ax, wall.bx) - reach
            x1 = max(wall.ax, wall.bx) + reach
            y0 = min(wall.ay, wall.by) - reach
            y1 = max(wall.ay, wall.by) + reach
            for ix in range(math.floor(x0 / cell), math.floor(x1 / cell) + 1):
                for iy in range(math.floor(y0 / cell), math.floor(y1 / cell) + 1):
                    self._grid[(ix, iy)].append(index)

    def __len__(self) -> int:
        return len(self.walls)

    def near(self, x: float, y: float) -> List[Wall]:
        key = (math.floor(x / self.cell), math.floor(y / self.cell))
        return [self.walls[i] for i in self._grid.get(key, ())]


def _push_out_of_wall(
    wall: Wall,
    x: float,
    y: float,
    clearance: float,
    prev: Optional[Tuple[float, float]],
) -> Tuple[float, float]:
    # A centre that crossed the wall line this step is put back on its old side.
    if prev is not None:
        side_prev = wall.side(prev[0], prev[1])
        side_now = wall.side(x, y)
        if side_prev * side_now < 0:
            qx, qy = wall.nearest_point(x, y)
            ux, uy = wall.bx - wall.ax, wall.by - wall.ay
            length = math.hypot(ux, uy)
            # only a crossing within the segment span counts
            t_cross = side_prev / (side_prev - side_now)
            cx = prev[0] + t_cross * (x - prev[0])
            cy = prev[1] + t_cross * (y - prev[1])
            along = ((cx - wall.ax) * ux + (cy - wall.ay) * uy) / (length * length)
            if length > EPS and 0.0 <= along <= 1.0:
                nx, ny = -uy / length, ux / length
                if side_prev < 0:
                    nx, ny = -nx, -ny
                return qx + nx * clearance, qy + ny * clearance

    qx, qy = wall.nearest_point(x, y)
    dx, dy = x - qx, y - qy
    dist = math.hypot(dx, dy)
    if dist >= clearance:
        return x, y
    if dist > EPS:
        scale = clearance / dist
        return qx + dx * scale, qy + dy * scale
    # centre exactly on the wall: leave along the normal toward the previous side
    ux, uy = wall.bx - wall.ax, wall.by - wall.ay
    length = math.hypot(ux, uy)
    if length < EPS:
        return x, y
    nx, ny = -uy / length, ux / length
    if prev is not None and wall.side(prev[0], prev[1]) < 0:
        nx, ny = -nx, -ny
    return qx + nx * clearance, qy + ny * clearance


def _close_pairs(xs: List[float], ys: List[float], reach: float) -> List[List[int]]:
    """Disc index pairs within `reach`, in lexicographic order"""
    found = cKDTree(np.column_stack((xs, ys))).query_pairs(reach, output_type="ndarray")
    if not len(found):
        return []
    return found[np.lexsort((found[:, 1], found[:, 0]))].tolist()


def _restore_violators(
    xs: List[float],
    ys: List[float],
    radii: Sequence[float],
    weights: Sequence[float],
    start: Sequence[Sequence[float]],
    reach: float,
    tolerance: float,
) -> int:
    """
    Put mobile discs left in overlap back at their start positions.

    Restoring a disc can uncover an overlap with a neighbour that moved into
    its old place, so the check repeats until every overlapping pair with a
    mobile member has no displaced disc left to restore.
    """
    r = np.asarray(radii, dtype=float)
    mobile = np.asarray(weights, dtype=float) > 0.0
    origin = np.asarray(start, dtype=float)
    restored = 0
    while True:
        current = np.column_stack((xs, ys))
        found = cKDTree(current).query_pairs(reach, output_type="ndarray")
        if not len(found):
            return restored
        i, j = found[:, 0], found[:, 1]
        gap = np.hypot(current[i, 0] - current[j, 0], current[i, 1] - current[j, 1])
        bad = (r[i] + r[j] - gap > tolerance) & (mobile[i] | mobile[j])
        if not bad.any():
            return restored
        displaced = mobile & np.any(current != origin, axis=1)
        culprits = np.unique(np.concatenate((i[bad], j[bad])))
        culprits = culprits[displaced[culprits]]
        if not len(culprits):
            logger.debug("%d overlapping pairs were already in contact", int(bad.sum()))
            return restored
        for k in culprits.tolist():
            xs[k], ys[k] = float(origin[k, 0]), float(origin[k, 1])
        restored += len(culprits)


def resolve_collisions(
    positions: Union[np.ndarray, Sequence[Sequence[float]]],
    diameters: Union[np.ndarray, Sequence[float]],
    walls: Union[WallIndex, Iterable[Wall]] = (),
    *,
    mobility: Optional[Sequence[float]] = None,
    rank: Optional[Sequence[int]] = None,
    clearances: Optional[Sequence[float]] = None,
    previous: Optional[np.ndarray] = None,
    open_doors: Optional[Set[str]] = None,
    sweeps: int = 5,
    tolerance: float = 1e-6,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Separate overlapping discs and push them out of walls.

    Each sweep visits overlapping pairs in lexicographic (i, j) order and
    projects each pair apart along its centre line (Gauss-Seidel), then pushes
    every mobile disc out of the walls near it. Equal mobilities split the
    overlap evenly; a pair with zero total mobility is left alone. With `rank`,
    the higher-ranked of two mobile discs holds its ground and its partner takes
    the whole correction. Sweeps stop once nothing overlaps by more than
    `tolerance`. When `previous` is given, up to SETTLE_SWEEPS further sweeps
    work on the discs still in contact, and any mobile disc that is still
    overlapped after that goes back to where it started the step.

    Args:
        positions: (n, 2) disc centres
        diameters: (n,) disc diameters
        walls: a WallIndex or an iterable of Wall segments
        mobility: per-disc weights (default 1.0); 0 marks a fixed obstacle
        rank: per-disc right of way between mobile discs (higher wins)
        clearances: per-disc wall clearance bound (default: the radius)
        previous: (n, 2) positions at the start of the step; must not overlap
        open_doors: exit ids whose door walls are currently passable
        sweeps: pairwise sweeps before only the discs in contact are revisited
        tolerance: accepted residual overlap
        rng: stream for separating exactly coincident centres

    Returns:
        Corrected (n, 2) positions (a new array).
    """
    pos = np.array(positions, dtype=float, copy=True).reshape(-1, 2)
    n = len(pos)
    if n == 0:
        return pos

    diam = np.asarray(diameters, dtype=float)
    mob = np.ones(n) if mobility is None else np.asarray(mobility, dtype=float)
    xs = pos[:, 0].tolist()
    ys = pos[:, 1].tolist()
    radii = (diam / 2.0).tolist()
    weights = mob.tolist()
    ranks = None if rank is None else list(rank)
    start = None if previous is None else np.asarray(previous, dtype=float).reshape(-1, 2)
    start_points = None if start is None else start.tolist()
    limits = [
        radii[k] if clearances is None else min(radii[k], clearances[k]) for k in range(n)
    ]
    index = walls if isinstance(walls, WallIndex) else WallIndex(walls)
    doors = open_doors or set()
    reach = float(diam.max())

    def separate(pairs: List[List[int]]) -> Set[int]:
        touched: Set[int] = set()
        for i, j in pairs:
            wi, wj = weights[i], weights[j]
            if ranks is not None and wi > 0.0 and wj > 0.0 and ranks[i] != ranks[j]:
                if ranks[i] > ranks[j]:
                    wi = 0.0
                else:
                    wj = 0.0
            total = wi + wj
            if total <= 0.0:
                continue
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            dist = math.hypot(dx, dy)
            overlap = radii[i] + radii[j] - dist
            if overlap <= tolerance:
                continue
            touched.add(i)
            touched.add(j)
            if dist > EPS:
                nx, ny = dx / dist, dy / dist
            else:
                angle = rng.uniform(0.0, 2.0 * math.pi) if rng is not None else 0.0
                nx, ny = math.cos(angle), math.sin(angle)
            share_i = overlap * wi / total
            share_j = overlap * wj / total
            xs[i] += nx * share_i
            ys[i] += ny * share_i
            xs[j] -= nx * share_j
            ys[j] -= ny * share_j
        return touched

    def push_out(discs: Iterable[int]) -> Tuple[float, Set[int]]:
        largest = 0.0
        moved: Set[int] = set()
        if not len(index):
            return largest, moved
        for k in discs:
            if weights[k] <= 0.0:
                continue
            came_from = None if start_points is None else tuple(start_points[k])
            x, y = xs[k], ys[k]
            for wall in index.near(x, y):
                if wall.door is not None and wall.door in doors:
                    continue
                x, y = _push_out_of_wall(wall, x, y, min(limits[k], wall.cap), came_from)
            shift = math.hypot(x - xs[k], y - ys[k])
            if shift > tolerance:
                moved.add(k)
            largest = max(largest, shift)
            xs[k], ys[k] = x, y
        return largest, moved

    budget = max(1, sweeps)
    limit = budget + (SETTLE_SWEEPS if start is not None else 0)
    active: Optional[Set[int]] = None
    for sweep in range(limit):
        pairs = _close_pairs(xs, ys, reach) if n > 1 else []
        if active is not None:
            pairs = [p for p in pairs if p[0] in active or p[1] in active]
        touched = separate(pairs)
        pushed, moved = push_out(range(n) if active is None else sorted(active))
        if not touched and pushed <= tolerance:
            break
        if sweep + 1 >= budget:
            # past the budget only the discs still in contact are revisited
            active = touched | moved

    if start is not None and n > 1:
        restored = _restore_violators(xs, ys, radii, weights, start, reach, tolerance)
        if restored:
            logger.debug("Kept %d discs at their start positions", restored)

    pos[:, 0] = xs
    pos[:, 1] = ys
    return pos


def room_for(
    positions: Union[np.ndarray, Sequence[Sequence[float]]],
    diameters: Union[np.ndarray, Sequence[float]],
    index: int,
) -> float:
    """Largest diameter disc `index` can take without overlapping another disc"""
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    if len(pos) < 2:
        return math.inf
    diam = np.asarray(diameters, dtype=float)
    gaps = np.hypot(pos[:, 0] - pos[index, 0], pos[:, 1] - pos[index, 1])
    room = 2.0 * gaps - diam
    room[index] = math.inf
    return float(room.min())


def wall_room(
    walls: Union[WallIndex, Iterable[Wall]],
    x: float,
    y: float,
    clearance: float,
    open_doors: Optional[Set[str]] = None,
) -> float:
    """
    Largest radius a disc centred at (x, y) can take before a wall would push it.

    A wall only binds when the centre is closer to it than the clearance the
    disc keeps from it (`clearance`, bounded by the wall's own cap).
    """
    index = walls if isinstance(walls, WallIndex) else WallIndex(walls)
    doors = open_doors or set()
    room = math.inf
    for wall in index.near(x, y):
        if wall.door is not None and wall.door in doors:
            continue
        qx, qy = wall.nearest_point(x, y)
        dist = math.hypot(x - qx, y - qy)
        if dist < min(clearance, wall.cap):
            room = min(room, dist)
    return room


def max_overlap(positions: np.ndarray, diameters: Sequence[float]) -> float:
    """Largest pairwise disc overlap (0.0 when no discs touch)"""
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    if len(pos) < 2:
        return 0.0
    diam = np.asarray(diameters, dtype=float)
    pairs = cKDTree(pos).query_pairs(float(diam.max()), output_type="ndarray")
    if not len(pairs):
        return 0.0
    i, j = pairs[:, 0], pairs[:, 1]
    dist = np.hypot(pos[i, 0] - pos[j, 0], pos[i, 1] - pos[j, 1])
    overlap = (diam[i] + diam[j]) / 2.0 - dist
    return float(max(0.0, overlap.max()))
