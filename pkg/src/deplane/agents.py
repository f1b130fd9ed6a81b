"""
Passenger profiles and the per-agent behaviour state machine.

An agent waits out its initial delay, optionally walks to the nearest aisle or
lobby point to collect a bag, then follows portal waypoints to its assigned
exit.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, List, Optional, Tuple

import numpy as np

from .cabin import CabinLayout, Point, RegionKind, Seat, Waypoint, distance, path_length

logger = logging.getLogger(__name__)

BODY_DIAMETER = 0.4558
MIN_DIAMETER = 0.33
DELAY_MEAN = 4.4
DELAY_SD = 1.52
DELAY_BOUNDS = (2.0, 16.0)
BAG_WAIT_RANGE = (2.3, 8.9)
INITIAL_ORIENTATION = 180.0  # degrees; the movement model is orientation-free
ARRIVAL_RADIUS = 0.25
TIMER_EPS = 1e-9


class ProfileKind(Enum):
    NO_BAGS = "nobags"
    WITH_BAG = "withbag"


FREE_SPEED_RANGES = {
    ProfileKind.NO_BAGS: (1.5, 2.5),
    ProfileKind.WITH_BAG: (0.419, 1.916),
}


class AgentPhase(Enum):
    """Behaviour phases in the only order an agent may visit them"""

    DELAYED = 0
    MOVING_TO_BAG_SPOT = 1
    COLLECTING_BAG = 2
    MOVING_TO_EXIT = 3
    EVACUATED = 4


class GoalKind(Enum):
    WAIT = "wait"
    MOVE = "move"
    DESPAWN = "despawn"


@dataclass(frozen=True)
class PassengerProfile:
    kind: ProfileKind
    free_speed: float
    initial_delay: float
    diameter: float = BODY_DIAMETER
    min_diameter: float = MIN_DIAMETER
    bag_wait: Optional[float] = None
    orientation: float = INITIAL_ORIENTATION

    @property
    def has_bag(self) -> bool:
        return self.kind is ProfileKind.WITH_BAG


@dataclass(frozen=True)
class Goal:
    kind: GoalKind
    target: Point
    stop_at_target: bool = False


@dataclass
class AgentState:
    id: int
    profile: PassengerProfile
    seat_id: int
    exit_id: str
    position: Point
    current_diameter: float
    phase: AgentPhase = AgentPhase.DELAYED
    timer: float = 0.0
    waypoints: List[Waypoint] = field(default_factory=list)
    blocked_time: float = 0.0
    progress: Deque[Tuple[float, float]] = field(default_factory=deque)  # (made, desired)
    region_id: Optional[int] = None
    bag_spot: Optional[Point] = None
    bag_region: Optional[int] = None
    evacuated_at: Optional[float] = None
    phases_visited: List[AgentPhase] = field(default_factory=list)

    def __post_init__(self):
        if not self.phases_visited:
            self.phases_visited.append(self.phase)

    @classmethod
    def seated(
        cls,
        agent_id: int,
        profile: PassengerProfile,
        seat: Seat,
        exit_id: str,
        layout: Optional[CabinLayout] = None,
    ) -> "AgentState":
        """A new agent in its seat, waiting out its initial delay"""
        region = layout.region_at(seat.position) if layout is not None else None
        return cls(
            id=agent_id,
            profile=profile,
            seat_id=seat.id,
            exit_id=exit_id,
            position=seat.position,
            current_diameter=profile.diameter,
            phase=AgentPhase.DELAYED,
            timer=profile.initial_delay,
            region_id=region.id if region is not None else None,
        )

    @property
    def onboard(self) -> bool:
        return self.phase is not AgentPhase.EVACUATED

    @property
    def radius(self) -> float:
        return self.current_diameter / 2.0

    def enter(self, phase: AgentPhase) -> None:
        if phase.value < self.phase.value:
            raise ValueError(f"Agent {self.id} cannot go back from {self.phase} to {phase}")
        self.phase = phase
        self.phases_visited.append(phase)

    def evacuate(self, time: float) -> None:
        self.enter(AgentPhase.EVACUATED)
        self.evacuated_at = time
        self.waypoints = []
        self.timer = 0.0


def sample_initial_delay(rng: np.random.Generator) -> float:
    """Normal(4.4, 1.52) truncated to [2, 16] by rejection"""
    lo, hi = DELAY_BOUNDS
    while True:
        value = float(rng.normal(DELAY_MEAN, DELAY_SD))
        if lo <= value <= hi:
            return value


def sample_profile(kind: ProfileKind, rng: np.random.Generator) -> PassengerProfile:
    """
    Draw one passenger's attributes.

    Draw order is fixed (free speed, initial delay, bag wait) so a run's stream
    is reproducible.
    """
    lo, hi = FREE_SPEED_RANGES[kind]
    free_speed = float(rng.uniform(lo, hi))
    initial_delay = sample_initial_delay(rng)
    bag_wait = None
    if kind is ProfileKind.WITH_BAG:
        bag_wait = float(rng.uniform(*BAG_WAIT_RANGE))
    return PassengerProfile(
        kind=kind,
        free_speed=free_speed,
        initial_delay=initial_delay,
        bag_wait=bag_wait,
    )


def _expire(agent: AgentState) -> None:
    """Leave a timed phase whose timer has run out"""
    if agent.timer > TIMER_EPS:
        return
    if agent.phase is AgentPhase.DELAYED:
        agent.timer = 0.0
        agent.waypoints = []
        if agent.profile.has_bag:
            agent.enter(AgentPhase.MOVING_TO_BAG_SPOT)
        else:
            agent.enter(AgentPhase.MOVING_TO_EXIT)
    elif agent.phase is AgentPhase.COLLECTING_BAG:
        agent.timer = 0.0
        agent.waypoints = []
        agent.enter(AgentPhase.MOVING_TO_EXIT)


def tick_phase(agent: AgentState, dt: float) -> AgentState:
    """Run down the Delayed/CollectingBag timer and change phase at zero"""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if agent.phase in (AgentPhase.DELAYED, AgentPhase.COLLECTING_BAG):
        agent.timer -= dt
        _expire(agent)
    return agent


def bag_spot(layout: CabinLayout, agent: AgentState) -> Tuple[Point, Optional[int]]:
    """
    Nearest point of the nearest aisle or lobby region.

    Candidates are the agent's own region and the aisle/lobby regions one
    portal away; each rectangle is shrunk by the clearance the agent keeps
    from walls so the spot is reachable. Ties go to the lowest region id.
    """
    here = agent.region_id
    if here is None:
        region = layout.region_at(agent.position)
        here = region.id if region is not None else None
    if here is None:
        return agent.position, None

    current = layout.region_by_id[here]
    if current.kind in (RegionKind.AISLE, RegionKind.LOBBY):
        return agent.position, here

    candidates = sorted(
        {
            portal.other(here)
            for portal in layout.portals_by_region[here]
            if layout.region_by_id[portal.other(here)].kind
            in (RegionKind.AISLE, RegionKind.LOBBY)
        }
    )
    best: Optional[Tuple[float, int, Point]] = None
    for rid in candidates:
        margin = min(agent.profile.diameter / 2.0, layout.region_clearance(rid))
        point = layout.region_by_id[rid].rect.inset(margin).nearest_point(agent.position)
        d = distance(agent.position, point)
        if best is None or d < best[0] - 1e-12:
            best = (d, rid, point)
    if best is None:
        logger.debug("Agent %d has no aisle or lobby next to region %d", agent.id, here)
        return agent.position, here
    return best[2], best[1]


def _steering_target(layout: CabinLayout, agent: AgentState, arrival_radius: float) -> Point:
    while agent.waypoints:
        waypoint = agent.waypoints[0]
        if waypoint.is_exit:
            break
        target = layout.through_point(waypoint, arrival_radius)
        entered = waypoint.region_id is not None and agent.region_id == waypoint.region_id
        if entered and distance(agent.position, target) <= arrival_radius:
            agent.waypoints.pop(0)
            continue
        return target
    return layout.through_point(agent.waypoints[0], arrival_radius)


def next_goal(
    agent: AgentState, layout: CabinLayout, arrival_radius: float = ARRIVAL_RADIUS
) -> Goal:
    """
    Decide what the agent does this step, advancing its phase where a phase
    ends on arrival (bag spot reached) or on an expired timer.

    Portal waypoints are steered to a point just inside the region they lead
    into; the final exit waypoint is steered past the door so the agent crosses
    the exit segment.
    """
    if agent.phase is AgentPhase.EVACUATED:
        return Goal(GoalKind.DESPAWN, agent.position)

    _expire(agent)

    if agent.phase in (AgentPhase.DELAYED, AgentPhase.COLLECTING_BAG):
        return Goal(GoalKind.WAIT, agent.position)

    if agent.phase is AgentPhase.MOVING_TO_BAG_SPOT:
        if agent.bag_spot is None:
            agent.bag_spot, agent.bag_region = bag_spot(layout, agent)
        arrived = distance(agent.position, agent.bag_spot) <= arrival_radius or (
            agent.bag_region is not None and agent.region_id == agent.bag_region
        )
        if not arrived:
            return Goal(GoalKind.MOVE, agent.bag_spot, stop_at_target=True)
        agent.enter(AgentPhase.COLLECTING_BAG)
        agent.timer = agent.profile.bag_wait or 0.0
        return next_goal(agent, layout, arrival_radius)

    if layout.exit_crossed(agent.position) == agent.exit_id:
        return Goal(GoalKind.DESPAWN, agent.position)

    if not agent.waypoints:
        region_id = agent.region_id
        if region_id is None:
            region = layout.region_at(agent.position)
            region_id = region.id if region is not None else None
        if region_id is None:
            # outside every region but not past the door: head for the door
            return Goal(GoalKind.MOVE, layout.despawn_point(agent.exit_id))
        agent.waypoints = layout.nav_path(region_id, agent.exit_id, agent.position)

    return Goal(GoalKind.MOVE, _steering_target(layout, agent, arrival_radius))


def keep_route(agent: AgentState, layout: CabinLayout, region_id: int) -> None:
    """
    Update the waypoint list after the agent's centre moved into `region_id`.

    Reaching a region further along the route drops the waypoints before it.
    Landing on either side of the portal the agent is heading for keeps the
    route, so an agent pushed back out of a doorway does not plan again. Any
    other region clears the list and next_goal plans from there.
    """
    if agent.phase is not AgentPhase.MOVING_TO_EXIT or not agent.waypoints:
        return
    for k, waypoint in enumerate(agent.waypoints):
        if waypoint.region_id == region_id:
            del agent.waypoints[:k]
            return
    first = agent.waypoints[0]
    if first.is_exit:
        sides = {layout.exit_region.get(first.exit_id)}
    else:
        portal = layout.portal_by_id[first.portal_id]
        sides = {portal.region_a, portal.region_b}
    if region_id not in sides:
        agent.waypoints = []


def remaining_distance(agent: AgentState) -> float:
    """Route length from the agent to its bag spot or, failing that, its exit"""
    if agent.phase is AgentPhase.MOVING_TO_BAG_SPOT and agent.bag_spot is not None:
        return distance(agent.position, agent.bag_spot)
    return path_length(agent.position, agent.waypoints)


def phase_sequence_is_monotone(phases: List[AgentPhase]) -> bool:
    values = [p.value for p in phases]
    return all(a < b for a, b in zip(values, values[1:]))


def max_speed(profile: PassengerProfile) -> float:
    """Upper bound on the agent's unobstructed speed anywhere in the cabin"""
    return profile.free_speed * max(k.speed_modifier for k in RegionKind)


def heading(a: Point, b: Point) -> Tuple[float, float, float]:
    """Unit vector from a to b and the distance between them"""
    dx, dy = b[0] - a[0], b[1] - a[1]
    d = math.hypot(dx, dy)
    if d <= 1e-12:
        return 0.0, 0.0, 0.0
    return dx / d, dy / d, d
