"""
Fixed-timestep movement engine.

Each tick, every onboard agent (in id order) advances its phase timer, picks a
goal and proposes a step toward it at free speed times the speed modifier of
the region it stands in. An agent that has just started walking first shrinks
to fit between its neighbours. Proposed positions are then separated, the
agent with right of way holding its ground, and pushed out of walls. Blockage
is judged on net progress over a trailing window, squeezing and regrowth are
applied, and agents whose centre has passed an open exit door are evacuated.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .agents import (
    AgentState,
    GoalKind,
    heading,
    keep_route,
    next_goal,
    remaining_distance,
    tick_phase,
)
from .cabin import CabinLayout, RegionKind
from .collisions import resolve_collisions, room_for, wall_room
from .config import SimConfig

logger = logging.getLogger(__name__)

TIME_DECIMALS = 10
REGION_PRECEDENCE = {RegionKind.LOBBY: 0, RegionKind.AISLE: 1, RegionKind.ROW: 2}


class SimulationError(Exception):
    """Custom exception for runs that cannot start"""

    pass


@dataclass(frozen=True)
class ExitEvent:
    agent_id: int
    exit_id: str
    time: float


@dataclass
class RunResult:
    run_index: int
    seed: Optional[int]
    exit_events: List[ExitEvent]
    tet: Optional[float]
    per_exit_clear: Dict[str, float]
    completed: bool
    profile_bins: Dict[str, List[int]]
    bin_width: float
    n_agents: int
    assigned: Dict[str, int] = field(default_factory=dict)

    @property
    def n_evacuated(self) -> int:
        return len(self.exit_events)


def cumulative_counts(
    times: Sequence[float], bin_width: float, n_bins: int
) -> List[int]:
    """Number of times <= k * bin_width, for k = 0 .. n_bins - 1"""
    starts = np.arange(n_bins) * bin_width
    ordered = np.sort(np.asarray(times, dtype=float))
    return np.searchsorted(ordered, starts + 1e-9, side="right").astype(int).tolist()


def bins_for(horizon: float, bin_width: float) -> int:
    """Bins needed so the last bin start reaches the horizon"""
    return int(math.ceil(horizon / bin_width - 1e-9)) + 1


@dataclass
class World:
    """Mutable state of one run"""

    layout: CabinLayout
    agents: List[AgentState]
    config: SimConfig
    rng: np.random.Generator
    tick: int = 0
    events: List[ExitEvent] = field(default_factory=list)
    door_free_at: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def create(
        cls,
        layout: CabinLayout,
        agents: Sequence[AgentState],
        config: SimConfig,
        rng: np.random.Generator,
    ) -> "World":
        seats = [a.seat_id for a in agents]
        if len(set(seats)) != len(seats):
            raise SimulationError("Two agents share a seat")
        ids = [a.id for a in agents]
        if len(set(ids)) != len(ids):
            raise SimulationError("Agent ids must be unique")
        available = layout.available_exits
        for agent in agents:
            if agent.exit_id not in available:
                raise SimulationError(
                    f"Agent {agent.id} is assigned to unavailable exit {agent.exit_id}"
                )
            if agent.region_id is None:
                region = layout.region_at(agent.position)
                if region is None:
                    raise SimulationError(f"Agent {agent.id} starts outside the cabin")
                agent.region_id = region.id
        return cls(
            layout=layout,
            agents=sorted(agents, key=lambda a: a.id),
            config=config,
            rng=rng,
            door_free_at={e: 0.0 for e in sorted(available)},
        )

    @property
    def time(self) -> float:
        return round(self.tick * self.config.dt, TIME_DECIMALS)

    @property
    def onboard(self) -> List[AgentState]:
        return [a for a in self.agents if a.onboard]

    @property
    def finished(self) -> bool:
        return all(not a.onboard for a in self.agents)

    def open_doors(self, at: float) -> set:
        return {e for e, free in self.door_free_at.items() if free <= at + 1e-12}

    def result(self, run_index: int = 0, seed: Optional[int] = None) -> RunResult:
        bin_width = self.config.profile_bin_width
        completed = self.finished
        times = [e.time for e in self.events]
        tet = max(times) if completed and times else None

        per_exit_clear: Dict[str, float] = {}
        by_exit: Dict[str, List[float]] = {}
        for event in self.events:
            by_exit.setdefault(event.exit_id, []).append(event.time)
            per_exit_clear[event.exit_id] = max(
                per_exit_clear.get(event.exit_id, 0.0), event.time
            )

        n_bins = bins_for(max(times) if times else 0.0, bin_width)
        profile_bins = {
            exit_id: cumulative_counts(by_exit[exit_id], bin_width, n_bins)
            for exit_id in sorted(by_exit)
        }

        assigned: Dict[str, int] = {}
        for agent in self.agents:
            assigned[agent.exit_id] = assigned.get(agent.exit_id, 0) + 1

        return RunResult(
            run_index=run_index,
            seed=seed,
            exit_events=list(self.events),
            tet=tet,
            per_exit_clear=dict(sorted(per_exit_clear.items())),
            completed=completed,
            profile_bins=profile_bins,
            bin_width=bin_width,
            n_agents=len(self.agents),
            assigned=dict(sorted(assigned.items())),
        )


def apply_squeeze(
    agent: AgentState,
    dt: float,
    config: Optional[SimConfig] = None,
    room: float = math.inf,
) -> AgentState:
    """
    Shrink a long-blocked agent toward its minimum diameter, or let a freely
    moving one recover toward its profile diameter without growing past `room`.
    """
    config = config or SimConfig()
    change = config.squeeze_rate * dt
    if agent.blocked_time > config.squeeze_trigger:
        agent.current_diameter = max(
            agent.profile.min_diameter, agent.current_diameter - change
        )
    elif agent.blocked_time == 0.0:
        grown = min(agent.profile.diameter, agent.current_diameter + change, room)
        agent.current_diameter = max(agent.current_diameter, grown)
    return agent


def update_blocked(
    agent: AgentState, made: float, desired: float, config: Optional[SimConfig] = None
) -> AgentState:
    """
    Record one step of progress and count blocked time.

    `made` is the step's displacement along the intended heading, so a push
    backwards cancels progress made earlier. The agent is blocked while its net
    progress over the trailing `progress_window` falls short of
    `blocked_fraction` of what it tried to walk.
    """
    config = config or SimConfig()
    window = max(1, int(round(config.progress_window / config.dt)))
    agent.progress.append((made, desired))
    while len(agent.progress) > window:
        agent.progress.popleft()
    made_total = sum(m for m, _ in agent.progress)
    desired_total = sum(d for _, d in agent.progress)
    if made_total < config.blocked_fraction * desired_total:
        agent.blocked_time += config.dt
    else:
        agent.blocked_time = 0.0
    return agent


def right_of_way(
    agents: Sequence[AgentState], layout: CabinLayout, mobility: Sequence[float]
) -> List[int]:
    """
    Collision ranks for mobile agents; the higher rank holds its ground.

    Lobby beats aisle beats row, then the agent with less of its route left,
    then the lower id. Agents outside every region (past a door) rank first.
    """
    keys = []
    for k, agent in enumerate(agents):
        if mobility[k] <= 0.0:
            continue
        region = layout.region_by_id.get(agent.region_id)
        precedence = REGION_PRECEDENCE[region.kind] if region is not None else -1
        keys.append((precedence, remaining_distance(agent), agent.id, k))
    ranks = [0] * len(agents)
    for rank, key in enumerate(sorted(keys, reverse=True), start=1):
        ranks[key[3]] = rank
    return ranks


def step(world: World) -> World:
    layout = world.layout
    config = world.config
    dt = config.dt
    t_next = round((world.tick + 1) * dt, TIME_DECIMALS)
    movers = world.onboard
    n = len(movers)
    if n == 0:
        world.tick += 1
        return world

    previous = np.array([a.position for a in movers], dtype=float)
    tentative = previous.copy()
    diameters = np.array([a.current_diameter for a in movers], dtype=float)
    desired_length = [0.0] * n
    headings = [(0.0, 0.0)] * n
    mobility = [0.0] * n
    clearances = [0.0] * n
    despawning: List[int] = []

    for k, agent in enumerate(movers):
        tick_phase(agent, dt)
        goal = next_goal(agent, layout, config.arrival_radius)
        region = layout.region_by_id.get(agent.region_id)
        if goal.kind is GoalKind.MOVE:
            if not agent.progress:
                # starting to move: fit between the neighbours it was seated against
                room = room_for(previous, diameters, k)
                if room < diameters[k]:
                    agent.current_diameter = max(agent.profile.min_diameter, room)
                    diameters[k] = agent.current_diameter
            ux, uy, remaining = heading(agent.position, goal.target)
            modifier = region.kind.speed_modifier if region is not None else 1.0
            length = agent.profile.free_speed * modifier * dt
            if goal.stop_at_target:
                length = min(length, remaining)
            tentative[k, 0] += ux * length
            tentative[k, 1] += uy * length
            desired_length[k] = length
            headings[k] = (ux, uy)
            mobility[k] = 1.0
        elif goal.kind is GoalKind.DESPAWN:
            despawning.append(k)
        clearances[k] = (
            min(agent.radius, layout.region_clearance(region.id))
            if region is not None
            else agent.radius
        )

    doors = world.open_doors(t_next)
    resolved = resolve_collisions(
        tentative,
        diameters,
        layout.wall_index,
        mobility=mobility,
        rank=right_of_way(movers, layout, mobility),
        clearances=clearances,
        previous=previous,
        open_doors=doors,
        sweeps=config.collision_sweeps,
        tolerance=config.separation_tolerance,
        rng=world.rng,
    )

    for k, agent in enumerate(movers):
        agent.position = (float(resolved[k, 0]), float(resolved[k, 1]))
        region = layout.region_at(agent.position)
        if region is not None and region.id != agent.region_id:
            agent.region_id = region.id
            keep_route(agent, layout, region.id)

    for k, agent in enumerate(movers):
        if mobility[k] <= 0.0:
            agent.blocked_time = 0.0
            agent.progress.clear()
            continue
        x, y = agent.position
        ux, uy = headings[k]
        made = (x - previous[k, 0]) * ux + (y - previous[k, 1]) * uy
        update_blocked(agent, made, desired_length[k], config)
        room = math.inf
        if agent.blocked_time == 0.0 and agent.current_diameter < agent.profile.diameter:
            region = layout.region_by_id.get(agent.region_id)
            clearance = layout.region_clearance(region.id) if region is not None else math.inf
            room = min(
                room_for(resolved, diameters, k),
                2.0 * wall_room(layout.wall_index, x, y, clearance, doors),
            )
        apply_squeeze(agent, dt, config, room)
        diameters[k] = agent.current_diameter

    for k, agent in enumerate(movers):
        crossed = layout.exit_crossed(agent.position)
        if crossed is None and k in despawning:
            crossed = agent.exit_id
        if crossed is None:
            continue
        agent.evacuate(t_next)
        world.events.append(ExitEvent(agent.id, crossed, t_next))
        world.door_free_at[crossed] = (
            max(world.door_free_at.get(crossed, 0.0), t_next) + config.exit_headway
        )

    world.tick += 1
    return world


TRACE_COLUMNS = ["tick_time", "agent_id", "x", "y", "diameter", "phase"]


def _trace_rows(world: World) -> List[list]:
    t = world.time
    return [
        [t, a.id, a.position[0], a.position[1], a.current_diameter, a.phase.name.lower()]
        for a in world.onboard
    ]


def write_trace(rows: List[list], path: Union[str, Path]) -> None:
    frame = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    frame.to_csv(path, index=False, float_format="%.3f", lineterminator="\n")


def run(
    layout: CabinLayout,
    agents: Sequence[AgentState],
    config: Optional[SimConfig] = None,
    rng: Optional[np.random.Generator] = None,
    *,
    run_index: int = 0,
    seed: Optional[int] = None,
    trace_path: Optional[Union[str, Path]] = None,
) -> RunResult:
    """
    Simulate one run until everyone is out or max_time is reached.

    The run is a pure function of its inputs: `rng` is only consulted to
    separate agents whose centres coincide exactly.

    Returns:
        RunResult; an incomplete run has completed=False and tet=None.
    """
    config = config or SimConfig()
    if rng is None:
        rng = np.random.default_rng(seed)
    world = World.create(layout, agents, config, rng)
    max_ticks = int(round(config.max_time / config.dt))

    trace: Optional[List[list]] = [] if trace_path is not None else None
    if trace is not None:
        trace.extend(_trace_rows(world))

    while not world.finished and world.tick < max_ticks:
        step(world)
        if trace is not None:
            trace.extend(_trace_rows(world))

    if trace is not None:
        write_trace(trace, trace_path)

    result = world.result(run_index, seed)
    if not result.completed:
        logger.debug(
            "Run %d hit max_time with %d of %d agents onboard",
            run_index,
            len(world.onboard),
            len(world.agents),
        )
    return result
