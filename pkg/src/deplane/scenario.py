"""
Experimental cells and the initial passenger population of each run.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import yaml

from .agents import AgentState, ProfileKind, sample_profile
from .cabin import CabinLayout
from .config import SimConfig, validate_sim_config

logger = logging.getLogger(__name__)

DEFAULT_SEED = 777200
DEFAULT_RUNS = 100
BAG_MODES = ("bernoulli", "quota")
SEED_LIMIT = 1 << 64


class InvalidScenario(Exception):
    """Custom exception for scenarios that cannot be populated"""

    pass


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def occupied_count(occupancy: float, n_seats: int) -> int:
    """Passengers aboard at a given occupancy, rounded to nearest (ties up)"""
    return round_half_up(occupancy * n_seats)


@dataclass(frozen=True)
class Scenario:
    """One experimental cell"""

    layout: CabinLayout
    occupancy: float = 1.0
    bag_grab_p: float = 0.0
    available_exits: Optional[Tuple[str, ...]] = None  # None: the layout's own
    zone_exit_map: Optional[Mapping[int, str]] = None  # None: the layout's own
    n_runs: int = DEFAULT_RUNS
    master_seed: int = DEFAULT_SEED
    sim: SimConfig = field(default_factory=SimConfig)
    bag_mode: str = "bernoulli"

    @property
    def exits(self) -> Tuple[str, ...]:
        if self.available_exits is not None:
            return tuple(sorted(self.available_exits))
        return tuple(sorted(self.layout.available_exits))

    @property
    def zones(self) -> Dict[int, str]:
        if self.zone_exit_map is not None:
            return dict(self.zone_exit_map)
        return dict(self.layout.zone_exit_map)

    @property
    def n_passengers(self) -> int:
        return occupied_count(self.occupancy, len(self.layout.seats))

    def resolved(self) -> "Scenario":
        """The same cell with exit overrides baked into its layout"""
        layout = self.layout
        if self.available_exits is not None and set(self.available_exits) != set(
            layout.available_exits
        ):
            layout = layout.with_exits_available(self.available_exits)
        if self.zone_exit_map is not None and dict(self.zone_exit_map) != dict(
            layout.zone_exit_map
        ):
            layout = layout.with_zone_exit_map(self.zone_exit_map)
        if layout is self.layout and self.available_exits is None and self.zone_exit_map is None:
            return self
        return replace(self, layout=layout, available_exits=None, zone_exit_map=None)

    def with_cell(self, occupancy: float, bag_grab_p: float) -> "Scenario":
        return replace(self, occupancy=occupancy, bag_grab_p=bag_grab_p)


def validate_scenario(scenario: Scenario) -> List[str]:
    """Validate a scenario and return list of errors"""
    errors = []

    if not 0 < scenario.occupancy <= 1:
        errors.append(f"Occupancy must be in (0, 1], got {scenario.occupancy}")
    elif scenario.n_passengers < 1:
        errors.append(
            f"Occupancy {scenario.occupancy} leaves no passengers aboard "
            f"{len(scenario.layout.seats)} seats"
        )

    if not 0 <= scenario.bag_grab_p <= 1:
        errors.append(f"Bag-grab probability must be in [0, 1], got {scenario.bag_grab_p}")

    if scenario.bag_mode not in BAG_MODES:
        errors.append(
            f"Unknown bag mode '{scenario.bag_mode}' (expected one of {', '.join(BAG_MODES)})"
        )

    if scenario.n_runs < 1:
        errors.append("At least one run per cell is required")

    if not 0 <= scenario.master_seed < SEED_LIMIT:
        errors.append("Master seed must be an unsigned 64-bit integer")

    known = set(scenario.layout.exit_by_id)
    unknown = sorted(set(scenario.exits) - known)
    if unknown:
        errors.append(f"Unknown exits: {', '.join(unknown)}")

    available = set(scenario.exits)
    zones = scenario.zones
    for zone in sorted({seat.zone for seat in scenario.layout.seats}):
        if zone not in zones:
            errors.append(f"Zone {zone} has no assigned exit")
        elif zones[zone] not in available:
            errors.append(f"Zone {zone} maps to unavailable exit {zones[zone]}")

    errors.extend(validate_sim_config(scenario.sim))
    return errors


def _bag_flags(scenario: Scenario, n: int, rng: np.random.Generator) -> np.ndarray:
    if scenario.bag_mode == "quota":
        flags = np.zeros(n, dtype=bool)
        quota = min(n, round_half_up(scenario.bag_grab_p * n))
        if quota:
            flags[rng.choice(n, size=quota, replace=False)] = True
        return flags
    return rng.random(n) < scenario.bag_grab_p


def populate(scenario: Scenario, rng: np.random.Generator) -> List[AgentState]:
    """
    Seat the passengers of one run.

    A uniformly random subset of seats stays occupied, each passenger is
    independently given the with-bag profile (or an exact quota of them in
    quota mode), profiles are sampled in seat order and every passenger is
    sent to the exit of its seat's zone.

    Raises:
        InvalidScenario: if validate_scenario reports any problem
    """
    errors = validate_scenario(scenario)
    if errors:
        raise InvalidScenario("; ".join(errors))

    scenario = scenario.resolved()
    layout = scenario.layout
    seats = sorted(layout.seats, key=lambda s: s.id)
    n = scenario.n_passengers

    chosen = np.sort(rng.choice(len(seats), size=n, replace=False))
    with_bag = _bag_flags(scenario, n, rng)

    zones = layout.zone_exit_map
    agents = []
    for agent_id, (seat_index, bag) in enumerate(zip(chosen.tolist(), with_bag.tolist())):
        seat = seats[seat_index]
        kind = ProfileKind.WITH_BAG if bag else ProfileKind.NO_BAGS
        profile = sample_profile(kind, rng)
        agents.append(AgentState.seated(agent_id, profile, seat, zones[seat.zone], layout))
    return agents


# --- scenario files --------------------------------------------------------


def load_scenario_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a scenario file: JSON, or YAML for .yaml/.yml files"""
    path = Path(path)
    try:
        with open(path, "r") as f:
            if path.suffix.lower() in (".yaml", ".yml"):
                data = yaml.safe_load(f)
            else:
                data = json.load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise InvalidScenario(f"Cannot parse scenario file {path}: {e}")
    except OSError as e:
        raise InvalidScenario(f"Cannot read scenario file {path}: {e}")
    if not isinstance(data, dict):
        raise InvalidScenario(f"Scenario file {path} must contain a mapping")
    return data


def _sim_from_dict(data: Mapping[str, Any], base: SimConfig) -> SimConfig:
    names = {f.name for f in fields(SimConfig)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise InvalidScenario(f"Unknown sim settings: {', '.join(unknown)}")
    values = asdict(base)
    for key, value in data.items():
        values[key] = type(values[key])(value)
    return SimConfig(**values)


def scenario_from_dict(
    data: Mapping[str, Any], layout: CabinLayout, base: Optional[Scenario] = None
) -> Scenario:
    """Overlay file values onto `base` (or defaults)"""
    scenario = base or Scenario(layout=layout)
    scenario = replace(scenario, layout=layout)
    allowed = {
        "occupancy",
        "bag_grab_p",
        "available_exits",
        "zone_exit_map",
        "n_runs",
        "master_seed",
        "sim",
        "bag_mode",
    }
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise InvalidScenario(f"Unknown scenario keys: {', '.join(unknown)}")

    changes: Dict[str, Any] = {}
    try:
        if "occupancy" in data:
            changes["occupancy"] = float(data["occupancy"])
        if "bag_grab_p" in data:
            changes["bag_grab_p"] = float(data["bag_grab_p"])
        if "n_runs" in data:
            changes["n_runs"] = int(data["n_runs"])
        if "master_seed" in data:
            changes["master_seed"] = int(data["master_seed"])
        if "bag_mode" in data:
            changes["bag_mode"] = str(data["bag_mode"])
        if data.get("available_exits") is not None:
            changes["available_exits"] = tuple(str(e) for e in data["available_exits"])
        if data.get("zone_exit_map") is not None:
            changes["zone_exit_map"] = {
                int(z): str(e) for z, e in data["zone_exit_map"].items()
            }
        if "sim" in data:
            changes["sim"] = _sim_from_dict(data["sim"] or {}, scenario.sim)
    except (TypeError, ValueError, AttributeError) as e:
        raise InvalidScenario(f"Malformed scenario value: {e}")
    return replace(scenario, **changes)


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    return {
        "occupancy": scenario.occupancy,
        "bag_grab_p": scenario.bag_grab_p,
        "available_exits": list(scenario.exits),
        "zone_exit_map": {str(z): e for z, e in sorted(scenario.zones.items())},
        "n_runs": scenario.n_runs,
        "master_seed": scenario.master_seed,
        "bag_mode": scenario.bag_mode,
        "sim": asdict(scenario.sim),
    }
