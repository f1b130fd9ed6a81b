"""
Shared pytest fixtures and test configuration.
"""

import tempfile
from pathlib import Path
from typing import Generator

import numpy as np
import pytest
from click.testing import CliRunner

from deplane.agents import AgentState, PassengerProfile, ProfileKind
from deplane.cabin import (
    CabinLayout,
    Exit,
    Portal,
    Rect,
    Region,
    RegionKind,
    Seat,
)
from deplane.config import SimConfig
from deplane.reference import build_reference_layout


def make_corridor_layout() -> CabinLayout:
    """
    Lobby (id 0) with door 1L on its y=0 side, an aisle (id 1) running aft
    from it, and one seat row (id 2) opening onto the aisle.

    1R on the lobby's far side is present but unavailable.
    """
    regions = (
        Region(0, RegionKind.LOBBY, Rect(0.0, 0.0, 3.0, 3.0)),
        Region(1, RegionKind.AISLE, Rect(3.0, 1.285, 12.0, 1.715)),
        Region(2, RegionKind.ROW, Rect(6.0, 1.715, 6.33, 3.0)),
    )
    portals = (
        Portal(0, 0, 1, ((3.0, 1.285), (3.0, 1.715)), 0.43),
        Portal(1, 1, 2, ((6.0, 1.715), (6.33, 1.715)), 0.33),
    )
    exits = (
        Exit("1L", ((0.885, 0.0), (2.115, 0.0)), 1.23, True),
        Exit("1R", ((0.885, 3.0), (2.115, 3.0)), 1.23, False),
    )
    seats = (
        Seat(0, (6.165, 1.93), 1, 1, "1C"),
        Seat(1, (6.165, 2.36), 1, 1, "1B"),
        Seat(2, (6.165, 2.79), 1, 1, "1A"),
    )
    return CabinLayout(
        regions=regions,
        portals=portals,
        exits=exits,
        seats=seats,
        zone_exit_map={1: "1L"},
        name="corridor",
    )


def make_agent(
    agent_id: int,
    position,
    layout: CabinLayout,
    *,
    kind: ProfileKind = ProfileKind.NO_BAGS,
    free_speed: float = 2.0,
    delay: float = 2.0,
    bag_wait=None,
    exit_id: str = "1L",
    seat_id=None,
) -> AgentState:
    """An agent with a fixed profile standing at `position`"""
    if kind is ProfileKind.WITH_BAG and bag_wait is None:
        bag_wait = 2.3
    profile = PassengerProfile(
        kind=kind, free_speed=free_speed, initial_delay=delay, bag_wait=bag_wait
    )
    seat = Seat(agent_id if seat_id is None else seat_id, tuple(position), 0, 1)
    return AgentState.seated(agent_id, profile, seat, exit_id, layout)


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Provide a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmp_dir:
        yield Path(tmp_dir)


@pytest.fixture
def cli_runner() -> CliRunner:
    """Provide a Click CLI test runner."""
    return CliRunner()


@pytest.fixture(scope="session")
def reference_layout() -> CabinLayout:
    """The 420-seat reference cabin, built once per session."""
    return build_reference_layout()


@pytest.fixture
def corridor_layout() -> CabinLayout:
    """Provide the small three-region test layout."""
    return make_corridor_layout()


@pytest.fixture
def fast_sim() -> SimConfig:
    """Engine settings for short test runs."""
    return SimConfig(max_time=120.0, exit_headway=0.0)


@pytest.fixture
def rng() -> np.random.Generator:
    """A fixed random stream."""
    return np.random.default_rng(12345)
