"""
deplane - Agent-based emergency evacuation simulator for a 777-200 cabin.

This package models the cabin as typed walkable regions joined by portals,
samples passenger profiles (including passengers who stop to collect carry-on
bags), moves disc-shaped agents with a fixed time step and runs seeded Monte
Carlo batches over occupancy and bag-grab levels.
"""

__version__ = "0.1.0"
__author__ = "deplane contributors"
__description__ = "Agent-based aircraft cabin evacuation simulator"

from .config import Config, SimConfig, get_default_config, validate_config
from .cabin import (
    CabinLayout,
    LayoutError,
    NoRoute,
    RegionKind,
    UnknownId,
    nav_path,
    region_at,
    validate_layout,
)
from .reference import build_reference_layout
from .agents import AgentPhase, AgentState, ProfileKind, next_goal, sample_profile, tick_phase
from .collisions import resolve_collisions
from .engine import ExitEvent, RunResult, apply_squeeze, run, step
from .scenario import InvalidScenario, Scenario, populate
from .montecarlo import BatchResult, SweepGrid, derive_seed, run_batch
from .stats import (
    CellSummary,
    EmptyInput,
    EvacProfile,
    NoCompletedRuns,
    build_heatmap,
    build_profiles,
    filter_outliers,
    summarize_cell,
)

__all__ = [
    "Config",
    "SimConfig",
    "get_default_config",
    "validate_config",
    "CabinLayout",
    "LayoutError",
    "NoRoute",
    "RegionKind",
    "UnknownId",
    "nav_path",
    "region_at",
    "validate_layout",
    "build_reference_layout",
    "AgentPhase",
    "AgentState",
    "ProfileKind",
    "next_goal",
    "sample_profile",
    "tick_phase",
    "resolve_collisions",
    "ExitEvent",
    "RunResult",
    "apply_squeeze",
    "run",
    "step",
    "InvalidScenario",
    "Scenario",
    "populate",
    "BatchResult",
    "SweepGrid",
    "derive_seed",
    "run_batch",
    "CellSummary",
    "EmptyInput",
    "EvacProfile",
    "NoCompletedRuns",
    "build_heatmap",
    "build_profiles",
    "filter_outliers",
    "summarize_cell",
]
