from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional


@dataclass
class SimConfig:
    """Configuration for the movement engine"""

    dt: float = 0.05  # 3.855 m/s * dt < narrowest feature (0.33 m)
    max_time: float = 600.0
    squeeze_trigger: float = 1.0  # seconds of continuous blockage
    squeeze_rate: float = 0.2  # m/s of diameter change
    separation_tolerance: float = 1e-6

    # Movement model
    blocked_fraction: float = 0.5  # blocked = net progress < fraction * desired
    progress_window: float = 1.0  # seconds of net progress that decide blockage
    arrival_radius: float = 0.25
    collision_sweeps: int = 5

    # Door flow capacity: one evacuee per exit every `exit_headway` seconds
    exit_headway: float = 0.55

    profile_bin_width: float = 0.5


@dataclass
class RunnerConfig:
    """Configuration for batch execution"""

    workers: int = 1
    progress: bool = True
    progress_json: bool = False


@dataclass
class OutputConfig:
    """Configuration for result bundles"""

    output_dir: Path = Path("deplane-output")
    trace_runs: int = 0  # write trace CSVs for the first N runs of each cell
    bin_width: float = 0.5


@dataclass
class Config:
    """Main application configuration"""

    sim: SimConfig = field(default_factory=SimConfig)
    runner: RunnerConfig = field(default_factory=RunnerConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    verbose: bool = False
    layout_path: Optional[Path] = None


def get_default_config() -> Config:
    """Get default configuration instance"""
    return Config()


def validate_sim_config(sim: SimConfig) -> List[str]:
    """Validate engine settings and return list of errors"""
    errors = []

    if sim.dt <= 0:
        errors.append("Time step dt must be positive")

    if sim.max_time < 90:
        errors.append("max_time must be at least 90 seconds")

    if sim.squeeze_trigger <= 0 or sim.squeeze_rate <= 0:
        errors.append("Squeeze parameters must be positive")

    if sim.separation_tolerance <= 0:
        errors.append("Separation tolerance must be positive")

    if not 0 < sim.blocked_fraction <= 1:
        errors.append("blocked_fraction must be in (0, 1]")

    if sim.progress_window < sim.dt:
        errors.append("progress_window must cover at least one time step")

    if sim.arrival_radius <= 0:
        errors.append("Arrival radius must be positive")

    if sim.collision_sweeps < 1:
        errors.append("At least one collision sweep is required")

    if sim.exit_headway < 0:
        errors.append("Exit headway cannot be negative")

    if sim.profile_bin_width <= 0:
        errors.append("Profile bin width must be positive")

    return errors


def validate_config(config: Config) -> List[str]:
    """Validate configuration and return list of errors"""
    errors = validate_sim_config(config.sim)

    if config.runner.workers < 1:
        errors.append("Worker count must be at least 1")

    if config.output.trace_runs < 0:
        errors.append("trace_runs cannot be negative")

    if config.output.bin_width <= 0:
        errors.append("Bin width must be positive")

    return errors
