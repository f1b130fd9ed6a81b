"""
Command-line interface for deplane.
"""

import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Tuple

import click

from .cabin import LayoutError, dump_layout, load_layout, validate_layout, zone_counts
from .config import Config, get_default_config, validate_config
from .montecarlo import SweepGrid, run_batch, validate_grid
from .output import (
    BundleError,
    build_manifest,
    grid_from_manifest,
    load_manifest,
    write_bundle,
)
from .reference import build_reference_layout
from .scenario import (
    BAG_MODES,
    DEFAULT_SEED,
    InvalidScenario,
    Scenario,
    load_scenario_file,
    scenario_from_dict,
    validate_scenario,
)
from .stats import NoCompletedRuns

LEVEL_TOLERANCE = 1e-9
LEVEL_DECIMALS = 10


def parse_levels(text: str) -> Tuple[float, ...]:
    """
    Parse a level list: `start:stop:step` (inclusive), `a,b,c` or a single
    value. Values are rounded to 10 decimals.
    """
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"Range '{text}' must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError(f"Range step must be positive in '{text}'")
        if stop < start - LEVEL_TOLERANCE:
            raise ValueError(f"Range stop is below start in '{text}'")
        count = int(math.floor((stop - start) / step + LEVEL_TOLERANCE)) + 1
        return tuple(round(start + k * step, LEVEL_DECIMALS) for k in range(count))
    return tuple(round(float(v), LEVEL_DECIMALS) for v in text.split(",") if v.strip())


class LevelsParam(click.ParamType):
    name = "levels"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            levels = parse_levels(value)
        except ValueError as e:
            self.fail(str(e), param, ctx)
        if not levels:
            self.fail("no levels given", param, ctx)
        return levels


LEVELS = LevelsParam()


def default_workers() -> int:
    return os.cpu_count() or 1


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def load_checked_layout(layout_path: Optional[str]):
    """The reference layout, or a layout file that passes validation"""
    if layout_path is None:
        return build_reference_layout()
    layout = load_layout(layout_path)
    violations = validate_layout(layout)
    if violations:
        raise LayoutError(
            f"{layout_path} has {len(violations)} violation(s): " + "; ".join(violations)
        )
    return layout


def build_config(
    output_dir: str,
    workers: int,
    progress_json: bool,
    trace_runs: int,
    dt: Optional[float],
    max_time: Optional[float],
    exit_headway: Optional[float],
    verbose: bool,
    layout_path: Optional[str],
) -> Config:
    config = get_default_config()
    config.output.output_dir = Path(output_dir)
    config.output.trace_runs = trace_runs
    config.runner.workers = workers
    config.runner.progress_json = progress_json
    config.verbose = verbose
    config.layout_path = Path(layout_path) if layout_path else None
    if dt is not None:
        config.sim.dt = dt
    if max_time is not None:
        config.sim.max_time = max_time
    if exit_headway is not None:
        config.sim.exit_headway = exit_headway
    return config


def build_scenario(
    config: Config,
    scenario_file: Optional[str],
    occupancy: Optional[float],
    bag_grab: Optional[float],
    runs: Optional[int],
    seed: Optional[int],
    bag_mode: Optional[str],
    sim_overrides: dict,
) -> Scenario:
    """Defaults, then the scenario file, then explicit flags"""
    layout = load_checked_layout(
        str(config.layout_path) if config.layout_path else None
    )
    scenario = Scenario(layout=layout, master_seed=DEFAULT_SEED, sim=config.sim)
    if scenario_file:
        scenario = scenario_from_dict(load_scenario_file(scenario_file), layout, scenario)

    changes = {}
    if occupancy is not None:
        changes["occupancy"] = occupancy
    if bag_grab is not None:
        changes["bag_grab_p"] = bag_grab
    if runs is not None:
        changes["n_runs"] = runs
    if seed is not None:
        changes["master_seed"] = seed
    if bag_mode is not None:
        changes["bag_mode"] = bag_mode
    overrides = {k: v for k, v in sim_overrides.items() if v is not None}
    if overrides:
        changes["sim"] = replace(scenario.sim, **overrides)
    return replace(scenario, **changes)


def execute(command: str, grid: SweepGrid, config: Config) -> None:
    """Run a grid, write its bundle and report; exits 1 on any problem"""
    errors = validate_grid(grid) + validate_config(config) + validate_scenario(grid.base)
    if errors:
        for error in errors:
            click.echo(f"❌ {error}", err=True)
        sys.exit(1)

    def report_cell(cells_done: int, cells_total: int, runs_done: int) -> None:
        if config.runner.progress_json:
            click.echo(
                json.dumps(
                    {
                        "cells_done": cells_done,
                        "cells_total": cells_total,
                        "runs_done": runs_done,
                    }
                ),
                err=True,
            )

    output_dir = config.output.output_dir
    n_cells = len(grid.occupancies) * len(grid.bag_grabs)
    click.echo(
        f"🛫 Simulating {n_cells} cell(s) x {grid.runs_per_cell} run(s) "
        f"with {config.runner.workers} worker(s)",
        err=True,
    )
    batch = run_batch(
        grid,
        workers=config.runner.workers,
        progress=not config.runner.progress_json,
        trace_dir=output_dir / "traces" if config.output.trace_runs else None,
        trace_runs=config.output.trace_runs,
        on_cell_done=report_cell,
    )

    for cell, error in batch.errors:
        click.echo(
            f"❌ Cell occupancy {cell.occupancy}, bag-grab {cell.bag_grab_p}: {error}",
            err=True,
        )

    manifest = build_manifest(
        command,
        grid,
        grid.base.layout,
        config.output.bin_width,
        config.output.trace_runs,
    )
    try:
        write_bundle(batch, output_dir, manifest, config.output.bin_width)
    except NoCompletedRuns as e:
        click.echo(f"❌ {e}", err=True)
        click.echo(f"Partial results written to: {output_dir}", err=True)
        sys.exit(1)

    if batch.errors:
        sys.exit(1)

    incomplete = sum(c.n_incomplete for c in batch.cells)
    if incomplete:
        click.echo(f"⚠️  {incomplete} run(s) hit max_time and were excluded", err=True)
    click.echo(f"✅ Results written to: {output_dir}")


def simulation_options(f):
    """Options shared by run and sweep"""
    options = [
        click.option(
            "--runs", "-n", type=click.IntRange(min=1), help="Runs per cell (default 100)"
        ),
        click.option(
            "--seed",
            type=click.IntRange(min=0, max=(1 << 64) - 1),
            help=f"Master seed (default {DEFAULT_SEED})",
        ),
        click.option(
            "--scenario",
            "scenario_file",
            type=click.Path(exists=True, dir_okay=False),
            help="Scenario file (JSON, or YAML with a .yaml/.yml suffix)",
        ),
        click.option(
            "--layout",
            "layout_path",
            type=click.Path(exists=True, dir_okay=False),
            help="Cabin layout file (default: the reference 777-200)",
        ),
        click.option(
            "--bag-mode",
            type=click.Choice(BAG_MODES),
            help="Assign with-bag passengers independently or as an exact quota",
        ),
        click.option(
            "--workers",
            "-j",
            type=click.IntRange(min=1),
            default=default_workers,
            show_default="available CPUs",
            help="Worker processes",
        ),
        click.option(
            "--output-dir",
            "-o",
            type=click.Path(file_okay=False),
            default="deplane-output",
            show_default=True,
            help="Bundle directory",
        ),
        click.option(
            "--trace-runs",
            type=click.IntRange(min=0),
            default=0,
            help="Write per-tick trace CSVs for the first N runs of each cell",
        ),
        click.option(
            "--progress-json",
            is_flag=True,
            help="Report progress as JSON lines on stderr instead of a bar",
        ),
        click.option("--dt", type=float, help="Time step in seconds"),
        click.option("--max-time", type=float, help="Run time limit in seconds"),
        click.option(
            "--exit-headway",
            type=float,
            help="Seconds between consecutive evacuees at one door",
        ),
        click.option("--verbose", "-v", is_flag=True, help="Verbose output"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


@click.group(invoke_without_command=True)
@click.option("--version", is_flag=True, help="Show version and exit")
@click.pass_context
def main(ctx, version):
    """deplane - Monte Carlo evacuation simulator for a 777-200 cabin."""
    if version:
        from . import __version__

        click.echo(f"deplane {__version__}")
        return

    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@main.command()
@click.option(
    "--baseline",
    is_flag=True,
    help="Certification-style trial: occupancy 1.0, bag-grab 0.0, 100 runs",
)
@click.option("--occupancy", type=float, help="Seat occupancy fraction (0, 1]")
@click.option("--bag-grab", type=float, help="Bag-grab probability [0, 1]")
@simulation_options
def run(
    baseline,
    occupancy,
    bag_grab,
    runs,
    seed,
    scenario_file,
    layout_path,
    bag_mode,
    workers,
    output_dir,
    trace_runs,
    progress_json,
    dt,
    max_time,
    exit_headway,
    verbose,
):
    """Simulate a single cell."""
    configure_logging(verbose)

    if baseline:
        if occupancy is not None or bag_grab is not None:
            click.echo(
                "❌ --baseline cannot be combined with --occupancy or --bag-grab",
                err=True,
            )
            sys.exit(1)
        occupancy, bag_grab = 1.0, 0.0
        runs = runs if runs is not None else 100

    config = build_config(
        output_dir, workers, progress_json, trace_runs, dt, max_time, exit_headway,
        verbose, layout_path,
    )
    try:
        scenario = build_scenario(
            config, scenario_file, occupancy, bag_grab, runs, seed, bag_mode,
            {"dt": dt, "max_time": max_time, "exit_headway": exit_headway},
        )
    except (LayoutError, InvalidScenario) as e:
        click.echo(f"❌ {e}", err=True)
        sys.exit(1)

    errors = validate_scenario(scenario)
    if errors:
        for error in errors:
            click.echo(f"❌ {error}", err=True)
        sys.exit(1)

    execute("run", SweepGrid.single(scenario), config)


@main.command()
@click.option(
    "--occupancy",
    type=LEVELS,
    default="1.0",
    show_default=True,
    help="Occupancy levels: start:stop:step, a,b,c or a single value",
)
@click.option(
    "--bag-grab",
    type=LEVELS,
    default="0.0:1.0:0.1",
    show_default=True,
    help="Bag-grab levels: start:stop:step, a,b,c or a single value",
)
@simulation_options
def sweep(
    occupancy,
    bag_grab,
    runs,
    seed,
    scenario_file,
    layout_path,
    bag_mode,
    workers,
    output_dir,
    trace_runs,
    progress_json,
    dt,
    max_time,
    exit_headway,
    verbose,
):
    """Simulate an occupancy x bag-grab grid."""
    configure_logging(verbose)

    config = build_config(
        output_dir, workers, progress_json, trace_runs, dt, max_time, exit_headway,
        verbose, layout_path,
    )
    try:
        base = build_scenario(
            config, scenario_file, None, None, runs, seed, bag_mode,
            {"dt": dt, "max_time": max_time, "exit_headway": exit_headway},
        )
    except (LayoutError, InvalidScenario) as e:
        click.echo(f"❌ {e}", err=True)
        sys.exit(1)

    grid = SweepGrid(occupancies=occupancy, bag_grabs=bag_grab, base=base)
    execute("sweep", grid, config)


@main.command()
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--output-dir",
    "-o",
    type=click.Path(file_okay=False),
    default="deplane-rerun",
    show_default=True,
    help="Bundle directory",
)
@click.option(
    "--workers",
    "-j",
    type=click.IntRange(min=1),
    default=default_workers,
    show_default="available CPUs",
    help="Worker processes",
)
@click.option("--progress-json", is_flag=True, help="Report progress as JSON lines")
@click.option("--verbose", "-v", is_flag=True, help="Verbose output")
def rerun(manifest_path, output_dir, workers, progress_json, verbose):
    """Regenerate a bundle from its manifest."""
    configure_logging(verbose)

    try:
        manifest = load_manifest(manifest_path)
        grid = grid_from_manifest(manifest)
        violations = validate_layout(grid.base.layout)
        if violations:
            raise LayoutError("; ".join(violations))
    except (BundleError, LayoutError, InvalidScenario) as e:
        click.echo(f"❌ Cannot rerun {manifest_path}: {e}", err=True)
        sys.exit(1)

    output = manifest.get("output", {})
    config = get_default_config()
    config.sim = grid.base.sim
    config.output.output_dir = Path(output_dir)
    config.output.bin_width = float(output.get("bin_width", config.output.bin_width))
    config.output.trace_runs = int(output.get("trace_runs", 0))
    config.runner.workers = workers
    config.runner.progress_json = progress_json
    config.verbose = verbose

    execute(str(manifest.get("command", "run")), grid, config)


@main.group()
def layout():
    """Emit or check cabin layout files."""
    pass


@layout.command()
@click.option(
    "--output",
    "-o",
    type=click.File("w"),
    default="-",
    help="Destination file (default: stdout)",
)
def emit(output):
    """Write the reference 777-200 layout as JSON."""
    try:
        cabin = build_reference_layout()
    except LayoutError as e:
        click.echo(f"❌ {e}", err=True)
        sys.exit(1)
    dump_layout(cabin, output)
    if output.name != "<stdout>":
        click.echo(f"✅ Wrote {len(cabin.seats)}-seat layout to: {output.name}", err=True)


@layout.command()
@click.argument("layout_file", type=click.File("r"))
def check(layout_file):
    """Validate a layout file ('-' reads stdin)."""
    try:
        cabin = load_layout(layout_file)
    except LayoutError as e:
        click.echo(f"❌ {e}", err=True)
        sys.exit(1)

    violations = validate_layout(cabin)
    if violations:
        click.echo(f"❌ {len(violations)} violation(s):", err=True)
        for violation in violations:
            click.echo(f"  • {violation}", err=True)
        sys.exit(1)

    counts = ", ".join(f"zone {z}: {n}" for z, n in zone_counts(cabin).items())
    click.echo(
        f"✅ Layout is valid: {len(cabin.seats)} seats, {len(cabin.regions)} regions, "
        f"{len(cabin.portals)} portals ({counts})"
    )


if __name__ == "__main__":
    main()
