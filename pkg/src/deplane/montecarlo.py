"""
Deterministic batch execution of seeded runs over a grid of cells.

Run seeds are derived from the master seed and the (cell, run) indices, so a
batch gives the same results whatever the worker count or completion order.

Seed derivation, bit-exact (all arithmetic modulo 2**64):

    fmix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
                z = (z ^ (z >> 27)) * 0x94D049BB133111EB
                return z ^ (z >> 31)

    derive_seed(master, cell, run) =
        fmix64(fmix64(master + 0x9E3779B97F4A7C15)
               ^ ((cell & 0xFFFFFFFF) << 32 | (run & 0xFFFFFFFF)))
"""

import logging
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from .cabin import CabinLayout
from .config import SimConfig
from .engine import RunResult, run
from .scenario import Scenario, populate, validate_scenario

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
LEVEL_EPS = 1e-9


def fmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, cell: int, run_index: int) -> int:
    """64-bit seed of one run; injective in (cell, run) below 2**32 each"""
    key = ((cell & 0xFFFFFFFF) << 32) | (run_index & 0xFFFFFFFF)
    return fmix64(fmix64((master + GOLDEN_GAMMA) & MASK64) ^ key)


@dataclass(frozen=True)
class Cell:
    index: int
    occupancy: float
    bag_grab_p: float


@dataclass(frozen=True)
class SweepGrid:
    """Occupancy x bag-grab levels around a base scenario"""

    occupancies: Tuple[float, ...]
    bag_grabs: Tuple[float, ...]
    base: Scenario
    n_runs: Optional[int] = None  # None: the base scenario's run count

    @classmethod
    def single(cls, scenario: Scenario) -> "SweepGrid":
        return cls((scenario.occupancy,), (scenario.bag_grab_p,), scenario)

    @property
    def runs_per_cell(self) -> int:
        return self.n_runs if self.n_runs is not None else self.base.n_runs

    @property
    def cells(self) -> List[Cell]:
        """Cells in occupancy-major order"""
        return [
            Cell(i * len(self.bag_grabs) + j, occ, bag)
            for i, occ in enumerate(self.occupancies)
            for j, bag in enumerate(self.bag_grabs)
        ]

    def scenario_for(self, cell: Cell) -> Scenario:
        return self.base.with_cell(cell.occupancy, cell.bag_grab_p)


def _increasing(levels: Sequence[float]) -> bool:
    return all(b > a + LEVEL_EPS for a, b in zip(levels, levels[1:]))


def validate_grid(grid: SweepGrid) -> List[str]:
    """Validate grid levels and return list of errors"""
    errors = []
    for name, levels, lo_open in (
        ("occupancy", grid.occupancies, True),
        ("bag-grab", grid.bag_grabs, False),
    ):
        if not levels:
            errors.append(f"No {name} levels given")
            continue
        if not _increasing(levels):
            errors.append(f"{name} levels must be strictly increasing")
        low = min(levels)
        if (lo_open and low <= 0) or (not lo_open and low < 0) or max(levels) > 1:
            bounds = "(0, 1]" if lo_open else "[0, 1]"
            errors.append(f"{name} levels must lie in {bounds}")
    if grid.runs_per_cell < 1:
        errors.append("At least one run per cell is required")
    return errors


@dataclass
class CellResult:
    cell: Cell
    runs: List[RunResult] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def n_incomplete(self) -> int:
        return sum(1 for r in self.runs if not r.completed)


@dataclass
class BatchResult:
    grid: SweepGrid
    cells: List[CellResult]

    @property
    def errors(self) -> List[Tuple[Cell, str]]:
        return [(c.cell, c.error) for c in self.cells if c.error is not None]

    @property
    def n_runs(self) -> int:
        return sum(len(c.runs) for c in self.cells)


@dataclass(frozen=True)
class RunTask:
    cell_index: int
    run_index: int
    seed: int
    occupancy: float
    bag_grab_p: float
    bag_mode: str
    sim: SimConfig
    trace_path: Optional[str] = None


_worker_layout: Optional[CabinLayout] = None


def _init_worker(layout: CabinLayout) -> None:
    global _worker_layout
    _worker_layout = layout


def simulate(layout: CabinLayout, task: RunTask) -> RunResult:
    """Populate and run one seeded run; the only entry point workers use"""
    rng = np.random.default_rng(task.seed)
    scenario = Scenario(
        layout=layout,
        occupancy=task.occupancy,
        bag_grab_p=task.bag_grab_p,
        n_runs=1,
        master_seed=0,
        sim=task.sim,
        bag_mode=task.bag_mode,
    )
    agents = populate(scenario, rng)
    return run(
        layout,
        agents,
        task.sim,
        rng,
        run_index=task.run_index,
        seed=task.seed,
        trace_path=task.trace_path,
    )


def _simulate_in_worker(task: RunTask) -> RunResult:
    return simulate(_worker_layout, task)


def run_batch(
    grid: SweepGrid,
    *,
    workers: int = 1,
    progress: bool = True,
    trace_dir: Optional[Union[str, Path]] = None,
    trace_runs: int = 0,
    on_cell_done: Optional[Callable[[int, int, int], None]] = None,
) -> BatchResult:
    """
    Execute every run of every cell.

    Work is dispatched one run at a time. Results land in slots addressed by
    (cell, run) so the BatchResult is independent of scheduling. A cell whose
    scenario is invalid records the error and yields no runs; the other cells
    still execute.

    Args:
        grid: cells and base scenario
        workers: process count; 1 runs inline
        progress: show a tqdm bar on stderr
        trace_dir: where trace CSVs go (needed when trace_runs > 0)
        trace_runs: trace the first N runs of each cell
        on_cell_done: called as (cells_done, cells_total, runs_done) whenever a
            cell finishes
    """
    base = grid.base.resolved()
    layout = base.layout
    cells = grid.cells
    n_runs = grid.runs_per_cell
    results = [CellResult(cell) for cell in cells]

    tasks: List[RunTask] = []
    for cell, slot in zip(cells, results):
        scenario = grid.scenario_for(cell)
        errors = validate_scenario(scenario)
        if errors:
            slot.error = "; ".join(errors)
            logger.warning(
                "Skipping cell %d (occupancy %.2f, bag-grab %.2f): %s",
                cell.index,
                cell.occupancy,
                cell.bag_grab_p,
                slot.error,
            )
            continue
        slot.runs = [None] * n_runs  # type: ignore[list-item]
        for run_index in range(n_runs):
            trace_path = None
            if trace_dir is not None and run_index < trace_runs:
                trace_path = str(
                    Path(trace_dir) / f"cell{cell.index:03d}_run{run_index:03d}.csv"
                )
            tasks.append(
                RunTask(
                    cell_index=cell.index,
                    run_index=run_index,
                    seed=derive_seed(base.master_seed, cell.index, run_index),
                    occupancy=cell.occupancy,
                    bag_grab_p=cell.bag_grab_p,
                    bag_mode=base.bag_mode,
                    sim=base.sim,
                    trace_path=trace_path,
                )
            )

    if trace_dir is not None and trace_runs > 0:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)

    remaining = {slot.cell.index: n_runs for slot in results if slot.error is None}
    cells_done = [len(cells) - len(remaining)]
    runs_done = [0]

    def store(task: RunTask, result: RunResult) -> None:
        results[task.cell_index].runs[task.run_index] = result
        runs_done[0] += 1
        remaining[task.cell_index] -= 1
        if remaining[task.cell_index] == 0:
            cells_done[0] += 1
            if on_cell_done is not None:
                on_cell_done(cells_done[0], len(cells), runs_done[0])

    bar = tqdm(
        total=len(tasks),
        desc="Simulating",
        unit="run",
        disable=not progress,
        file=sys.stderr,
    )
    with bar:
        if workers <= 1 or len(tasks) <= 1:
            for task in tasks:
                store(task, simulate(layout, task))
                bar.update(1)
        else:
            with ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker, initargs=(layout,)
            ) as pool:
                futures = {pool.submit(_simulate_in_worker, t): t for t in tasks}
                for future in as_completed(futures):
                    store(futures[future], future.result())
                    bar.update(1)

    for slot in results:
        if slot.error is None and slot.n_incomplete:
            logger.info(
                "Cell %d: %d of %d runs hit max_time",
                slot.cell.index,
                slot.n_incomplete,
                len(slot.runs),
            )

    return BatchResult(grid=grid, cells=results)

