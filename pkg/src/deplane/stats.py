"""
Post-processing of run results: outlier filtering, per-cell summaries, binned
evacuation profiles and the occupancy x bag-grab heatmap.

Standard deviations are population values (divide by n) throughout.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .engine import RunResult, bins_for, cumulative_counts
from .montecarlo import BatchResult

logger = logging.getLogger(__name__)

SAFE_TET = 90.0  # certification limit, seconds
ALL_EXITS = "ALL"


class EmptyInput(Exception):
    """Raised when statistics are requested over no values"""

    pass


class NoCompletedRuns(Exception):
    """Raised when a cell has no completed run to summarize"""

    def __init__(
        self,
        message: str,
        occupancy: Optional[float] = None,
        bag_grab_p: Optional[float] = None,
    ):
        super().__init__(message)
        self.occupancy = occupancy
        self.bag_grab_p = bag_grab_p


@dataclass(frozen=True)
class CellSummary:
    occupancy: Optional[float]
    bag_grab_p: Optional[float]
    mean_tet: float
    sd_tet: float
    min_tet: float
    max_tet: float
    n_kept: int
    n_discarded: int
    n_incomplete: int
    kept_runs: Tuple[int, ...] = ()

    @property
    def safe(self) -> bool:
        return self.mean_tet <= SAFE_TET


@dataclass(frozen=True)
class EvacProfile:
    """Cumulative evacuations through one exit (or ALL) per time bin"""

    exit_id: str
    bin_width: float
    bin_starts: Tuple[float, ...]
    mean_cumulative: Tuple[float, ...]
    min_cumulative: Tuple[int, ...]
    max_cumulative: Tuple[int, ...]
    mean_clear: Optional[float]
    mean_pax: float


@dataclass(frozen=True)
class Heatmap:
    occupancies: Tuple[float, ...]
    bag_grabs: Tuple[float, ...]
    mean_tet: np.ndarray  # shape (len(occupancies), len(bag_grabs))
    safe: np.ndarray
    summaries: Tuple[Tuple[CellSummary, ...], ...]


def outlier_band(tets: Sequence[float]) -> Tuple[float, float]:
    """The mean +/- 2 sd band, widened by a relative 1e-9 for rounding"""
    values = np.asarray(tets, dtype=float)
    if values.size == 0:
        raise EmptyInput("No values to filter")
    mu = float(values.mean())
    sigma = float(values.std())
    slack = 1e-9 * max(1.0, abs(mu))
    return mu - 2.0 * sigma - slack, mu + 2.0 * sigma + slack


def filter_outliers(tets: Sequence[float]) -> Tuple[List[float], List[float]]:
    """
    Single-pass +/- 2 sd filter.

    Returns:
        (kept, discarded), each in input order

    Raises:
        EmptyInput: if tets is empty
    """
    lo, hi = outlier_band(tets)
    kept = [float(t) for t in tets if lo <= t <= hi]
    discarded = [float(t) for t in tets if not lo <= t <= hi]
    return kept, discarded


def summarize_cell(
    results: Sequence[RunResult],
    occupancy: Optional[float] = None,
    bag_grab_p: Optional[float] = None,
) -> CellSummary:
    """
    Table-style statistics over the completed, non-outlier runs of a cell.

    Raises:
        NoCompletedRuns: if no run completed
    """
    completed = [r for r in results if r.completed and r.tet is not None]
    n_incomplete = sum(1 for r in results if not r.completed)
    if not completed:
        raise NoCompletedRuns(
            f"No completed runs (occupancy {occupancy}, bag-grab {bag_grab_p})",
            occupancy,
            bag_grab_p,
        )

    lo, hi = outlier_band([r.tet for r in completed])
    kept = [r for r in completed if lo <= r.tet <= hi]
    tets = np.array([r.tet for r in kept], dtype=float)
    return CellSummary(
        occupancy=occupancy,
        bag_grab_p=bag_grab_p,
        mean_tet=float(tets.mean()),
        sd_tet=float(tets.std()),
        min_tet=float(tets.min()),
        max_tet=float(tets.max()),
        n_kept=len(kept),
        n_discarded=len(completed) - len(kept),
        n_incomplete=n_incomplete,
        kept_runs=tuple(r.run_index for r in kept),
    )


def kept_results(results: Sequence[RunResult], summary: CellSummary) -> List[RunResult]:
    keep = set(summary.kept_runs)
    return [r for r in results if r.completed and r.run_index in keep]


def _profile(
    exit_id: str,
    per_run_times: List[List[float]],
    per_run_clear: List[Optional[float]],
    bin_width: float,
    n_bins: int,
) -> EvacProfile:
    counts = np.array(
        [cumulative_counts(times, bin_width, n_bins) for times in per_run_times],
        dtype=float,
    ).reshape(len(per_run_times), n_bins)
    clears = [c for c in per_run_clear if c is not None]
    return EvacProfile(
        exit_id=exit_id,
        bin_width=bin_width,
        bin_starts=tuple(float(k * bin_width) for k in range(n_bins)),
        mean_cumulative=tuple(counts.mean(axis=0).tolist()),
        min_cumulative=tuple(int(v) for v in counts.min(axis=0)),
        max_cumulative=tuple(int(v) for v in counts.max(axis=0)),
        mean_clear=float(np.mean(clears)) if clears else None,
        mean_pax=float(counts[:, -1].mean()),
    )


def build_profiles(
    results: Sequence[RunResult], bin_width: float = 0.5
) -> List[EvacProfile]:
    """
    Mean cumulative evacuation count per exit and time bin across runs, plus
    an ALL profile over every exit.

    Bin k starts at k * bin_width and counts events at or before its start; the
    last bin start is the first one at or past the latest event of any run.
    """
    if not results:
        return []
    horizon = max((e.time for r in results for e in r.exit_events), default=0.0)
    n_bins = bins_for(horizon, bin_width)

    exit_ids = sorted(
        {e.exit_id for r in results for e in r.exit_events}
        | {e for r in results for e in r.assigned}
    )
    profiles = []
    for exit_id in exit_ids:
        per_run = [[e.time for e in r.exit_events if e.exit_id == exit_id] for r in results]
        clears = [r.per_exit_clear.get(exit_id) for r in results]
        profiles.append(_profile(exit_id, per_run, clears, bin_width, n_bins))

    everything = [[e.time for e in r.exit_events] for r in results]
    last = [max(times) if times else None for times in everything]
    profiles.append(_profile(ALL_EXITS, everything, last, bin_width, n_bins))
    return profiles


def build_heatmap(batch: BatchResult) -> Heatmap:
    """
    Mean TET for every (occupancy, bag-grab) cell, with the safe mask
    mean_tet <= 90 s.

    Raises:
        NoCompletedRuns: for the first cell (in cell order) that cannot be
            summarized, carrying that cell's coordinates
    """
    grid = batch.grid
    shape = (len(grid.occupancies), len(grid.bag_grabs))
    means = np.zeros(shape)
    rows: List[List[CellSummary]] = [[] for _ in grid.occupancies]
    for cell_result in batch.cells:
        cell = cell_result.cell
        if cell_result.error is not None:
            raise NoCompletedRuns(
                f"Cell at occupancy {cell.occupancy}, bag-grab {cell.bag_grab_p} "
                f"did not run: {cell_result.error}",
                cell.occupancy,
                cell.bag_grab_p,
            )
        summary = summarize_cell(cell_result.runs, cell.occupancy, cell.bag_grab_p)
        i, j = divmod(cell.index, shape[1])
        means[i, j] = summary.mean_tet
        rows[i].append(summary)
    return Heatmap(
        occupancies=tuple(grid.occupancies),
        bag_grabs=tuple(grid.bag_grabs),
        mean_tet=means,
        safe=means <= SAFE_TET,
        summaries=tuple(tuple(r) for r in rows),
    )


def summarize_batch(batch: BatchResult) -> Dict[int, CellSummary]:
    """Summaries of every cell that has at least one completed run"""
    summaries = {}
    for cell_result in batch.cells:
        cell = cell_result.cell
        try:
            summaries[cell.index] = summarize_cell(
                cell_result.runs, cell.occupancy, cell.bag_grab_p
            )
        except NoCompletedRuns as e:
            logger.warning("Cell %d not summarized: %s", cell.index, e)
    return summaries
