"""
Result bundles: fixed-schema CSV files plus a manifest that is enough to
regenerate every file byte for byte.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Union

import pandas as pd

from . import __version__
from .cabin import CabinLayout, layout_from_dict, layout_to_dict
from .montecarlo import BatchResult, SweepGrid
from .scenario import scenario_from_dict, scenario_to_dict
from .stats import (
    build_heatmap,
    build_profiles,
    kept_results,
    summarize_batch,
)

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.2f"
MANIFEST_NAME = "manifest.json"

SUMMARY_COLUMNS = [
    "bag_grab_pct",
    "mean_tet",
    "sd_tet",
    "min_tet",
    "max_tet",
    "occupancy",
    "n_kept",
    "n_discarded",
    "n_incomplete",
]
RUNS_COLUMNS = ["cell_id", "run_index", "seed", "tet", "kept_flag", "incomplete_flag"]
EXITS_COLUMNS = ["cell_id", "run_index", "agent_id", "exit_id", "time"]
PROFILES_COLUMNS = ["cell_id", "exit_id", "bin_start", "mean_cumulative"]
BANDS_COLUMNS = ["cell_id", "exit_id", "bin_start", "min_cumulative", "max_cumulative"]
CLEARS_COLUMNS = ["cell_id", "exit_id", "mean_clear", "mean_pax"]
HEATMAP_COLUMNS = ["occupancy", "bag_grab", "mean_tet", "sd_tet", "n_kept", "safe_flag"]


class BundleError(Exception):
    """Custom exception for unreadable or inconsistent bundles"""

    pass


def write_csv(rows: Sequence[Sequence[Any]], columns: List[str], path: Path) -> None:
    frame = pd.DataFrame(list(rows), columns=columns)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def build_manifest(
    command: str,
    grid: SweepGrid,
    layout: CabinLayout,
    bin_width: float,
    trace_runs: int = 0,
) -> Dict[str, Any]:
    """Everything needed to regenerate a bundle; no timestamps or host data"""
    return {
        "version": __version__,
        "command": command,
        "grid": {
            "occupancies": list(grid.occupancies),
            "bag_grabs": list(grid.bag_grabs),
            "n_runs": grid.runs_per_cell,
        },
        "scenario": scenario_to_dict(grid.base),
        "output": {"bin_width": bin_width, "trace_runs": trace_runs},
        "layout": layout_to_dict(layout),
    }


def grid_from_manifest(manifest: Mapping[str, Any]) -> SweepGrid:
    try:
        layout = layout_from_dict(manifest["layout"])
        base = scenario_from_dict(manifest["scenario"], layout)
        grid = manifest["grid"]
        return SweepGrid(
            occupancies=tuple(float(v) for v in grid["occupancies"]),
            bag_grabs=tuple(float(v) for v in grid["bag_grabs"]),
            base=base,
            n_runs=int(grid["n_runs"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise BundleError(f"Manifest is missing or has malformed fields: {e!r}")


def load_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise BundleError(f"Manifest is not valid JSON: {e}")
    except OSError as e:
        raise BundleError(f"Cannot read manifest: {e}")
    if not isinstance(data, dict):
        raise BundleError("Manifest must contain a JSON object")
    return data


def write_manifest(manifest: Mapping[str, Any], path: Path) -> None:
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def write_bundle(
    batch: BatchResult,
    output_dir: Union[str, Path],
    manifest: Mapping[str, Any],
    bin_width: float = 0.5,
) -> List[Path]:
    """
    Write the CSV files and manifest of a finished batch.

    Run-level files are written first; the heatmap is built last so that a cell
    without completed runs still leaves the raw run data on disk before
    NoCompletedRuns propagates.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    def emit(name: str, rows, columns) -> None:
        path = out / name
        write_csv(rows, columns, path)
        written.append(path)

    write_manifest(manifest, out / MANIFEST_NAME)
    written.append(out / MANIFEST_NAME)

    summaries = summarize_batch(batch)

    runs_rows = []
    exits_rows = []
    for cell_result in batch.cells:
        cell_id = cell_result.cell.index
        kept = set(summaries[cell_id].kept_runs) if cell_id in summaries else set()
        for result in cell_result.runs:
            runs_rows.append(
                [
                    cell_id,
                    result.run_index,
                    str(result.seed),
                    result.tet,
                    int(result.run_index in kept),
                    int(not result.completed),
                ]
            )
            for event in result.exit_events:
                exits_rows.append(
                    [cell_id, result.run_index, event.agent_id, event.exit_id, event.time]
                )
    emit("runs.csv", runs_rows, RUNS_COLUMNS)
    emit("exits.csv", exits_rows, EXITS_COLUMNS)

    summary_rows = []
    profile_rows = []
    band_rows = []
    clear_rows = []
    for cell_result in batch.cells:
        cell_id = cell_result.cell.index
        if cell_id not in summaries:
            continue
        summary = summaries[cell_id]
        summary_rows.append(
            [
                summary.bag_grab_p * 100.0,
                summary.mean_tet,
                summary.sd_tet,
                summary.min_tet,
                summary.max_tet,
                summary.occupancy,
                summary.n_kept,
                summary.n_discarded,
                summary.n_incomplete,
            ]
        )
        for profile in build_profiles(kept_results(cell_result.runs, summary), bin_width):
            for start, mean, low, high in zip(
                profile.bin_starts,
                profile.mean_cumulative,
                profile.min_cumulative,
                profile.max_cumulative,
            ):
                profile_rows.append([cell_id, profile.exit_id, start, mean])
                band_rows.append([cell_id, profile.exit_id, start, low, high])
            clear_rows.append(
                [cell_id, profile.exit_id, profile.mean_clear, profile.mean_pax]
            )
    emit("summary.csv", summary_rows, SUMMARY_COLUMNS)
    emit("profiles.csv", profile_rows, PROFILES_COLUMNS)
    emit("bands.csv", band_rows, BANDS_COLUMNS)
    emit("clears.csv", clear_rows, CLEARS_COLUMNS)

    heatmap = build_heatmap(batch)
    heatmap_rows = []
    for row in heatmap.summaries:
        for summary in row:
            heatmap_rows.append(
                [
                    summary.occupancy,
                    summary.bag_grab_p,
                    summary.mean_tet,
                    summary.sd_tet,
                    summary.n_kept,
                    int(summary.safe),
                ]
            )
    emit("heatmap.csv", heatmap_rows, HEATMAP_COLUMNS)

    logger.debug("Wrote %d bundle files to %s", len(written), out)
    return written
