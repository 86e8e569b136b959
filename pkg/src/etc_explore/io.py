"""CSV and JSON persistence for runs.

All floats are serialized with 17 significant digits so a replayed run
reproduces files byte for byte. Booleans are written as 0/1.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .explore import BaselineRecord, GridSets, IterationRecord
from .simulate import Trajectory

__all__ = [
    "RUN_LOG",
    "GRID_SETS",
    "BASELINE_LOG",
    "RUN_META",
    "BASELINE_META",
    "CONFIG_JSON",
    "VERIFY_REPORT",
    "write_run_log",
    "write_grid_sets",
    "write_grid_rows",
    "write_baseline_log",
    "write_trajectory",
    "write_meta",
    "read_meta",
    "read_grid_sets",
    "read_log_column",
    "write_verify_report",
    "write_safety_series",
    "write_fig3_samples",
]

RUN_LOG = "run_log.csv"
GRID_SETS = "grid_sets.csv"
BASELINE_LOG = "baseline_log.csv"
RUN_META = "run_meta.json"
BASELINE_META = "baseline_meta.json"
CONFIG_JSON = "config.json"
VERIFY_REPORT = "verify_report.csv"

RUN_LOG_HEADER = "j,theta1,theta2,y_g,y_s,beta_g,beta_s,size_theta_s,size_theta,acq_value"
GRID_SETS_HEADER = "theta1,theta2,in_theta_s,in_theta"
BASELINE_LOG_HEADER = "j,theta1,theta2,y_g,y_s"
VERIFY_REPORT_HEADER = "theta1,theta2,g_index,s_index,ok"


def _f(x: float) -> str:
    return format(float(x), ".17g")


def _write_lines(path, header: str, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_run_log(path, records: list[IterationRecord]) -> None:
    rows = (
        [
            str(r.j),
            _f(r.theta[0]),
            _f(r.theta[1]),
            _f(r.y_g),
            _f(r.y_s),
            _f(r.beta_g),
            _f(r.beta_s),
            str(r.size_theta_s),
            str(r.size_theta),
            _f(r.acq_value),
        ]
        for r in records
    )
    _write_lines(path, RUN_LOG_HEADER, rows)


def write_grid_sets(path, grid: GridSets) -> None:
    write_grid_rows(path, grid.points, grid.in_theta_s, grid.in_theta)


def write_grid_rows(path, points, in_theta_s, in_theta) -> None:
    rows = (
        [_f(p[0]), _f(p[1]), str(int(s)), str(int(t))]
        for p, s, t in zip(points, in_theta_s, in_theta)
    )
    _write_lines(path, GRID_SETS_HEADER, rows)


def write_baseline_log(path, records: list[BaselineRecord]) -> None:
    rows = (
        [str(r.j), _f(r.theta[0]), _f(r.theta[1]), _f(r.y_g), _f(r.y_s)]
        for r in records
    )
    _write_lines(path, BASELINE_LOG_HEADER, rows)


def write_trajectory(path, traj: Trajectory, decimation: int = 1) -> None:
    """Write a trajectory at every `decimation`-th grid point plus the final one.

    The event column of a kept row reports whether any transmission happened
    since the previous kept row, so the column sum still equals the total
    event count.
    """
    decimation = max(1, int(decimation))
    n = len(traj.times)
    keep = list(range(0, n, decimation))
    if keep[-1] != n - 1:
        keep.append(n - 1)
    nx = traj.states.shape[1]
    nu = traj.inputs.shape[1]
    xcols = [f"x{i + 1}" for i in range(nx)]
    ucols = ["u"] if nu == 1 else [f"u{i + 1}" for i in range(nu)]
    header = ",".join(["t", *xcols, *ucols, "event"])

    def rows():
        prev = -1
        for i in keep:
            fired = bool(traj.event_flags[prev + 1 : i + 1].any())
            prev = i
            yield [
                _f(traj.times[i]),
                *(_f(v) for v in traj.states[i]),
                *(_f(v) for v in traj.inputs[i]),
                str(int(fired)),
            ]

    _write_lines(path, header, rows())


def write_meta(path, meta: dict) -> None:
    Path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def read_meta(path) -> dict:
    return json.loads(Path(path).read_text())


def read_grid_sets(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (points, in_theta_s, in_theta) from a grid_sets.csv file."""
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if raw.shape[1] != 4:
        raise ValueError(f"{path}: expected 4 columns, found {raw.shape[1]}")
    return raw[:, :2], raw[:, 2] != 0, raw[:, 3] != 0


def read_log_column(path, column: str) -> np.ndarray:
    """Read one named column from a headered CSV file."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    try:
        idx = header.index(column)
    except ValueError:
        raise ValueError(f"{path}: no column {column!r} in header {header}") from None
    return np.loadtxt(path, delimiter=",", skiprows=1, usecols=idx, ndmin=1)


def write_verify_report(path, rows_data) -> None:
    rows = (
        [_f(t1), _f(t2), _f(g), _f(s), str(int(ok))]
        for (t1, t2, g, s, ok) in rows_data
    )
    _write_lines(path, VERIFY_REPORT_HEADER, rows)


def write_safety_series(path, y_s_algorithm: np.ndarray, y_s_baseline=None) -> None:
    if y_s_baseline is None:
        header = "j,y_s_algorithm"
        rows = ([str(j + 1), _f(v)] for j, v in enumerate(y_s_algorithm))
    else:
        header = "j,y_s_algorithm,y_s_baseline"
        n = max(len(y_s_algorithm), len(y_s_baseline))
        rows = (
            [
                str(j + 1),
                _f(y_s_algorithm[j]) if j < len(y_s_algorithm) else "",
                _f(y_s_baseline[j]) if j < len(y_s_baseline) else "",
            ]
            for j in range(n)
        )
    _write_lines(path, header, rows)


def write_fig3_samples(path, rows_data) -> None:
    header = "sample,theta1,theta2,g_index,s_index,peak_magnitude"
    rows = (
        [str(i), _f(t1), _f(t2), _f(g), _f(s), _f(m)]
        for (i, t1, t2, g, s, m) in rows_data
    )
    _write_lines(path, header, rows)
