import numpy as np
import pytest

from etc_explore import io
from etc_explore.explore import BaselineRecord, GridSets, IterationRecord
from etc_explore.indices import NEG_SENTINEL
from etc_explore.simulate import Trajectory


def small_grid():
    axes = [np.linspace(0.0, 1.0, 3), np.linspace(0.0, 1.0, 3)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    in_s = np.array([1, 1, 0, 1, 0, 0, 0, 0, 0], dtype=bool)
    in_t = np.array([1, 0, 0, 1, 0, 0, 0, 0, 0], dtype=bool)
    return GridSets(axes=axes, points=points, in_theta_s=in_s, in_theta=in_t)


def test_float_serialization_round_trips():
    rng = np.random.default_rng(0)
    for x in rng.uniform(-1e3, 1e3, size=200):
        assert float(format(x, ".17g")) == x


def test_sentinel_written_verbatim(tmp_path):
    rec = BaselineRecord(j=1, theta=(0.5, 0.5), y_g=NEG_SENTINEL, y_s=-1e18)
    path = tmp_path / "baseline_log.csv"
    io.write_baseline_log(path, [rec])
    text = path.read_text().splitlines()
    assert text[0] == io.BASELINE_LOG_HEADER
    assert text[1] == "1,0.5,0.5,-1e+18,-1e+18"


def test_grid_sets_round_trip(tmp_path):
    grid = small_grid()
    path = tmp_path / "grid_sets.csv"
    io.write_grid_sets(path, grid)
    pts, in_s, in_t = io.read_grid_sets(path)
    assert np.array_equal(pts, grid.points)
    assert np.array_equal(in_s, grid.in_theta_s)
    assert np.array_equal(in_t, grid.in_theta)
    header = path.read_text().splitlines()[0]
    assert header == "theta1,theta2,in_theta_s,in_theta"


def test_run_log_header_and_read_column(tmp_path):
    recs = [
        IterationRecord(j, (0.1 * j, 0.2), 0.9, 0.1 * j - 0.05, 3.0, 4.0, 5 + j, j, 0.01)
        for j in range(1, 4)
    ]
    path = tmp_path / "run_log.csv"
    io.write_run_log(path, recs)
    header = path.read_text().splitlines()[0]
    assert header == "j,theta1,theta2,y_g,y_s,beta_g,beta_s,size_theta_s,size_theta,acq_value"
    ys = io.read_log_column(path, "y_s")
    assert ys == pytest.approx([0.05, 0.15, 0.25])
    with pytest.raises(ValueError, match="no column"):
        io.read_log_column(path, "nope")


def make_traj(n=11, events=(0, 4, 9)):
    flags = np.zeros(n, dtype=bool)
    flags[list(events)] = True
    return Trajectory(
        times=np.linspace(0.0, 1.0, n),
        states=np.arange(2 * n, dtype=float).reshape(n, 2),
        inputs=np.arange(n, dtype=float).reshape(n, 1),
        event_flags=flags,
    )


def test_trajectory_decimation_keeps_last_row_and_event_count(tmp_path):
    traj = make_traj()
    path = tmp_path / "traj.csv"
    io.write_trajectory(path, traj, decimation=4)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x1,x2,u,event"
    rows = [line.split(",") for line in lines[1:]]
    assert [r[0] for r in rows] == ["0", "0.40000000000000002", "0.80000000000000004", "1"]
    # aggregated event flags preserve the total count
    assert sum(int(r[-1]) for r in rows) == traj.num_events


def test_trajectory_no_decimation(tmp_path):
    traj = make_traj()
    path = tmp_path / "traj.csv"
    io.write_trajectory(path, traj, decimation=1)
    lines = path.read_text().splitlines()
    assert len(lines) == 12
    flags = [int(line.split(",")[-1]) for line in lines[1:]]
    assert flags == [1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0]


def test_safety_series_with_and_without_baseline(tmp_path):
    alg = np.array([0.1, 0.2])
    base = np.array([0.3, -0.1, 0.2])
    p1 = tmp_path / "a.csv"
    io.write_safety_series(p1, alg)
    assert p1.read_text().splitlines()[0] == "j,y_s_algorithm"
    p2 = tmp_path / "b.csv"
    io.write_safety_series(p2, alg, base)
    lines = p2.read_text().splitlines()
    assert lines[0] == "j,y_s_algorithm,y_s_baseline"
    assert len(lines) == 4
    assert lines[3].startswith("3,,")  # algorithm column exhausted


def test_meta_round_trip(tmp_path):
    meta = {"seed": 3, "status": "compliant", "warnings": []}
    path = tmp_path / "run_meta.json"
    io.write_meta(path, meta)
    assert io.read_meta(path) == meta
