"""End-to-end acceptance checks for the pendulum study at desk scale.

Each test prints one PASS/FAIL line (run with `pytest -s` to see them all).
The desk-scale run is executed once through the real CLI and shared.
"""

import math
import time

import numpy as np
import pytest

from etc_explore import cli, io
from etc_explore.config import build_config, load_config_dict
from etc_explore.explore import make_grid, measure_indices, sample_from_cells
from etc_explore.gp import Dataset, KernelSpec, RkhsBoundWarning, confidence_width, fit, posterior_batch
from etc_explore.simulate import ControllerSpec, EtmSpec, make_plant, run_episode
from tests.conftest import oracle_posterior

DESK_CONFIG = "configs/paper_iv_desk.toml"
FULL_CONFIG = "configs/paper_iv.toml"


def report(number, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    return ok


@pytest.fixture(scope="session")
def desk_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance") / "desk"
    start = time.perf_counter()
    code = cli.main(["explore", "--config", DESK_CONFIG, "--out", str(out)])
    elapsed = time.perf_counter() - start
    return {"out": out, "exit_code": code, "elapsed": elapsed}


def test_criterion_1_safe_exploration(desk_run):
    y_s = io.read_log_column(desk_run["out"] / io.RUN_LOG, "y_s")
    ok = (
        desk_run["exit_code"] == 0
        and len(y_s) == 50
        and bool(np.all(y_s > 0.0))
        and desk_run["elapsed"] < 300.0
    )
    assert report(
        1,
        ok,
        f"exit={desk_run['exit_code']}, min y_s={y_s.min():.4f} over {len(y_s)} "
        f"iterations, runtime {desk_run['elapsed']:.0f}s",
    )


def test_criterion_2_soundness_of_certified_set(desk_run):
    run_dir = desk_run["out"]
    verify_code = cli.main(["verify", str(run_dir)])

    cfg = build_config(load_config_dict(run_dir / io.CONFIG_JSON))
    _, _, in_theta = io.read_grid_sets(run_dir / io.GRID_SETS)
    grid = make_grid(cfg)
    n_certified = int(in_theta.sum())
    peaks = []
    if n_certified:
        rng = np.random.default_rng([cfg.seed, 1])
        for theta in sample_from_cells(grid, in_theta, 100, rng):
            _, _, traj = measure_indices(cfg, theta)
            peaks.append(float(np.max(np.abs(traj.states[:, 1]))))
    ok = verify_code == 0 and n_certified > 0 and len(peaks) == 100 and max(peaks) < 0.25
    assert report(
        2,
        ok,
        f"verify exit={verify_code}, |certified set|={n_certified}, "
        f"max |x2| over 100 sampled parameters={max(peaks) if peaks else float('nan'):.4f}",
    )


def test_criterion_3_baseline_contrast(tmp_path):
    out = tmp_path / "baseline"
    code = cli.main(["baseline", "--config", FULL_CONFIG, "--out", str(out)])
    y_s = io.read_log_column(out / io.BASELINE_LOG, "y_s")
    violations = int(np.sum(y_s <= 0.0))
    # count pre-computed by an independent enumeration of the same draws
    ok = code == 0 and len(y_s) == 100 and violations >= 1 and violations == 77
    assert report(3, ok, f"exit={code}, {violations}/100 safety violations (expected 77)")


def test_criterion_4_gp_posterior_against_dense_oracle():
    spec = KernelSpec((0.2, 0.2), signal_variance=1.0)
    worst = 0.0
    for n in (1, 2, 5, 20):
        rng = np.random.default_rng(1000 + n)
        x = rng.uniform(0.01, 1.0, size=(n, 2))
        y = rng.normal(0.0, 0.5, size=n)
        model = fit(spec, Dataset(x, y, noise_bound=0.01))
        for theta in rng.uniform(0.01, 1.0, size=(25, 2)):
            mean, var = posterior_batch(model, theta.reshape(1, -1))
            ref_mean, ref_var = oracle_posterior(spec, x, y, 0.01, model.jitter, theta)
            worst = max(worst, abs(mean[0] - ref_mean), abs(var[0] - max(ref_var, 0.0)))
    rng = np.random.default_rng(77)
    model = fit(spec, Dataset(rng.uniform(0.01, 1, (15, 2)), rng.normal(0, 0.5, 15), 0.01))
    _, var = posterior_batch(model, rng.uniform(0.01, 1.0, size=(10_000, 2)))
    bounds_ok = bool(np.all(var >= 0.0) and np.all(var <= spec.signal_variance + 1e-12))
    ok = worst < 1e-9 and bounds_ok
    assert report(
        4, ok, f"max oracle deviation {worst:.2e} (N in 1,2,5,20); "
        f"variance in [0, prior] on 10^4-point scan: {bounds_ok}"
    )


def test_criterion_5_confidence_width_formula():
    spec = KernelSpec((0.2, 0.2), signal_variance=1.0)
    worst = 0.0
    for n in (1, 10, 100):
        rng = np.random.default_rng(n)
        x = rng.uniform(0.01, 1.0, size=(n, 2))
        model = fit(spec, Dataset(x, np.zeros(n), noise_bound=0.01))
        worst = max(worst, abs(confidence_width(model, 2.0) - math.sqrt(4.0 + n)))
    one = KernelSpec((1.0,), signal_variance=1.0)
    loud = fit(one, Dataset([[0.5]], [10.0], noise_bound=0.0))
    with pytest.warns(RkhsBoundWarning):
        clamped = confidence_width(loud, 1.0)
    clamp_ok = abs(clamped - 1.0) < 1e-9
    ok = worst < 1e-12 and clamp_ok
    assert report(
        5, ok, f"zero-output deviation {worst:.2e} (N in 1,10,100); "
        f"clamp returns sqrt(N) with warning: {clamp_ok}"
    )


def test_criterion_6_plant_sanity():
    plant = make_plant("pendulum", [1.0, 0.0])
    gain = ControllerSpec([-1.08, -1.43])
    etm = EtmSpec(theta=(0.01, 0.01), decay_rate=0.1)
    traj = run_episode(plant, etm, gain, horizon=20.0, step=1e-3)
    final_norm = float(np.linalg.norm(traj.states[-1]))
    norm_ok = final_norm < 0.05

    fine = run_episode(plant, etm, gain, horizon=20.0, step=5e-4)
    step_dev = float(np.abs(traj.states[-1] - fine.states[-1]).max())
    step_ok = step_dev < 1e-3

    rest = run_episode(make_plant("pendulum", [0.0, 0.0]), etm, gain, horizon=5.0, step=1e-3)
    zero_ok = bool(np.all(rest.states == 0.0))

    report(6, norm_ok and step_ok and zero_ok,
           f"|x(20)|={final_norm:.4f} (<0.05: {norm_ok}); "
           f"step-halving deviation {step_dev:.2e} (<1e-3: {step_ok}); "
           f"zero initial state stays exactly zero: {zero_ok}")
    assert step_ok
    assert zero_ok
    assert norm_ok, (
        f"|x(20)| = {final_norm:.4f}; the closed loop's slow eigenvalue is about "
        f"-0.033, so the state cannot reach norm 0.05 by t=20 (it gets there "
        f"near t=73); see the continuous-control reference test in test_simulate"
    )


def test_criterion_7_set_monotonicity(desk_run):
    run_dir = desk_run["out"]
    size_s = io.read_log_column(run_dir / io.RUN_LOG, "size_theta_s").astype(int)
    size_t = io.read_log_column(run_dir / io.RUN_LOG, "size_theta").astype(int)
    monotone = bool(np.all(np.diff(size_s) >= 0) and np.all(np.diff(size_t) >= 0))
    _, in_s, in_t = io.read_grid_sets(run_dir / io.GRID_SETS)
    contained = bool(np.all(in_s[in_t]))
    ok = monotone and contained
    assert report(
        7, ok,
        f"sizes non-decreasing: {monotone} (final |safe|={size_s[-1]}, |target|={size_t[-1]}); "
        f"target within safe row-wise: {contained}",
    )


def test_criterion_8_determinism(desk_run, tmp_path):
    replay = tmp_path / "replay"
    code = cli.main(["explore", "--config", DESK_CONFIG, "--out", str(replay)])
    same_log = (desk_run["out"] / io.RUN_LOG).read_bytes() == (replay / io.RUN_LOG).read_bytes()
    same_grid = (desk_run["out"] / io.GRID_SETS).read_bytes() == (replay / io.GRID_SETS).read_bytes()
    ok = code == desk_run["exit_code"] and same_log and same_grid
    assert report(
        8, ok, f"replay exit={code}; run_log bytes equal: {same_log}; grid_sets bytes equal: {same_grid}"
    )
