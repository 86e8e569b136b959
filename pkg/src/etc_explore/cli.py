"""Command-line interface.

Subcommands
-----------
explore   run the safe exploration and write the run bundle
baseline  run the unrestricted random search into the same bundle layout
verify    re-simulate every certified grid point of a finished run
plotdata  emit figure data files and rendered figures for a finished run

Exit codes: 0 success / compliant, 1 configuration or numerical error,
2 a safety observation during exploration was non-positive, 3 verification
found a certified point that fails one of the specifications.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import (
    ConfigError,
    apply_overrides,
    build_config,
    config_hash,
    load_config_dict,
    write_config_json,
)
from .explore import (
    AssumptionViolatedError,
    STATUS_COMPLIANT,
    explore,
    make_grid,
    measure_indices,
    random_search,
    sample_from_cells,
)
from .gp import GpFitError
from .plots import render_parameter_space, render_safety_series, render_trajectories

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2
EXIT_VERIFY_FAIL = 3

FIG3_SAMPLES = 100


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="TOML or JSON configuration file")
    parser.add_argument("--out", required=True, help="output directory for the run bundle")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--grid-res", type=int, default=None, help="override grid resolution per dimension")
    parser.add_argument("--horizon", type=float, default=None, help="override the episode horizon [s]")
    parser.add_argument("--dt", type=float, default=None, help="override the integration step [s]")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etc-explore",
        description="Safe exploration of event-triggered control parameters",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_options(sub.add_parser("explore", help="run the safe exploration"))
    _add_run_options(sub.add_parser("baseline", help="run the random-search baseline"))
    p_verify = sub.add_parser("verify", help="audit the certified set of a finished run")
    p_verify.add_argument("run_dir", help="directory written by the explore command")
    p_plot = sub.add_parser("plotdata", help="write figure data and rendered figures")
    p_plot.add_argument("run_dir", help="directory written by the explore command")
    return parser


def _load_run_config(args):
    raw = load_config_dict(args.config)
    raw = apply_overrides(
        raw, seed=args.seed, grid_res=args.grid_res, horizon=args.horizon, dt=args.dt
    )
    return raw, build_config(raw)


def _trajectory_hook(out: Path, decimation: int):
    tdir = out / "trajectories"

    def hook(phase, index, theta, traj):
        io.write_trajectory(tdir / f"{phase}_{index:04d}.csv", traj, decimation)

    return hook


def cmd_explore(args) -> int:
    raw, cfg = _load_run_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_config_json(raw, out / io.CONFIG_JSON)
    hook = _trajectory_hook(out, cfg.trajectory_decimation) if cfg.dump_trajectories else None
    result = explore(cfg, episode_hook=hook)
    io.write_run_log(out / io.RUN_LOG, result.records)
    io.write_grid_sets(out / io.GRID_SETS, result.grid)
    n_violations = sum(1 for r in result.records if r.y_s <= 0)
    io.write_meta(
        out / io.RUN_META,
        {
            "command": "explore",
            "seed": cfg.seed,
            "config_hash": config_hash(raw),
            "status": result.status,
            "n_violations": n_violations,
            "size_theta_s": result.grid.size_theta_s,
            "size_theta": result.grid.size_theta,
            "warnings": result.warnings,
        },
    )
    print(
        f"status={result.status} iterations={len(result.records)} "
        f"size_theta_s={result.grid.size_theta_s} size_theta={result.grid.size_theta} "
        f"violations={n_violations}"
    )
    if result.status != STATUS_COMPLIANT:
        print("safety specification was violated during exploration", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_baseline(args) -> int:
    raw, cfg = _load_run_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not (out / io.CONFIG_JSON).exists():
        write_config_json(raw, out / io.CONFIG_JSON)
    hook = _trajectory_hook(out, cfg.trajectory_decimation) if cfg.dump_trajectories else None
    records = random_search(cfg, episode_hook=hook)
    io.write_baseline_log(out / io.BASELINE_LOG, records)
    n_violations = sum(1 for r in records if r.y_s <= 0)
    io.write_meta(
        out / io.BASELINE_META,
        {
            "command": "baseline",
            "seed": cfg.seed,
            "config_hash": config_hash(raw),
            "n_violations": n_violations,
        },
    )
    print(f"baseline iterations={len(records)} violations={n_violations}")
    return EXIT_OK


def cmd_verify(args) -> int:
    run_dir = Path(args.run_dir)
    grid_path = run_dir / io.GRID_SETS
    config_path = run_dir / io.CONFIG_JSON
    if not grid_path.is_file() or not config_path.is_file():
        print(f"error: {run_dir} is not a run directory (missing "
              f"{io.GRID_SETS} or {io.CONFIG_JSON})", file=sys.stderr)
        return EXIT_ERROR
    cfg = build_config(load_config_dict(config_path))
    points, _, in_theta = io.read_grid_sets(grid_path)
    selected = points[in_theta]
    rows = []
    offenders = []
    for theta in selected:
        g, s, _ = measure_indices(cfg, theta)
        ok = g > 0 and s > 0
        rows.append((theta[0], theta[1], g, s, ok))
        if not ok:
            offenders.append((theta, g, s))
    io.write_verify_report(run_dir / io.VERIFY_REPORT, rows)
    if len(selected) == 0:
        print("certified set is empty; nothing to verify (vacuously sound)")
        return EXIT_OK
    if offenders:
        print(f"{len(offenders)} certified point(s) fail re-simulation:", file=sys.stderr)
        for theta, g, s in offenders:
            print(
                f"  theta=({theta[0]:.6g}, {theta[1]:.6g}) "
                f"convergence={g:.6g} safety={s:.6g}",
                file=sys.stderr,
            )
        return EXIT_VERIFY_FAIL
    print(f"all {len(selected)} certified points re-simulate with positive indices")
    return EXIT_OK


def cmd_plotdata(args) -> int:
    run_dir = Path(args.run_dir)
    needed = [run_dir / io.GRID_SETS, run_dir / io.CONFIG_JSON, run_dir / io.RUN_LOG]
    missing = [p.name for p in needed if not p.is_file()]
    if missing:
        print(f"error: missing input file(s) in {run_dir}: {', '.join(missing)}", file=sys.stderr)
        return EXIT_ERROR
    cfg = build_config(load_config_dict(run_dir / io.CONFIG_JSON))
    points, in_theta_s, in_theta = io.read_grid_sets(run_dir / io.GRID_SETS)
    figures = run_dir / "figures"

    # parameter-space raster
    io.write_grid_rows(run_dir / "fig2_parameter_space.csv", points, in_theta_s, in_theta)
    render_parameter_space(points, in_theta_s, in_theta, figures / "fig2_parameter_space.png")

    # trajectories sampled from the certified set
    grid = make_grid(cfg)
    if in_theta.any():
        rng = np.random.default_rng([cfg.seed, 1])
        samples = sample_from_cells(grid, in_theta, FIG3_SAMPLES, rng)
        sample_rows = []
        rendered = []
        tdir = run_dir / "trajectories"
        for i, theta in enumerate(samples):
            g, s, traj = measure_indices(cfg, theta)
            if cfg.safety.mode == "component":
                peak = float(np.max(np.abs(traj.states[:, cfg.safety.component])))
            else:
                peak = float(np.max(np.linalg.norm(traj.states, axis=1)))
            sample_rows.append((i, theta[0], theta[1], g, s, peak))
            io.write_trajectory(tdir / f"fig3_traj_{i:03d}.csv", traj, cfg.trajectory_decimation)
            rendered.append((traj.times, traj.states))
        io.write_fig3_samples(run_dir / "fig3_samples.csv", sample_rows)
        component = cfg.safety.component if cfg.safety.mode == "component" else 1
        render_trajectories(rendered, cfg.safety.bound, component, figures / "fig3_trajectories.png")
    else:
        io.write_fig3_samples(run_dir / "fig3_samples.csv", [])
        print("certified set is empty; no trajectories sampled")

    # per-iteration safety series
    y_s_alg = io.read_log_column(run_dir / io.RUN_LOG, "y_s")
    baseline_path = run_dir / io.BASELINE_LOG
    y_s_base = io.read_log_column(baseline_path, "y_s") if baseline_path.is_file() else None
    io.write_safety_series(run_dir / "fig4_safety_series.csv", y_s_alg, y_s_base)
    render_safety_series(y_s_alg, y_s_base, figures / "fig4_safety_series.png")
    print(f"figure data and renderings written under {run_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {
        "explore": cmd_explore,
        "baseline": cmd_baseline,
        "verify": cmd_verify,
        "plotdata": cmd_plotdata,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, AssumptionViolatedError, GpFitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
