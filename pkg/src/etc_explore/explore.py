"""Safe active exploration of the trigger-parameter space.

Two GP models estimate the convergence and safety indices as functions of
the trigger parameters. Starting from a parameter box known to be safe,
each iteration certifies grid points whose lower confidence bounds are
positive, accumulates them into the safe set and the target set, then
evaluates the not-yet-well-known safe point with the largest posterior
variance sum. Acquisition is restricted to the accumulated safe set, which
is what keeps the exploration itself safe.

A uniform random search over the full box is included as the contrast
case; it carries no safety restriction and is expected to violate the
safety specification on some draws.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gp import Dataset, GpModel, KernelSpec, RkhsBoundWarning, confidence_width, fit, posterior_batch
from .indices import ConvergenceSpec, SafetySpec, convergence_index, observe, safety_index
from .simulate import ControllerSpec, EtmSpec, PlantSpec, Trajectory, run_episode

__all__ = [
    "RunConfig",
    "GridSets",
    "IterationRecord",
    "BaselineRecord",
    "ExploreResult",
    "AssumptionViolatedError",
    "make_grid",
    "measure_indices",
    "initial_phase",
    "certified_sets",
    "max_variance_point",
    "explore",
    "random_search",
    "sample_from_cells",
]

THREADS_ENV = "ETC_EXPLORE_THREADS"

# Fixed evaluation chunk so results are bit-identical for any thread count.
_CHUNK = 512

STATUS_COMPLIANT = "compliant"
STATUS_VIOLATION = "safety_violation"


class AssumptionViolatedError(RuntimeError):
    """A safety observation in the supposedly safe initial box was non-positive."""


@dataclass(frozen=True)
class RunConfig:
    """Everything one exploration run depends on."""

    bounds: tuple[tuple[float, float], ...]
    grid_resolution: tuple[int, ...]
    initial_safe_bounds: tuple[tuple[float, float], ...]
    n_init: int
    n_exp: int
    kernel_g: KernelSpec
    kernel_s: KernelSpec
    rkhs_bound_g: float
    rkhs_bound_s: float
    noise_g: float
    noise_s: float
    plant: PlantSpec
    controller: ControllerSpec
    trigger_decay: float
    convergence: ConvergenceSpec
    safety: SafetySpec
    horizon: float
    dt: float
    seed: int
    trajectory_decimation: int = 20
    dump_trajectories: bool = False

    def __post_init__(self):
        if len(self.bounds) != len(self.initial_safe_bounds):
            raise ValueError("initial safe box and parameter box dimensions differ")
        if len(self.grid_resolution) != len(self.bounds):
            raise ValueError("grid resolution dimension does not match the parameter box")
        for (lo, hi), (ilo, ihi) in zip(self.bounds, self.initial_safe_bounds):
            if not lo < hi:
                raise ValueError(f"empty parameter interval [{lo}, {hi}]")
            if ilo < lo or ihi > hi or not ilo <= ihi:
                raise ValueError("initial safe box must lie inside the parameter box")
        if any(r < 2 for r in self.grid_resolution):
            raise ValueError("grid resolution must be at least 2 per dimension")
        if self.n_init < 1:
            raise ValueError("n_init must be at least 1")
        if self.n_exp < 0:
            raise ValueError("n_exp must be non-negative")
        if self.noise_g < 0 or self.noise_s < 0:
            raise ValueError("noise bounds must be non-negative")


@dataclass
class GridSets:
    """Discretized parameter box with accumulated set membership flags."""

    axes: list[np.ndarray]
    points: np.ndarray
    in_theta_s: np.ndarray
    in_theta: np.ndarray

    @property
    def size_theta_s(self) -> int:
        return int(self.in_theta_s.sum())

    @property
    def size_theta(self) -> int:
        return int(self.in_theta.sum())


@dataclass(frozen=True)
class IterationRecord:
    j: int
    theta: tuple[float, ...]
    y_g: float
    y_s: float
    beta_g: float
    beta_s: float
    size_theta_s: int
    size_theta: int
    acq_value: float


@dataclass(frozen=True)
class BaselineRecord:
    j: int
    theta: tuple[float, ...]
    y_g: float
    y_s: float


@dataclass
class ExploreResult:
    grid: GridSets
    records: list[IterationRecord]
    status: str
    warnings: list[str]
    data_g: Dataset
    data_s: Dataset


def make_grid(cfg: RunConfig) -> GridSets:
    """Uniform lattice over the box, safe set seeded with the initial box.

    Points are ordered with the first axis varying slowest, so the flat
    index is lexicographic; acquisition tie-breaking relies on this order.
    """
    axes = [np.linspace(lo, hi, r) for (lo, hi), r in zip(cfg.bounds, cfg.grid_resolution)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    seed_mask = np.ones(points.shape[0], dtype=bool)
    for d, (ilo, ihi) in enumerate(cfg.initial_safe_bounds):
        seed_mask &= (points[:, d] >= ilo - 1e-12) & (points[:, d] <= ihi + 1e-12)
    if not seed_mask.any():
        raise ValueError(
            "no grid point falls inside the initial safe box; refine the grid"
        )
    return GridSets(
        axes=axes,
        points=points,
        in_theta_s=seed_mask,
        in_theta=np.zeros(points.shape[0], dtype=bool),
    )


def measure_indices(cfg: RunConfig, theta) -> tuple[float, float, Trajectory]:
    """Run one episode at `theta` and compute both noise-free indices."""
    etm = EtmSpec(theta=(float(theta[0]), float(theta[1])), decay_rate=cfg.trigger_decay)
    traj = run_episode(cfg.plant, etm, cfg.controller, cfg.horizon, cfg.dt)
    return convergence_index(traj, cfg.convergence), safety_index(traj, cfg.safety), traj


def _grid_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _batch_posterior(model: GpModel, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Chunked posterior evaluation, optionally fanned out over threads."""
    chunks = [points[i : i + _CHUNK] for i in range(0, len(points), _CHUNK)]
    threads = _grid_threads()
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: posterior_batch(model, c), chunks))
    else:
        parts = [posterior_batch(model, c) for c in chunks]
    means = np.concatenate([p[0] for p in parts])
    variances = np.concatenate([p[1] for p in parts])
    return means, variances


def certified_sets(
    gp_g: GpModel,
    gp_s: GpModel,
    rkhs_bound_g: float,
    rkhs_bound_s: float,
    points: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Per-point certification by strict positivity of the lower confidence bound.

    Returns the newly certified safe mask, the mask additionally requiring a
    positive convergence bound, and the two confidence widths. The caller is
    responsible for accumulating the masks by union.
    """
    width_g = confidence_width(gp_g, rkhs_bound_g)
    width_s = confidence_width(gp_s, rkhs_bound_s)
    mean_s, var_s = _batch_posterior(gp_s, points)
    safe = mean_s - width_s * np.sqrt(var_s) > 0.0
    mean_g, var_g = _batch_posterior(gp_g, points)
    target = safe & (mean_g - width_g * np.sqrt(var_g) > 0.0)
    return safe, target, width_g, width_s


def max_variance_point(
    gp_g: GpModel, gp_s: GpModel, candidates: np.ndarray
) -> tuple[np.ndarray, float]:
    """Candidate with the largest posterior variance sum; first index wins ties."""
    if len(candidates) == 0:
        raise RuntimeError("acquisition called with an empty candidate set")
    _, var_g = _batch_posterior(gp_g, candidates)
    _, var_s = _batch_posterior(gp_s, candidates)
    score = var_g + var_s
    best = int(np.argmax(score))
    return candidates[best].copy(), float(score[best])


def initial_phase(cfg: RunConfig, rng: np.random.Generator, episode_hook=None):
    """Evaluate uniform draws from the initial safe box.

    Raises
    ------
    AssumptionViolatedError
        If any safety observation is non-positive: the box assumed safe is
        not, and no safe exploration can be built on it.
    """
    thetas, ys_g, ys_s = [], [], []
    for i in range(cfg.n_init):
        theta = tuple(rng.uniform(lo, hi) for lo, hi in cfg.initial_safe_bounds)
        g_true, s_true, traj = measure_indices(cfg, theta)
        y_g = observe(g_true, cfg.noise_g, rng)
        y_s = observe(s_true, cfg.noise_s, rng)
        if episode_hook is not None:
            episode_hook("init", i, theta, traj)
        if y_s <= 0:
            raise AssumptionViolatedError(
                f"safety observation {y_s:.6g} <= 0 at theta={theta} during the "
                f"initial phase; the configured initial box is not actually safe"
            )
        thetas.append(theta)
        ys_g.append(y_g)
        ys_s.append(y_s)
    inputs = np.asarray(thetas)
    return (
        Dataset(inputs, np.asarray(ys_g), cfg.noise_g),
        Dataset(inputs, np.asarray(ys_s), cfg.noise_s),
    )


def explore(cfg: RunConfig, episode_hook=None) -> ExploreResult:
    """Full exploration run: initial phase, then certify/acquire/measure/refit.

    After the loop the sets are certified once more from the final fit so the
    last measurement contributes to the returned sets. A non-positive safety
    observation during the loop does not stop the run (the data is still
    informative) but flips the result status to non-compliant.
    """
    rng = np.random.default_rng(cfg.seed)
    status = STATUS_COMPLIANT
    records: list[IterationRecord] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RkhsBoundWarning)
        data_g, data_s = initial_phase(cfg, rng, episode_hook)
        gp_g = fit(cfg.kernel_g, data_g)
        gp_s = fit(cfg.kernel_s, data_s)
        grid = make_grid(cfg)
        for j in range(1, cfg.n_exp + 1):
            safe_new, target_new, width_g, width_s = certified_sets(
                gp_g, gp_s, cfg.rkhs_bound_g, cfg.rkhs_bound_s, grid.points
            )
            grid.in_theta_s |= safe_new
            grid.in_theta |= target_new
            theta, acq = max_variance_point(gp_g, gp_s, grid.points[grid.in_theta_s])
            g_true, s_true, traj = measure_indices(cfg, theta)
            y_g = observe(g_true, cfg.noise_g, rng)
            y_s = observe(s_true, cfg.noise_s, rng)
            if episode_hook is not None:
                episode_hook("explore", j, theta, traj)
            if y_s <= 0:
                status = STATUS_VIOLATION
            records.append(
                IterationRecord(
                    j=j,
                    theta=tuple(float(v) for v in theta),
                    y_g=y_g,
                    y_s=y_s,
                    beta_g=width_g,
                    beta_s=width_s,
                    size_theta_s=grid.size_theta_s,
                    size_theta=grid.size_theta,
                    acq_value=acq,
                )
            )
            data_g = data_g.extend(theta, y_g)
            data_s = data_s.extend(theta, y_s)
            gp_g = fit(cfg.kernel_g, data_g)
            gp_s = fit(cfg.kernel_s, data_s)
        safe_new, target_new, _, _ = certified_sets(
            gp_g, gp_s, cfg.rkhs_bound_g, cfg.rkhs_bound_s, grid.points
        )
        grid.in_theta_s |= safe_new
        grid.in_theta |= target_new
    return ExploreResult(
        grid=grid,
        records=records,
        status=status,
        warnings=[str(w.message) for w in caught],
        data_g=data_g,
        data_s=data_s,
    )


def random_search(cfg: RunConfig, episode_hook=None) -> list[BaselineRecord]:
    """Uniform draws over the whole box, no model and no safety restriction."""
    rng = np.random.default_rng(cfg.seed)
    records = []
    for j in range(1, cfg.n_exp + 1):
        theta = tuple(rng.uniform(lo, hi) for lo, hi in cfg.bounds)
        g_true, s_true, traj = measure_indices(cfg, theta)
        y_g = observe(g_true, cfg.noise_g, rng)
        y_s = observe(s_true, cfg.noise_s, rng)
        if episode_hook is not None:
            episode_hook("baseline", j, theta, traj)
        records.append(BaselineRecord(j=j, theta=theta, y_g=y_g, y_s=y_s))
    return records


def sample_from_cells(
    grid: GridSets, mask: np.ndarray, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Uniform parameter samples from the grid cells flagged in `mask`.

    Each sample picks a flagged grid point uniformly and jitters it within
    half a grid spacing per dimension, clipped to the lattice extent.
    """
    flagged = np.flatnonzero(mask)
    if flagged.size == 0:
        raise ValueError("cannot sample from an empty set")
    half = np.array([0.5 * (ax[1] - ax[0]) for ax in grid.axes])
    lo = np.array([ax[0] for ax in grid.axes])
    hi = np.array([ax[-1] for ax in grid.axes])
    choices = flagged[rng.integers(0, flagged.size, size=count)]
    jitter = rng.uniform(-half, half, size=(count, len(grid.axes)))
    return np.clip(grid.points[choices] + jitter, lo, hi)
