"""Safe active exploration of event-triggered control parameters."""

from .explore import (
    AssumptionViolatedError,
    BaselineRecord,
    ExploreResult,
    GridSets,
    IterationRecord,
    RunConfig,
    explore,
    random_search,
)
from .gp import Dataset, GpFitError, GpModel, KernelSpec, RkhsBoundWarning
from .indices import ConvergenceSpec, SafetySpec
from .simulate import ControllerSpec, EtmSpec, PlantSpec, Trajectory, run_episode

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolatedError",
    "BaselineRecord",
    "ControllerSpec",
    "ConvergenceSpec",
    "Dataset",
    "EtmSpec",
    "ExploreResult",
    "GpFitError",
    "GpModel",
    "GridSets",
    "IterationRecord",
    "KernelSpec",
    "PlantSpec",
    "RkhsBoundWarning",
    "RunConfig",
    "SafetySpec",
    "Trajectory",
    "explore",
    "random_search",
    "run_episode",
    "__version__",
]
