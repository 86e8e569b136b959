"""Closed-loop episode simulation with event-triggered state transmission.

A sensor-side trigger decides when the current state is transmitted to the
controller; between transmissions the controller holds the last received
state. Transmission happens when

    ||x(t) - x_held|| - eps(t) * ||x(t)|| >= 0

with the time-varying threshold eps(t) decaying from an initial to a
steady-state value. Integration is classical fixed-step RK4 and the
trigger is checked once per step, which also rules out Zeno behavior by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PlantSpec",
    "EtmSpec",
    "ControllerSpec",
    "Trajectory",
    "run_episode",
    "pendulum_dynamics",
    "make_plant",
    "PLANT_MODELS",
]

DIVERGENCE_LIMIT = 1e6


def pendulum_dynamics(x: Sequence[float], u: Sequence[float]) -> tuple[float, float]:
    """Inverted pendulum: angle rate and torque balance with unit damping."""
    return (x[1], math.sin(x[0]) - x[1] + u[0])


@dataclass(frozen=True)
class PlantSpec:
    """Continuous-time plant dx/dt = dynamics(x, u) with equilibrium at 0."""

    dynamics: Callable[[Sequence[float], Sequence[float]], Sequence[float]]
    initial_state: tuple[float, ...]
    state_dim: int
    input_dim: int

    def __post_init__(self):
        object.__setattr__(self, "initial_state", tuple(float(v) for v in self.initial_state))
        if len(self.initial_state) != self.state_dim:
            raise ValueError(
                f"initial state has {len(self.initial_state)} entries, expected {self.state_dim}"
            )
        residual = self.dynamics((0.0,) * self.state_dim, (0.0,) * self.input_dim)
        if max(abs(float(r)) for r in residual) > 1e-12:
            raise ValueError("dynamics must vanish at the origin (known equilibrium)")


@dataclass(frozen=True)
class EtmSpec:
    """Trigger parameters: threshold pair theta = (initial, steady) and decay rate."""

    theta: tuple[float, float]
    decay_rate: float

    def __post_init__(self):
        object.__setattr__(self, "theta", (float(self.theta[0]), float(self.theta[1])))
        if self.theta[0] < 0 or self.theta[1] < 0:
            raise ValueError(f"thresholds must be non-negative, got {self.theta}")
        if self.decay_rate <= 0:
            raise ValueError("decay_rate must be positive")

    def threshold(self, t: float) -> float:
        """Time-varying threshold: (init - steady) * exp(-decay * t) + steady."""
        init, steady = self.theta
        return (init - steady) * math.exp(-self.decay_rate * t) + steady

    def should_transmit(self, x_now: Sequence[float], x_held: Sequence[float], t: float) -> bool:
        """True iff ||x_now - x_held|| - threshold(t) * ||x_now|| >= 0."""
        err = math.sqrt(sum((a - b) ** 2 for a, b in zip(x_now, x_held)))
        nrm = math.sqrt(sum(a * a for a in x_now))
        return err - self.threshold(t) * nrm >= 0.0


@dataclass(frozen=True)
class ControllerSpec:
    """Static sampled-state feedback u = gain @ x_held."""

    gain: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        gain = np.atleast_2d(np.asarray(self.gain, dtype=float))
        object.__setattr__(self, "gain", tuple(tuple(row) for row in gain))

    @property
    def input_dim(self) -> int:
        return len(self.gain)

    @property
    def state_dim(self) -> int:
        return len(self.gain[0])


@dataclass
class Trajectory:
    """Time-stamped record of one closed-loop episode on the integration grid."""

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    event_flags: np.ndarray
    diverged: bool = False
    event_times: np.ndarray = field(init=False)

    def __post_init__(self):
        self.event_times = self.times[self.event_flags]

    @property
    def num_events(self) -> int:
        return int(self.event_flags.sum())


def run_episode(
    plant: PlantSpec,
    etm: EtmSpec,
    ctrl: ControllerSpec,
    horizon: float,
    step: float,
) -> Trajectory:
    """Simulate one closed-loop episode and record the full grid trajectory.

    The first sample at t = 0 is always transmitted. At every later grid
    time the trigger is checked before the input is computed; on a trigger
    the held state is refreshed and the event logged. The input is constant
    between events. If the state leaves [-1e6, 1e6] or becomes non-finite
    the episode aborts and the trajectory is marked diverged.
    """
    if horizon <= 0 or step <= 0:
        raise ValueError("horizon and step must be positive")
    n = round(horizon / step)
    if abs(horizon / step - n) > 1e-9 * max(n, 1):
        raise ValueError(f"horizon {horizon} is not an integer multiple of step {step}")
    if ctrl.state_dim != plant.state_dim or ctrl.input_dim != plant.input_dim:
        raise ValueError("controller gain shape does not match plant dimensions")

    nx, nu = plant.state_dim, plant.input_dim
    times = np.empty(n + 1)
    states = np.empty((n + 1, nx))
    inputs = np.empty((n + 1, nu))
    events = np.zeros(n + 1, dtype=bool)

    dyn = plant.dynamics
    gain = ctrl.gain
    h = step
    h2 = 0.5 * step
    x = plant.initial_state
    x_held = x
    events[0] = True
    diverged = False
    last = n

    for i in range(n + 1):
        t = i * h
        times[i] = t
        states[i] = x
        if i > 0 and etm.should_transmit(x, x_held, t) and x != x_held:
            # An identical state carries no new information; skipping it keeps
            # an episode started at the equilibrium free of spurious events.
            x_held = x
            events[i] = True
        u = tuple(sum(g * xs for g, xs in zip(row, x_held)) for row in gain)
        inputs[i] = u
        if i == n:
            break
        k1 = dyn(x, u)
        k2 = dyn(tuple(a + h2 * b for a, b in zip(x, k1)), u)
        k3 = dyn(tuple(a + h2 * b for a, b in zip(x, k2)), u)
        k4 = dyn(tuple(a + h * b for a, b in zip(x, k3)), u)
        x = tuple(
            a + h * (b + 2.0 * c + 2.0 * d + e) / 6.0
            for a, b, c, d, e in zip(x, k1, k2, k3, k4)
        )
        if any(not math.isfinite(v) or abs(v) > DIVERGENCE_LIMIT for v in x):
            diverged = True
            last = i + 1
            times[last] = (i + 1) * h
            states[last] = x
            inputs[last] = u
            break

    end = last + 1
    return Trajectory(
        times=times[:end],
        states=states[:end],
        inputs=inputs[:end],
        event_flags=events[:end],
        diverged=diverged,
    )


def make_plant(model: str, initial_state: Sequence[float]) -> PlantSpec:
    """Build a plant from the registry of named dynamics."""
    try:
        dynamics, nx, nu = PLANT_MODELS[model]
    except KeyError:
        raise ValueError(
            f"unknown plant model {model!r}; available: {sorted(PLANT_MODELS)}"
        ) from None
    return PlantSpec(dynamics=dynamics, initial_state=tuple(initial_state), state_dim=nx, input_dim=nu)


PLANT_MODELS = {
    "pendulum": (pendulum_dynamics, 2, 1),
}
