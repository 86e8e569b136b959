"""Scalar trajectory indices whose positivity certifies the specifications.

The convergence index compares the weighted squared state against a
decaying envelope; the safety index measures the margin to a state bound.
Both are grid minima over the recorded trajectory. A diverged trajectory
fails both, expressed through a large negative sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulate import Trajectory

__all__ = [
    "ConvergenceSpec",
    "SafetySpec",
    "convergence_index",
    "safety_index",
    "observe",
    "NEG_SENTINEL",
    "POS_SENTINEL",
]

# Stand-ins for -inf / +inf in logs; CSV output writes them verbatim.
NEG_SENTINEL = -1e18
POS_SENTINEL = 1e18


@dataclass(frozen=True)
class ConvergenceSpec:
    """Envelope test: envelope_init * exp(-envelope_decay * t) vs x^T W x."""

    weight: np.ndarray
    envelope_init: float = 2.0
    envelope_decay: float = 0.05
    denom_floor: float = 1e-12

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weight, dtype=float))
        if not np.allclose(w, w.T):
            raise ValueError("weight matrix must be symmetric")
        if np.linalg.eigvalsh(w).min() <= 0:
            raise ValueError("weight matrix must be positive definite")
        if self.envelope_init <= 0 or self.envelope_decay <= 0:
            raise ValueError("envelope parameters must be positive")
        object.__setattr__(self, "weight", w)


@dataclass(frozen=True)
class SafetySpec:
    """Margin to a bound on either the state norm or one state component."""

    mode: str
    bound: float
    component: int = 0

    def __post_init__(self):
        if self.mode not in ("norm", "component"):
            raise ValueError(f"mode must be 'norm' or 'component', got {self.mode!r}")
        if self.bound <= 0:
            raise ValueError("bound must be positive")


def convergence_index(traj: Trajectory, spec: ConvergenceSpec) -> float:
    """Minimum over grid times t > 0 of envelope(t) / (x^T W x) - 1.

    Times where the quadratic form is below the denominator floor are
    skipped (the state has effectively reached the origin there, which is
    exactly what the test certifies). If every time is skipped the index is
    the positive sentinel; a diverged trajectory gives the negative one.
    """
    if traj.diverged:
        return NEG_SENTINEL
    states = traj.states[1:]
    times = traj.times[1:]
    quad = np.einsum("ij,jk,ik->i", states, spec.weight, states)
    valid = quad >= spec.denom_floor
    if not valid.any():
        return POS_SENTINEL
    envelope = spec.envelope_init * np.exp(-spec.envelope_decay * times[valid])
    return float(np.min(envelope / quad[valid] - 1.0))


def safety_index(traj: Trajectory, spec: SafetySpec) -> float:
    """Minimum over the full grid (t = 0 included) of the safety margin."""
    if traj.diverged:
        return NEG_SENTINEL
    if spec.mode == "norm":
        magnitude = np.linalg.norm(traj.states, axis=1)
    else:
        magnitude = np.abs(traj.states[:, spec.component])
    return float(spec.bound - np.max(magnitude))


def observe(true_value: float, noise_bound: float, rng: np.random.Generator) -> float:
    """Noisy measurement: the true value plus uniform noise on [-bound, bound].

    The generator is always advanced by one draw, so a zero bound keeps the
    stream aligned with noisy runs while returning the value unchanged.
    """
    if noise_bound < 0:
        raise ValueError("noise_bound must be non-negative")
    return true_value + rng.uniform(-noise_bound, noise_bound)
