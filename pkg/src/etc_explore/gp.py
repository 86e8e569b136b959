"""Exact Gaussian-process regression with RKHS-based confidence widths.

Given training pairs (x_i, y_i) and a squared-exponential kernel k, the
posterior at a query point x is

    mean(x) = k_*(x)^T (K + eta^2 I)^-1 Y
    var(x)  = k(x, x) - k_*(x)^T (K + eta^2 I)^-1 k_*(x)

where K is the training Gram matrix, eta bounds the observation noise and
k_* is the vector of kernel values between x and the training inputs.

The confidence width used to build lower confidence bounds is

    width = sqrt(max(0, B^2 - Y^T (K + eta^2 I)^-1 Y) + N)

with B an assumed bound on the RKHS norm of the latent function. A width
of `width * sqrt(var)` subtracted from the mean gives a certified lower
bound on the latent function under that norm assumption. The quadratic
form is evaluated with the same regularized Gram matrix as the posterior;
a negative radicand is clamped to zero and reported through
:class:`RkhsBoundWarning`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

__all__ = [
    "KernelSpec",
    "Dataset",
    "GpModel",
    "GpFitError",
    "RkhsBoundWarning",
    "kernel_eval",
    "kernel_matrix",
    "fit",
    "posterior",
    "posterior_batch",
    "confidence_width",
]

# Jitter ladder tried in order when the regularized Gram matrix fails to
# factorize; the base value is always applied so that eta = 0 still yields
# a positive-definite system.
JITTERS = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)

VARIANCE_FLOOR = 1e-12


class GpFitError(RuntimeError):
    """Raised when the regularized Gram matrix cannot be factorized."""


class RkhsBoundWarning(UserWarning):
    """The assumed RKHS norm bound is smaller than the data suggests."""


@dataclass(frozen=True)
class KernelSpec:
    """Squared-exponential kernel with per-dimension lengthscales.

    k(a, b) = signal_variance * exp(-0.5 * sum_d ((a_d - b_d) / l_d)^2)
    """

    lengthscales: tuple[float, ...]
    signal_variance: float = 1.0

    def __post_init__(self):
        if any(l <= 0 for l in self.lengthscales):
            raise ValueError(f"lengthscales must be positive, got {self.lengthscales}")
        if self.signal_variance <= 0:
            raise ValueError(f"signal_variance must be positive, got {self.signal_variance}")


@dataclass(frozen=True)
class Dataset:
    """Paired training inputs and scalar outputs with a noise magnitude bound."""

    inputs: np.ndarray
    outputs: np.ndarray
    noise_bound: float = 0.0

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.asarray(self.outputs, dtype=float).ravel()
        if inputs.shape[0] != outputs.shape[0]:
            raise ValueError(
                f"{inputs.shape[0]} inputs but {outputs.shape[0]} outputs"
            )
        if self.noise_bound < 0:
            raise ValueError("noise_bound must be non-negative")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    def __len__(self) -> int:
        return self.outputs.shape[0]

    def extend(self, theta, y: float) -> "Dataset":
        """Return a new dataset with one extra observation appended."""
        x = np.vstack([self.inputs, np.asarray(theta, dtype=float).reshape(1, -1)])
        return Dataset(x, np.append(self.outputs, float(y)), self.noise_bound)


@dataclass(frozen=True)
class GpModel:
    """Fitted model: kernel, data and the Cholesky factor of (K + eta^2 I)."""

    kernel: KernelSpec
    data: Dataset
    chol_lower: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    jitter: float

    def __len__(self) -> int:
        return len(self.data)


def _scaled_sqdist(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ls = np.asarray(spec.lengthscales, dtype=float)
    diff = a[:, None, :] / ls - b[None, :, :] / ls
    return np.einsum("ijk,ijk->ij", diff, diff)


def kernel_eval(spec: KernelSpec, a, b) -> float:
    """Evaluate the kernel at a single pair of points.

    Raises
    ------
    ValueError
        If either point's dimension does not match the lengthscales.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    d = len(spec.lengthscales)
    if a.shape[0] != d or b.shape[0] != d:
        raise ValueError(
            f"points of dimension {a.shape[0]} and {b.shape[0]} do not match "
            f"{d} lengthscales"
        )
    r2 = sum(((ai - bi) / li) ** 2 for ai, bi, li in zip(a, b, spec.lengthscales))
    return spec.signal_variance * math.exp(-0.5 * r2)


def kernel_matrix(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kernel Gram block between two point sets, shape (len(a), len(b))."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    return spec.signal_variance * np.exp(-0.5 * _scaled_sqdist(spec, a, b))


def fit(spec: KernelSpec, data: Dataset) -> GpModel:
    """Factorize the regularized Gram matrix and solve for the mean weights.

    The Gram matrix K + eta^2 I receives an escalating diagonal jitter
    (starting at 1e-10) until the Cholesky factorization succeeds.

    Raises
    ------
    GpFitError
        If the factorization fails even at the largest jitter; the message
        reports the matrix condition estimate.
    """
    if len(data) == 0:
        raise ValueError("cannot fit a model to an empty dataset")
    gram = kernel_matrix(spec, data.inputs, data.inputs)
    gram = 0.5 * (gram + gram.T)
    reg = gram + data.noise_bound**2 * np.eye(len(data))
    for jitter in JITTERS:
        try:
            lower = cholesky(reg + jitter * np.eye(len(data)), lower=True)
        except np.linalg.LinAlgError:
            continue
        alpha = solve_triangular(
            lower.T, solve_triangular(lower, data.outputs, lower=True), lower=False
        )
        return GpModel(kernel=spec, data=data, chol_lower=lower, alpha=alpha, jitter=jitter)
    cond = np.linalg.cond(reg)
    raise GpFitError(
        f"Gram matrix factorization failed for N={len(data)} even with jitter "
        f"{JITTERS[-1]:g} (condition number ~{cond:.3e})"
    )


def posterior(model: GpModel, theta) -> tuple[float, float]:
    """Posterior mean and variance at a single point.

    The variance is clamped to be non-negative and values below 1e-12 are
    floored to exactly zero before any square root is taken downstream.
    """
    mean, var = posterior_batch(model, np.asarray(theta, dtype=float).reshape(1, -1))
    return float(mean[0]), float(var[0])


def posterior_batch(model: GpModel, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized posterior mean and variance over rows of `thetas`."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    k_star = kernel_matrix(model.kernel, thetas, model.data.inputs)
    mean = k_star @ model.alpha
    v = solve_triangular(model.chol_lower, k_star.T, lower=True)
    var = model.kernel.signal_variance - np.einsum("ij,ij->j", v, v)
    var = np.where(var < VARIANCE_FLOOR, 0.0, var)
    return mean, var


def confidence_width(model: GpModel, rkhs_bound: float) -> float:
    """Data-dependent scale of the confidence interval around the mean.

    Returns sqrt(max(0, B^2 - Y^T (K + eta^2 I)^-1 Y) + N). The quadratic
    form uses the jitter-regularized factorization stored in the model. A
    negative radicand means the assumed RKHS bound B underestimates what
    the data requires; it is clamped to zero and an
    :class:`RkhsBoundWarning` is emitted so the violation stays observable.
    """
    if rkhs_bound <= 0:
        raise ValueError("rkhs_bound must be positive")
    w = solve_triangular(model.chol_lower, model.data.outputs, lower=True)
    quad = float(w @ w)
    radicand = rkhs_bound**2 - quad
    if radicand < 0:
        warnings.warn(
            f"RKHS bound {rkhs_bound:g} is below the data quadratic form "
            f"{quad:.6g} (N={len(model)}); clamping the radicand to zero",
            RkhsBoundWarning,
            stacklevel=2,
        )
        radicand = 0.0
    return math.sqrt(radicand + len(model))
