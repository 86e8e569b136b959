import copy

import numpy as np
import pytest

from etc_explore.gp import KernelSpec


def oracle_posterior(spec: KernelSpec, X, Y, eta, jitter, theta):
    """Dense linear-solve reference for the GP posterior, kept independent of
    the package's Cholesky path (explicit inverse, elementwise kernel)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    ls = np.asarray(spec.lengthscales, dtype=float)

    def k(a, b):
        return spec.signal_variance * np.exp(-0.5 * float(np.sum(((a - b) / ls) ** 2)))

    n = len(X)
    gram = np.array([[k(X[i], X[j]) for j in range(n)] for i in range(n)])
    a_mat = gram + (eta**2 + jitter) * np.eye(n)
    k_star = np.array([k(theta, X[i]) for i in range(n)])
    a_inv = np.linalg.inv(a_mat)
    mean = float(k_star @ a_inv @ Y)
    var = float(k(theta, theta) - k_star @ a_inv @ k_star)
    return mean, var


@pytest.fixture
def oracle():
    return oracle_posterior


# Small, fast configuration used by explorer and CLI tests: short horizon,
# coarse grid, handful of iterations. Index values differ from the full
# study but stay positive near the initial box.
CHEAP_RAW = {
    "seed": 11,
    "parameter_space": {
        "bounds": [[0.01, 1.0], [0.01, 1.0]],
        "grid_resolution": [12, 12],
        "initial_safe_bounds": [[0.01, 0.05], [0.01, 0.05]],
    },
    "exploration": {"n_init": 5, "n_exp": 8},
    "gp": {
        "convergence": {
            "lengthscales": [0.015, 0.015],
            "signal_variance": 1.0,
            "rkhs_bound": 2.0,
            "noise_bound": 0.01,
        },
        "safety": {
            "lengthscales": [0.3, 0.3],
            "signal_variance": 0.02,
            "rkhs_bound": 2.0,
            "noise_bound": 0.01,
        },
    },
    "plant": {"model": "pendulum", "initial_state": [1.0, 0.0]},
    "controller": {"gain": [-1.08, -1.43]},
    "trigger": {"decay_rate": 0.1},
    "convergence_index": {
        "weight": [[1.0, 0.0], [0.0, 1.0]],
        "envelope_init": 2.0,
        "envelope_decay": 0.05,
    },
    "safety_index": {"mode": "component", "component": 2, "bound": 0.25},
    "simulation": {"horizon": 2.0, "dt": 0.01},
}


@pytest.fixture
def cheap_raw():
    return copy.deepcopy(CHEAP_RAW)


@pytest.fixture
def cheap_cfg(cheap_raw):
    from etc_explore.config import build_config

    return build_config(cheap_raw)
