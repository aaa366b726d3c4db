"""Discrete-time Ito process: forward sampling and linearization.

The process is

    x_{t+dt} = x_t + f_t(x_t) dt + sqrt(dt) L z,   L L^T = g_inv,

with z a standard normal draw and g_inv the (constant) inverse noise
metric. Time is an integer step index; physical time enters only
through dt and the explicit time dependence of the drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NonFinite, ValidationError
from .linalg import _eye, spd_cholesky, symmetrize

__all__ = [
    "ItoProcessModel",
    "StatePath",
    "step_sample",
    "transition_matrix",
    "simulate_open_loop",
    "make_drift",
    "DRIFT_KINDS",
]

DriftFn = Callable[[np.ndarray, int], np.ndarray]


@dataclass
class ItoProcessModel:
    """Drift, drift Jacobian, inverse noise metric and step size."""

    dim: int
    drift: DriftFn
    drift_jacobian: DriftFn
    g_inv: np.ndarray
    dt: float = 1.0
    noise_factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.g_inv = symmetrize(np.asarray(self.g_inv, dtype=float))
        if self.g_inv.shape != (self.dim, self.dim):
            raise ValidationError(
                f"g_inv shape {self.g_inv.shape} does not match dim {self.dim}"
            )
        if self.dt <= 0:
            raise ValidationError("dt must be positive")
        # g_inv is time independent, so the noise factor is computed once.
        self.noise_factor = spd_cholesky(self.g_inv)


@dataclass
class StatePath:
    """Sampled forward path: integer step indices and one state per step."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValidationError("times and states must have equal length")


def step_sample(model: ItoProcessModel, x: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
    """One Euler step of the process from state x at step index t."""
    x = np.asarray(x, dtype=float)
    z = rng.standard_normal(model.dim)
    return x + model.drift(x, t) * model.dt + np.sqrt(model.dt) * (model.noise_factor @ z)


def transition_matrix(model: ItoProcessModel, x_hat: np.ndarray, t: int) -> np.ndarray:
    """Linearized one-step map F = I + (df/dx)(x_hat, t) dt."""
    jac = np.asarray(model.drift_jacobian(np.asarray(x_hat, dtype=float), t), dtype=float)
    return _eye(model.dim) + jac * model.dt


def simulate_open_loop(model: ItoProcessModel, x0: np.ndarray, steps: int, rng: np.random.Generator) -> StatePath:
    """Iterate step_sample for the given number of steps.

    The returned path has steps+1 entries including the initial state.
    Raises NonFinite as soon as a state leaves the finite range.
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    states = np.empty((steps + 1, model.dim))
    states[0] = np.asarray(x0, dtype=float)
    for t in range(steps):
        states[t + 1] = step_sample(model, states[t], t, rng)
        if not np.all(np.isfinite(states[t + 1])):
            raise NonFinite(f"state became non-finite at step {t + 1}")
    return StatePath(times=np.arange(steps + 1), states=states)


# ---------------------------------------------------------------------------
# Named drift builtins, selected by scenario files.

def _zero_drift(dim: int) -> tuple[DriftFn, DriftFn]:
    def drift(x, t):
        return np.zeros(dim)

    def jacobian(x, t):
        return np.zeros((dim, dim))

    return drift, jacobian


def _linear_drift(a: np.ndarray) -> tuple[DriftFn, DriftFn]:
    a = np.asarray(a, dtype=float)

    def drift(x, t):
        return a @ x

    def jacobian(x, t):
        return a

    return drift, jacobian


def _vanderpol_forced_drift(scale: float, forcing: float, omega: float) -> tuple[DriftFn, DriftFn]:
    """Planar oscillator benchmark with parametric sinusoidal forcing.

    f1 = scale * x2
    f2 = scale * ((1 - x1^2 - x2^2) x2 - x1 + forcing * x2 * sin(omega t))
    """

    def drift(x, t):
        x1, x2 = x
        f1 = scale * x2
        f2 = scale * ((1.0 - x1 * x1 - x2 * x2) * x2 - x1 + forcing * x2 * np.sin(omega * t))
        return np.array([f1, f2])

    def jacobian(x, t):
        x1, x2 = x
        return np.array([
            [0.0, scale],
            [
                scale * (-2.0 * x1 * x2 - 1.0),
                scale * (-2.0 * x2 * x2 + (1.0 - x1 * x1 - x2 * x2) + forcing * np.sin(omega * t)),
            ],
        ])

    return drift, jacobian


DRIFT_KINDS = ("zero", "linear", "vanderpol_forced")


def make_drift(kind: str, params: dict | None, dim: int) -> tuple[DriftFn, DriftFn]:
    """Build (drift, jacobian) for a named builtin.

    Kinds: "zero"; "linear" with params {"A": matrix}; "vanderpol_forced"
    with optional params {"scale": 0.005, "forcing": 3.0, "omega": 0.005}
    (the benchmark values are the defaults).
    """
    params = dict(params or {})
    if kind == "zero":
        if params:
            raise ValidationError(f"zero drift takes no parameters, got {sorted(params)}")
        return _zero_drift(dim)
    if kind == "linear":
        try:
            a = np.asarray(params.pop("A"), dtype=float)
        except KeyError:
            raise ValidationError('linear drift requires parameter "A"') from None
        if params:
            raise ValidationError(f"unknown linear drift parameters {sorted(params)}")
        if a.shape != (dim, dim):
            raise ValidationError(f"drift matrix A has shape {a.shape}, expected {(dim, dim)}")
        return _linear_drift(a)
    if kind == "vanderpol_forced":
        if dim != 2:
            raise ValidationError("vanderpol_forced drift is two dimensional")
        scale = float(params.pop("scale", 0.005))
        forcing = float(params.pop("forcing", 3.0))
        omega = float(params.pop("omega", 0.005))
        if params:
            raise ValidationError(f"unknown vanderpol_forced parameters {sorted(params)}")
        return _vanderpol_forced_drift(scale, forcing, omega)
    raise ValidationError(f"unknown drift kind {kind!r}; expected one of {DRIFT_KINDS}")
