"""Filtering specialization: observation-driven quadratic potential.

With the inner map l = y - h(x) and a quadratic outer function the
update becomes the extended Kalman filter. The sign convention
H = -(dl/dx) makes H the plain observation Jacobian dh/dx here, which
is the classic spot for sign bugs; a unit test pins it against the
innovation form.

Sigma_nu is a tuning matrix for the observation weight, not something
estimated from data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import engine
from .errors import ValidationError
from .linalg import spd_inverse, spd_logdet, spd_solve, symmetrize
from .potential import PotentialEvaluation
from .process import ItoProcessModel

__all__ = [
    "ObservationModel",
    "ObservationStream",
    "observation_potential",
    "ekf_step",
    "run_filter",
    "filter_with_likelihood",
    "marginal_likelihood",
    "read_observations",
]


@dataclass
class ObservationModel:
    """Observation map h, its Jacobian and the noise weight matrix."""

    h: Callable[[np.ndarray, int], np.ndarray]
    h_jacobian: Callable[[np.ndarray, int], np.ndarray]
    sigma_nu: np.ndarray

    def __post_init__(self):
        self.sigma_nu = symmetrize(np.atleast_2d(np.asarray(self.sigma_nu, dtype=float)))
        self.sigma_nu_inv = spd_inverse(self.sigma_nu)


@dataclass
class ObservationStream:
    """Ordered (step, y) pairs; steps strictly increasing."""

    steps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.steps = np.asarray(self.steps, dtype=int)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if len(self.steps) != len(self.values):
            raise ValidationError("steps and values must have equal length")
        if len(self.steps) > 1 and np.any(np.diff(self.steps) <= 0):
            raise ValidationError("observation steps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.steps)

    def as_dict(self) -> dict:
        return {int(s): y for s, y in zip(self.steps, self.values)}


def observation_potential(obs_model: ObservationModel, y: np.ndarray, x_hat: np.ndarray, t: int) -> PotentialEvaluation:
    """Quadratic potential in the innovation l = y - h(x)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x_hat = np.atleast_1d(np.asarray(x_hat, dtype=float))
    l = y - np.atleast_1d(obs_model.h(x_hat, t))
    grad_l = obs_model.sigma_nu_inv @ l
    jac = np.atleast_2d(obs_model.h_jacobian(x_hat, t))
    m = len(x_hat)
    return PotentialEvaluation(
        l=l,
        value=0.5 * float(l @ grad_l),
        grad_l=grad_l,
        H=jac,  # H = -(dl/dx) = +dh/dx
        curvature=obs_model.sigma_nu_inv,
        counter_curvature=np.zeros((m, m)),
    )


def ekf_step(
    belief: engine.GaussianBelief,
    model: ItoProcessModel,
    obs_model: ObservationModel,
    y: np.ndarray,
    t: int,
) -> engine.GaussianBelief:
    """Predict through the process model, then the textbook EKF update.

    The update arithmetic here is the innovation form with unit time
    weighting (one observation absorbed per step), deliberately not a
    call into the engine so the two can be compared as independent
    routes.
    """
    pred = engine.predict(belief, model) if belief.tag == "updated" else belief
    x = pred.mean
    jac = np.atleast_2d(obs_model.h_jacobian(x, t))
    innovation = np.atleast_1d(np.asarray(y, dtype=float)) - np.atleast_1d(obs_model.h(x, t))
    s = symmetrize(obs_model.sigma_nu + jac @ pred.cov @ jac.T)
    gain = spd_solve(s, jac @ pred.cov).T
    mean = x + gain @ innovation
    cov = symmetrize(pred.cov - gain @ jac @ pred.cov)
    return engine.GaussianBelief(mean=mean, cov=cov, step=pred.step, tag="updated")


def marginal_likelihood(belief: engine.GaussianBelief, obs_model: ObservationModel, y: np.ndarray, t: Optional[int] = None) -> tuple[float, float]:
    """Log marginal density of y and the log weight at the predicted mean.

    The marginal is the Gaussian density of y under
    N(h(x_hat), sigma_nu + H cov H^T); the weight is the ratio of the
    observation density at x_hat to that marginal. Any common scaling
    of the two densities cancels in the weight.
    """
    t = belief.step if t is None else t
    x = belief.mean
    y = np.atleast_1d(np.asarray(y, dtype=float))
    jac = np.atleast_2d(obs_model.h_jacobian(x, t))
    innovation = y - np.atleast_1d(obs_model.h(x, t))
    k = len(innovation)

    def log_gauss(diff, cov):
        return -0.5 * (float(diff @ spd_solve(cov, diff)) + spd_logdet(cov) + k * np.log(2 * np.pi))

    s = symmetrize(obs_model.sigma_nu + jac @ belief.cov @ jac.T)
    log_marginal = log_gauss(innovation, s)
    log_at_mean = log_gauss(innovation, obs_model.sigma_nu)
    return log_marginal, log_at_mean - log_marginal


def run_filter(
    model: ItoProcessModel,
    obs_model: ObservationModel,
    stream: ObservationStream,
    initial_belief: engine.GaussianBelief,
    horizon: Optional[int] = None,
) -> list[engine.GaussianBelief]:
    """Filter a stream of observations starting from a predicted belief.

    Returns one belief per step from the initial step through the
    horizon (default: the last observed step): updated where an
    observation exists, the bare prediction elsewhere.
    """
    beliefs, _ = filter_with_likelihood(model, obs_model, stream, initial_belief, horizon)
    return beliefs


def filter_with_likelihood(
    model: ItoProcessModel,
    obs_model: ObservationModel,
    stream: ObservationStream,
    initial_belief: engine.GaussianBelief,
    horizon: Optional[int] = None,
) -> tuple[list[engine.GaussianBelief], list[float]]:
    """run_filter plus the per-step log marginal likelihood.

    The likelihood entry is nan at steps without an observation.
    """
    if initial_belief.tag != "predicted":
        raise ValidationError("initial belief must be tagged predicted")
    by_step = stream.as_dict()
    if horizon is None:
        horizon = max(by_step) if by_step else initial_belief.step
    beliefs: list[engine.GaussianBelief] = []
    logliks: list[float] = []
    belief = initial_belief
    for s in range(initial_belief.step, horizon + 1):
        if belief.tag == "predicted" and belief.step == s:
            pred = belief
        else:
            pred = engine.predict(belief, model)
        if s in by_step:
            y = by_step[s]
            logliks.append(marginal_likelihood(pred, obs_model, y, s)[0])
            belief = ekf_step(pred, model, obs_model, y, s)
        else:
            logliks.append(np.nan)
            belief = pred
        beliefs.append(belief)
    return beliefs, logliks


def read_observations(path) -> ObservationStream:
    """Load an observation CSV with header step,y1,...,yk."""
    import csv

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return ObservationStream(steps=np.empty(0, dtype=int), values=np.empty((0, 0)))
    header = [c.strip() for c in rows[0]]
    k = len(header) - 1
    if header[0] != "step" or k < 1 or header[1:] != [f"y{i}" for i in range(1, k + 1)]:
        raise ValidationError(
            f"observation header must be step,y1,...,yk; got {','.join(header)}"
        )
    data = [r for r in rows[1:] if r]
    steps = np.array([int(float(r[0])) for r in data], dtype=int)
    values = np.array([[float(v) for v in r[1:]] for r in data]) if data else np.empty((0, k))
    return ObservationStream(steps=steps, values=values)
