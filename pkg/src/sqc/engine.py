"""Gaussian belief recursion driven by a potential.

One full step is a prediction followed by a potential-driven update.
Prediction propagates the first two moments through the drift:

    mean' = mean + f_t(mean) dt
    cov'  = F cov F^T + g_inv dt,      F = I + (df/dx) dt.

The update multiplies the predicted Gaussian by the weight
exp(-V(x) dt), expands V to second order around the predicted mean and
renormalizes. Two algebraically equivalent forms are implemented.

Gain form, with S = curvature^-1 / dt + H cov H^T:

    mean' = mean + cov H^T S^-1 curvature^-1 grad_l
    cov'  = cov - cov H^T S^-1 H cov

Precision form, with P = cov^-1 + H^T curvature H dt:

    mean' = mean + P^-1 H^T grad_l dt
    cov'  = P^-1

Their agreement is a standing invariant (matrix inversion lemma) and is
exercised by the validation suite. The gain form is the default because
its inner solve lives in the usually smaller constraint dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_solve

from .errors import NonFinite
from .linalg import (
    _eye,
    spd_cholesky,
    spd_inverse,
    spd_logdet,
    spd_solve,
    symmetrize,
    woodbury_inverse,
)
from .potential import PotentialEvaluation
from .process import ItoProcessModel, transition_matrix

__all__ = [
    "GaussianBelief",
    "NormalizationDiagnostic",
    "TrajectoryRecord",
    "predict",
    "update",
    "update_precision_form",
    "normalization",
    "sample_posterior",
    "step",
]

PotentialFn = Callable[[np.ndarray, int], PotentialEvaluation]


@dataclass
class GaussianBelief:
    """Mean and covariance at an integer step, tagged by recursion phase."""

    mean: np.ndarray
    cov: np.ndarray
    step: int = 0
    tag: str = "predicted"

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.cov = symmetrize(np.atleast_2d(np.asarray(self.cov, dtype=float)))
        if self.tag not in ("predicted", "updated"):
            raise ValueError(f"unknown belief tag {self.tag!r}")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.cov))):
            raise NonFinite(f"belief at step {self.step} has non-finite entries")

    @property
    def dim(self) -> int:
        return len(self.mean)

    @classmethod
    def _trusted(cls, mean: np.ndarray, cov: np.ndarray, step: int, tag: str) -> "GaussianBelief":
        # Construction bypass for the step loop, where the arrays are
        # produced internally and the finite check has already run.
        self = object.__new__(cls)
        self.mean = mean
        self.cov = cov
        self.step = step
        self.tag = tag
        return self


@dataclass
class NormalizationDiagnostic:
    """Per-step log normalization and its potential-dependent part."""

    log_n: float
    script_n: float


@dataclass
class TrajectoryRecord:
    """Everything logged for one closed-loop step."""

    step: int
    x: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    value: float
    log_n: float
    u: Optional[np.ndarray] = None


def predict(belief: GaussianBelief, model: ItoProcessModel) -> GaussianBelief:
    """Propagate the belief one step through the process model.

    The drift and its Jacobian are evaluated at the current step index,
    producing the predicted belief at step + 1.
    """
    t = belief.step
    f = model.drift(belief.mean, t)
    trans = transition_matrix(model, belief.mean, t)
    mean = belief.mean + f * model.dt
    cov = trans @ belief.cov @ trans.T + model.g_inv * model.dt
    cov = 0.5 * (cov + cov.T)
    if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
        raise NonFinite(f"prediction to step {t + 1} has non-finite entries")
    return GaussianBelief._trusted(mean, cov, t + 1, "predicted")


def update(belief: GaussianBelief, pot: PotentialEvaluation, dt: float) -> GaussianBelief:
    """Potential-driven update in gain form.

    ``pot`` must have been evaluated at belief.mean. The posterior
    covariance never exceeds the prior one: the subtracted term is
    positive semidefinite.
    """
    sigma_nu = spd_inverse(pot.curvature)
    h = pot.H
    s = symmetrize(sigma_nu / dt + h @ belief.cov @ h.T)
    shift = belief.cov @ h.T @ spd_solve(s, sigma_nu @ pot.grad_l)
    cov = woodbury_inverse(belief.cov, h.T, sigma_nu / dt, h)
    return GaussianBelief(mean=belief.mean + shift, cov=cov, step=belief.step, tag="updated")


def update_precision_form(belief: GaussianBelief, pot: PotentialEvaluation, dt: float) -> GaussianBelief:
    """Same update through the precision matrix; used for cross-checks.

    The mean moves along the preconditioned force direction:
    mean' = mean - P^-1 (dV/dx) dt with dV/dx = -H^T grad_l.
    """
    h = pot.H
    precision = symmetrize(spd_inverse(belief.cov) + h.T @ pot.curvature @ h * dt)
    cov = spd_inverse(precision)
    shift = cov @ (h.T @ pot.grad_l) * dt
    return GaussianBelief(mean=belief.mean + shift, cov=cov, step=belief.step, tag="updated")


def normalization(belief: GaussianBelief, pot: PotentialEvaluation, dt: float) -> NormalizationDiagnostic:
    """Log of the weight normalization absorbed by the update.

    With S = sigma_nu / dt + H cov H^T and k the inner dimension,

        log_n = log|S|/2 - log|sigma_nu|/2 + (k/2) log dt + script_n dt
        script_n = V - (H^T grad_l)^T P^-1 (H^T grad_l) dt / 2.

    For a quadratic potential, log_n equals minus the log mass of
    exp(-V dt) under the predicted Gaussian exactly; the quadrature
    oracle checks this.
    """
    h = pot.H
    k = h.shape[0]
    sigma_nu = spd_inverse(pot.curvature)
    s = symmetrize(sigma_nu / dt + h @ belief.cov @ h.T)
    precision = symmetrize(spd_inverse(belief.cov) + h.T @ pot.curvature @ h * dt)
    force = h.T @ pot.grad_l
    script_n = pot.value - 0.5 * dt * float(force @ spd_solve(precision, force))
    log_n = (
        0.5 * spd_logdet(s)
        - 0.5 * spd_logdet(sigma_nu)
        + 0.5 * k * np.log(dt)
        + script_n * dt
    )
    return NormalizationDiagnostic(log_n=float(log_n), script_n=float(script_n))


def sample_posterior(belief: GaussianBelief, rng: np.random.Generator) -> np.ndarray:
    """Draw one state from the belief."""
    low = spd_cholesky(belief.cov)
    return belief.mean + low @ rng.standard_normal(belief.dim)


def _chol_lower(a: np.ndarray) -> np.ndarray:
    # Hot-loop factorization: straight LAPACK first, the jittered
    # reference path only on failure.
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return spd_cholesky(a)


def _step_core(
    mean: np.ndarray, cov: np.ndarray, pot: PotentialEvaluation, dt: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, float]:
    """Update moments, mean shift and normalization in one pass.

    Algebraically identical to update() followed by normalization(),
    but the factorizations of sigma_nu and S are shared and the
    posterior covariance doubles as P^-1 in the script_n quadratic
    form (matrix inversion lemma). Returns
    (posterior mean, posterior cov, shift, log_n, script_n).
    """
    h = pot.H
    chol_c = _chol_lower(pot.curvature)
    sigma_nu = cho_solve((chol_c, True), _eye(h.shape[0]), check_finite=False)
    hs = h @ cov
    s = sigma_nu / dt + hs @ h.T
    s = 0.5 * (s + s.T)
    chol_s = _chol_lower(s)
    gain = cho_solve((chol_s, True), hs, check_finite=False)
    shift = gain.T @ (sigma_nu @ pot.grad_l)
    cov_post = cov - hs.T @ gain
    cov_post = 0.5 * (cov_post + cov_post.T)

    force = h.T @ pot.grad_l
    script_n = pot.value - 0.5 * dt * float(force @ cov_post @ force)
    log_n = (
        float(np.sum(np.log(np.diag(chol_s))))
        + float(np.sum(np.log(np.diag(chol_c))))
        + 0.5 * h.shape[0] * np.log(dt)
        + script_n * dt
    )
    return mean + shift, cov_post, shift, log_n, script_n


def step(
    belief: GaussianBelief,
    model: ItoProcessModel,
    potential_fn: PotentialFn,
    t: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    mode: str = "sampled",
) -> tuple[GaussianBelief, TrajectoryRecord]:
    """One full recursion step: predict, evaluate potential, update, log.

    ``t``, when given, must equal the step index of the incoming belief
    (a guard against desynchronized loops). A belief tagged "updated"
    is first predicted to step + 1; one tagged "predicted" (the initial
    belief) is updated in place. The potential is always evaluated at
    the predicted mean, never at a sampled state.

    mode="sampled" draws the next state from the posterior and hands
    the recursion a belief re-centered on that draw (keeping the
    posterior covariance). mode="belief" runs the pure moment recursion.
    """
    if mode not in ("sampled", "belief"):
        raise ValueError(f"unknown mode {mode!r}")
    if t is not None and t != belief.step:
        raise ValueError(f"t={t} does not match belief step {belief.step}")
    if belief.tag == "updated":
        pred = predict(belief, model)
    else:
        pred = belief
    pot = potential_fn(pred.mean, pred.step)
    mean, cov, _, log_n, _ = _step_core(pred.mean, pred.cov, pot, model.dt)
    if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
        raise NonFinite(f"update at step {pred.step} produced non-finite moments")
    if mode == "sampled":
        x = mean + _chol_lower(cov) @ rng.standard_normal(len(mean))
        nxt = GaussianBelief._trusted(x, cov, pred.step, "updated")
    else:
        x = mean.copy()
        nxt = GaussianBelief._trusted(mean, cov, pred.step, "updated")
    record = TrajectoryRecord(
        step=pred.step, x=x, mean=mean, cov=cov, value=pot.value, log_n=log_n
    )
    return nxt, record
