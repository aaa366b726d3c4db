"""Potential functions and their one-call evaluation contract.

A potential enters the update through an inner map l(x) and an outer
function V(l). One evaluation at one point returns everything the
update needs, so the caller cannot accidentally mix evaluation points:

    l                 inner map value, k-vector
    value             V at l
    grad_l            dV/dl, k-vector
    H                 k x m matrix, H = -(dl/dx)
    curvature         d^2V/dl^2, the k x k inverse weight matrix
    counter_curvature m x m matrix with entries
                      sum_m (d^2 l^m / dx_mu dx_nu) (dV/dl^m)

The counter term exactly cancels the counter_curvature contribution in
the second-order expansion, so the update omits it; it is carried only
as a diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainViolation, NonFinite

__all__ = [
    "PotentialEvaluation",
    "eval_quadratic_penalty",
    "eval_log_barrier",
    "eval_double_well",
    "tanh_target",
    "verify_derivatives",
]


@dataclass
class PotentialEvaluation:
    """All derivative information of a potential at a single point."""

    l: np.ndarray
    value: float
    grad_l: np.ndarray
    H: np.ndarray
    curvature: np.ndarray
    counter_curvature: np.ndarray

    def __post_init__(self):
        self.l = np.atleast_1d(np.asarray(self.l, dtype=float))
        self.grad_l = np.atleast_1d(np.asarray(self.grad_l, dtype=float))
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.curvature = np.atleast_2d(np.asarray(self.curvature, dtype=float))
        self.counter_curvature = np.atleast_2d(np.asarray(self.counter_curvature, dtype=float))
        pieces = (self.l, self.value, self.grad_l, self.H, self.curvature, self.counter_curvature)
        if not all(np.all(np.isfinite(p)) for p in pieces):
            raise NonFinite("potential evaluation produced non-finite entries")

    @classmethod
    def _trusted(cls, l, value, grad_l, h, curvature, counter_curvature) -> "PotentialEvaluation":
        # Construction bypass for the builtin evaluators, whose outputs
        # are well-shaped by construction; the value is still guarded.
        if not math.isfinite(value):
            raise NonFinite("potential evaluation produced non-finite entries")
        self = object.__new__(cls)
        self.l = l
        self.value = value
        self.grad_l = grad_l
        self.H = h
        self.curvature = curvature
        self.counter_curvature = counter_curvature
        return self


@lru_cache(maxsize=None)
def _neg_eye(m: int) -> np.ndarray:
    out = -np.eye(m)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _zero_matrix(m: int) -> np.ndarray:
    out = np.zeros((m, m))
    out.setflags(write=False)
    return out


def eval_quadratic_penalty(x_hat: np.ndarray, d: np.ndarray, sigma_nu_inv: np.ndarray) -> PotentialEvaluation:
    """Quadratic penalty V = l^T sigma_nu_inv l / 2 with l = x - d."""
    x_hat = np.atleast_1d(np.asarray(x_hat, dtype=float))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    sigma_nu_inv = np.atleast_2d(np.asarray(sigma_nu_inv, dtype=float))
    l = x_hat - d
    grad_l = sigma_nu_inv @ l
    m = len(x_hat)
    return PotentialEvaluation._trusted(
        l, 0.5 * float(l @ grad_l), grad_l, _neg_eye(m), sigma_nu_inv, _zero_matrix(m)
    )


def eval_log_barrier(x_hat: np.ndarray, a: np.ndarray) -> PotentialEvaluation:
    """Log barrier V = -a^T ln(x), admissible only for x > 0 componentwise.

    The curvature diag(a_i / x_i^2) makes the implied weight matrix
    diag(x_i^2 / a_i), so the barrier stiffens as the boundary nears.
    """
    x_hat = np.atleast_1d(np.asarray(x_hat, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if np.any(a <= 0):
        raise DomainViolation("barrier weights a must be positive", point=a)
    if np.any(x_hat <= 0):
        raise DomainViolation(
            f"barrier evaluated at non-positive point {x_hat}", point=x_hat
        )
    m = len(x_hat)
    return PotentialEvaluation._trusted(
        x_hat.copy(),
        -float(a @ np.log(x_hat)),
        -a / x_hat,
        _neg_eye(m),
        np.diag(a / x_hat**2),
        _zero_matrix(m),
    )


def eval_double_well(x_hat: np.ndarray, d: np.ndarray, sigma_nu_inv: np.ndarray) -> PotentialEvaluation:
    """Componentwise double well: l_i = x_i^2 - d_i^2, V = l^T sigma_nu_inv l / 2.

    V vanishes exactly at x = +-d componentwise. The inner map is
    quadratic, so the counter_curvature is nonzero away from the wells:
    d^2 l^i / dx_i^2 = 2 gives diagonal entries 2 (sigma_nu_inv l)_i.
    """
    x_hat = np.atleast_1d(np.asarray(x_hat, dtype=float))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    sigma_nu_inv = np.atleast_2d(np.asarray(sigma_nu_inv, dtype=float))
    l = x_hat**2 - d**2
    grad_l = sigma_nu_inv @ l
    return PotentialEvaluation._trusted(
        l,
        0.5 * float(l @ grad_l),
        grad_l,
        np.diag(-2.0 * x_hat),
        sigma_nu_inv,
        np.diag(2.0 * grad_l),
    )


def tanh_target(t: float, dim: int = 2, amplitude: float = 0.2, rate: float = 0.01, center: float = 2500.0) -> np.ndarray:
    """Smooth target schedule amplitude * (1 + tanh(rate * (t - center))).

    Every component is equal; the defaults ramp each component from 0
    to 2 * amplitude = 0.4 around step 2500.
    """
    return np.full(dim, amplitude * (1.0 + np.tanh(rate * (t - center))))


def verify_derivatives(potential, x_hat: np.ndarray, step_size: float = 1e-6) -> dict:
    """Check a potential's reported derivatives against finite differences.

    ``potential`` is a callable x -> PotentialEvaluation. Three checks
    run at x_hat, each a central difference:

      jacobian   dl/dx versus -H
      gradient   dV/dx versus -H^T grad_l
      hessian    d^2V/dx^2 versus H^T curvature H + counter_curvature

    Returns a dict of relative errors plus their maximum under "max".
    """
    x_hat = np.atleast_1d(np.asarray(x_hat, dtype=float))
    here = potential(x_hat)
    m = len(x_hat)
    k = len(here.l)

    def rel(err, ref):
        return float(err / max(1.0, ref))

    jac_fd = np.empty((k, m))
    grad_fd = np.empty(m)
    for i in range(m):
        h = step_size * max(1.0, abs(x_hat[i]))
        e = np.zeros(m)
        e[i] = h
        plus, minus = potential(x_hat + e), potential(x_hat - e)
        jac_fd[:, i] = (plus.l - minus.l) / (2 * h)
        grad_fd[i] = (plus.value - minus.value) / (2 * h)

    jac_err = rel(np.abs(-here.H - jac_fd).max(), np.abs(jac_fd).max())
    grad_err = rel(np.abs(-here.H.T @ here.grad_l - grad_fd).max(), np.abs(grad_fd).max())

    # Second differences need a larger step to stay above roundoff.
    h2 = max(step_size, 3e-4)
    hess_fd = np.empty((m, m))
    for i in range(m):
        hi = h2 * max(1.0, abs(x_hat[i]))
        ei = np.zeros(m)
        ei[i] = hi
        for j in range(i, m):
            hj = h2 * max(1.0, abs(x_hat[j]))
            ej = np.zeros(m)
            ej[j] = hj
            if i == j:
                val = (potential(x_hat + ei).value - 2 * here.value + potential(x_hat - ei).value) / hi**2
            else:
                val = (
                    potential(x_hat + ei + ej).value
                    - potential(x_hat + ei - ej).value
                    - potential(x_hat - ei + ej).value
                    + potential(x_hat - ei - ej).value
                ) / (4 * hi * hj)
            hess_fd[i, j] = hess_fd[j, i] = val
    hess_model = here.H.T @ here.curvature @ here.H + here.counter_curvature
    hess_err = rel(np.abs(hess_model - hess_fd).max(), np.abs(hess_fd).max())

    report = {"jacobian": jac_err, "gradient": grad_err, "hessian": hess_err}
    report["max"] = max(report.values())
    return report
