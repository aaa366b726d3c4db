"""Independent verification machinery.

Three oracles gate the main recursion, each computing the same
quantities by a route that shares no code with the engine:

* weighted_gaussian_moments integrates x and x x^T against
  exp(-V(x) dt) N(x; mean, cov) with Gauss-Hermite quadrature. For a
  quadratic V the update must reproduce these moments exactly.
* fokker_planck_residual evolves a 1-D density one step through the
  explicit transition kernel and measures how far the finite-time
  increment is from the continuous-limit drift-diffusion-sink operator.
  The residual must shrink linearly with dt.
* identity_suite brute-force checks the update-form equivalences, the
  determinant identity and gauge invariance on randomized instances.

The oracles ship with the library (not the test tree) so any scenario
configuration can be audited: the second-order expansion behind the
update has uncharacterized error for non-quadratic potentials, and the
quadrature oracle quantifies it per run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.hermite import hermgauss

from . import engine, linalg
from .errors import DomainViolation, MassLoss, QuadratureDomain, ValidationError
from .potential import PotentialEvaluation
from .process import ItoProcessModel

__all__ = [
    "Grid1D",
    "weighted_gaussian_moments",
    "fokker_planck_residual",
    "identity_suite",
    "IdentityReport",
]


# ---------------------------------------------------------------------------
# Gauss-Hermite quadrature of weighted Gaussian moments (dims 1 and 2).

def _gh_nodes(mean: np.ndarray, cov: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product Gauss-Hermite nodes and weights for N(mean, cov).

    Physicists' nodes z are mapped through x = mean + sqrt(2) L z with
    L the Cholesky factor, and the weights are normalized to sum to 1,
    so sum w_i f(x_i) approximates E[f(X)] under the Gaussian.
    """
    z, w = hermgauss(order)
    m = len(mean)
    low = linalg.spd_cholesky(cov)
    if m == 1:
        zs = z[:, None]
        ws = w
    elif m == 2:
        za, zb = np.meshgrid(z, z, indexing="ij")
        zs = np.column_stack([za.ravel(), zb.ravel()])
        ws = np.outer(w, w).ravel()
    else:
        raise ValidationError("quadrature oracle supports dims 1 and 2 only")
    xs = mean[None, :] + np.sqrt(2.0) * zs @ low.T
    return xs, ws / np.pi ** (m / 2.0)


def _log_gauss(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Row-wise log density of N(mean, cov)."""
    diff = x - mean[None, :]
    sol = linalg.spd_solve(cov, diff.T).T
    quad = np.sum(diff * sol, axis=1)
    return -0.5 * (quad + linalg.spd_logdet(cov) + len(mean) * np.log(2.0 * np.pi))


def _potential_values(potential, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """V at each node plus a mask of nodes outside the potential domain."""
    vals = np.empty(len(xs))
    outside = np.zeros(len(xs), dtype=bool)
    for i, x in enumerate(xs):
        try:
            res = potential(x)
        except DomainViolation:
            outside[i] = True
            vals[i] = np.inf
            continue
        vals[i] = res.value if isinstance(res, PotentialEvaluation) else float(res)
    return vals, outside


def weighted_gaussian_moments(
    x_hat: np.ndarray,
    sigma: np.ndarray,
    potential,
    dt: float = 1.0,
    quad_order: int = 64,
):
    """Moments of the weighted density exp(-V(x) dt) N(x; x_hat, sigma).

    ``potential`` maps a point to a PotentialEvaluation (or directly to
    the scalar V). Returns (mean, cov, log_norm) where log_norm is the
    log of the weight mass integral.

    Quadrature runs twice: a first pass on the prior Gaussian locates
    the posterior, a second pass re-centered there integrates the
    near-constant ratio, which keeps the error at roundoff level even
    for strongly tilted weights. Nodes outside the potential domain are
    dropped; if they carry more than 1e-6 of the prior mass the result
    would be meaningless and QuadratureDomain is raised.
    """
    x_hat = np.atleast_1d(np.asarray(x_hat, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))

    xs, ws = _gh_nodes(x_hat, sigma, quad_order)
    vals, outside = _potential_values(potential, xs)
    lost = float(np.sum(ws[outside]))
    if lost > 1e-6:
        raise QuadratureDomain(
            f"potential domain truncates {lost:.3g} of the Gaussian mass"
        )
    keep = ~outside
    log_w = -vals[keep] * dt
    shiftv = log_w.max()
    w_eff = ws[keep] * np.exp(log_w - shiftv)
    mass = w_eff.sum()
    mean1 = (w_eff[:, None] * xs[keep]).sum(axis=0) / mass
    diff = xs[keep] - mean1[None, :]
    cov1 = (w_eff[:, None, None] * (diff[:, :, None] * diff[:, None, :])).sum(axis=0) / mass
    cov1 = linalg.symmetrize(cov1)

    # Second pass: importance quadrature centered on the first estimate.
    ref_cov = linalg.symmetrize(1.5 * cov1)
    ys, wy = _gh_nodes(mean1, ref_cov, quad_order)
    vals2, outside2 = _potential_values(potential, ys)
    keep2 = ~outside2
    log_int = (
        -vals2[keep2] * dt
        + _log_gauss(ys[keep2], x_hat, sigma)
        - _log_gauss(ys[keep2], mean1, ref_cov)
    )
    shift2 = log_int.max()
    w2 = wy[keep2] * np.exp(log_int - shift2)
    mass2 = w2.sum()
    mean = (w2[:, None] * ys[keep2]).sum(axis=0) / mass2
    diff2 = ys[keep2] - mean[None, :]
    cov = (w2[:, None, None] * (diff2[:, :, None] * diff2[:, None, :])).sum(axis=0) / mass2
    log_norm = float(np.log(mass2) + shift2)
    return mean, linalg.symmetrize(cov), log_norm


# ---------------------------------------------------------------------------
# One-step kernel evolution versus the continuous-limit operator (1-D).

@dataclass
class Grid1D:
    """Uniform 1-D grid for the kernel-evolution check."""

    lower: float
    upper: float
    n: int

    def __post_init__(self):
        if self.n < 64:
            raise ValidationError("Grid1D needs at least 64 points")
        if not self.upper > self.lower:
            raise ValidationError("Grid1D needs upper > lower")

    @property
    def spacing(self) -> float:
        return (self.upper - self.lower) / (self.n - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.n)


def _derivative(values: np.ndarray, h: float, order: int) -> np.ndarray:
    """Fourth-order central differences with zero extension at the edges.

    The densities handled here decay to ~1e-14 at the grid edges, so
    zero padding does not disturb the interior.
    """
    padded = np.pad(values, 2)
    if order == 1:
        out = (-padded[4:] + 8 * padded[3:-1] - 8 * padded[1:-3] + padded[:-4]) / (12 * h)
    elif order == 2:
        out = (
            -padded[4:] + 16 * padded[3:-1] - 30 * padded[2:-2] + 16 * padded[1:-3] - padded[:-4]
        ) / (12 * h * h)
    else:
        raise ValueError("order must be 1 or 2")
    return out


def fokker_planck_residual(
    model: ItoProcessModel,
    potential,
    grid: Grid1D,
    density: np.ndarray,
    dt: float,
    t: int = 0,
) -> float:
    """L2 residual between the kernel step and the continuous limit.

    The density is pushed one step of size dt through the explicit
    kernel N(x'; x + f(x) dt, g_inv dt) weighted by exp(-U(x') dt), and
    the finite increment (P' - P)/dt is compared with

        -(f P)' + (g_inv P)'' / 2 - U P.

    ``potential`` maps a grid point to the scalar U (or a
    PotentialEvaluation); pass None for U = 0. Raises MassLoss when the
    unweighted kernel quadrature loses more than 1e-4 of the mass,
    which signals a grid too small for the diffusion scale.
    """
    if dt > 1e-2:
        raise ValidationError("kernel residual check expects dt <= 1e-2")
    x = grid.points()
    h = grid.spacing
    density = np.asarray(density, dtype=float)
    if density.shape != x.shape:
        raise ValidationError("density must be sampled on the grid")
    if np.any(density < 0):
        raise ValidationError("density must be nonnegative")

    g_inv = float(model.g_inv[0, 0])
    drift = np.array([model.drift(np.array([xi]), t)[0] for xi in x])
    if potential is None:
        u = np.zeros_like(x)
    else:
        u, outside = _potential_values(potential, x[:, None])
        if np.any(outside):
            raise ValidationError("potential undefined on part of the grid")

    # Trapezoid weights; spectrally accurate for smooth decaying integrands.
    quad_w = np.full(grid.n, h)
    quad_w[0] = quad_w[-1] = h / 2.0

    var = g_inv * dt
    centers = x + drift * dt
    kernel = np.exp(-((x[:, None] - centers[None, :]) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)
    diffused = kernel @ (quad_w * density)

    mass_in = float(quad_w @ density)
    mass_out = float(quad_w @ diffused)
    if abs(mass_out - mass_in) > 1e-4 * max(mass_in, 1e-300):
        raise MassLoss(
            f"kernel quadrature changed the mass by {abs(mass_out - mass_in):.3g} "
            f"(relative {abs(mass_out / mass_in - 1):.3g}); enlarge the grid"
        )
    evolved = np.exp(-u * dt) * diffused

    increment = (evolved - density) / dt
    rhs = (
        -_derivative(drift * density, h, 1)
        + 0.5 * _derivative(g_inv * density, h, 2)
        - u * density
    )
    residual = increment - rhs
    return float(np.sqrt(quad_w @ residual**2))


# ---------------------------------------------------------------------------
# Randomized identity suite.

@dataclass
class IdentityReport:
    """Outcome of the randomized identity suite."""

    trials: int
    checked: int
    skipped: int
    failures: list = field(default_factory=list)
    worst: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.checked > 0 and not self.failures

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "checked": self.checked,
            "skipped": self.skipped,
            "failures": self.failures,
            "worst": self.worst,
            "passed": self.passed,
        }


def _random_spd(rng: np.random.Generator, n: int, eig_low: float = 0.3, eig_high: float = 3.0) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = rng.uniform(eig_low, eig_high, size=n)
    return linalg.symmetrize(q @ np.diag(eigs) @ q.T)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-30)
    return float(np.max(np.abs(a - b)) / scale)


def identity_suite(
    seed: int = 0,
    trials: int = 500,
    tol: float = 1e-8,
    cond_limit: float = 1e7,
    update_fn: Optional[Callable] = None,
    precision_update_fn: Optional[Callable] = None,
) -> IdentityReport:
    """Randomized verification of the update algebra.

    Per trial (random dims 1..6, well-conditioned SPD inputs) checks:

      a. gain-form and precision-form updates agree,
      b. the two covariance expressions agree (inversion lemma),
      c. the determinant identity
         log|S| - log|sigma_nu / dt| - log|cov| = log|P|
         with S = sigma_nu/dt + H cov H^T and P = cov^-1 + H^T curv H dt,
      d. adding a constant to V leaves mean and covariance unchanged
         and shifts log_n by exactly that constant times dt.

    Instances whose prior covariance is ill-conditioned beyond
    cond_limit are skipped, not failed. Failures are reported, never
    raised. Alternative update implementations can be injected for
    mutation testing.
    """
    rng = np.random.default_rng(seed)
    upd = update_fn or engine.update
    upd_prec = precision_update_fn or engine.update_precision_form
    report = IdentityReport(trials=trials, checked=0, skipped=0)
    worst = {"forms_mean": 0.0, "forms_cov": 0.0, "cov_two_forms": 0.0, "determinant": 0.0, "gauge": 0.0}

    for trial in range(trials):
        m = int(rng.integers(1, 7))
        k = int(rng.integers(1, 7))
        cov = _random_spd(rng, m)
        if np.linalg.cond(cov) > cond_limit:
            report.skipped += 1
            continue
        curvature = _random_spd(rng, k)
        h = rng.standard_normal((k, m))
        if trial % 50 == 1:
            h = np.zeros((k, m))  # degenerate case stays in rotation
        grad_l = rng.standard_normal(k)
        value = float(rng.normal())
        dt = float(rng.choice([0.25, 0.5, 1.0]))
        mean = rng.standard_normal(m)
        pot = PotentialEvaluation(
            l=np.zeros(k), value=value, grad_l=grad_l, H=h,
            curvature=curvature, counter_curvature=np.zeros((m, m)),
        )
        belief = engine.GaussianBelief(mean=mean, cov=cov, step=0, tag="predicted")
        report.checked += 1

        ga = upd(belief, pot, dt)
        pr = upd_prec(belief, pot, dt)
        e_mean = _rel(ga.mean, pr.mean)
        e_cov = _rel(ga.cov, pr.cov)

        sigma_nu = linalg.spd_inverse(curvature)
        direct = linalg.spd_inverse(linalg.symmetrize(linalg.spd_inverse(cov) + h.T @ curvature @ h * dt))
        wood = linalg.woodbury_inverse(cov, h.T, sigma_nu / dt, h)
        e_two = _rel(direct, wood)

        s = linalg.symmetrize(sigma_nu / dt + h @ cov @ h.T)
        p = linalg.symmetrize(linalg.spd_inverse(cov) + h.T @ curvature @ h * dt)
        lhs = linalg.spd_logdet(s) - linalg.spd_logdet(sigma_nu / dt) - linalg.spd_logdet(cov)
        e_det = abs(np.expm1(lhs - linalg.spd_logdet(p)))

        shifted = PotentialEvaluation(
            l=pot.l, value=value + 7.25, grad_l=grad_l, H=h,
            curvature=curvature, counter_curvature=np.zeros((m, m)),
        )
        gb = upd(belief, shifted, dt)
        n0 = engine.normalization(belief, pot, dt)
        n1 = engine.normalization(belief, shifted, dt)
        e_gauge = max(
            _rel(ga.mean, gb.mean),
            _rel(ga.cov, gb.cov),
            abs((n1.log_n - n0.log_n) - 7.25 * dt) / max(1.0, abs(n0.log_n)),
        )

        errs = {
            "forms_mean": e_mean,
            "forms_cov": e_cov,
            "cov_two_forms": e_two,
            "determinant": e_det,
            "gauge": e_gauge,
        }
        for name, err in errs.items():
            worst[name] = max(worst[name], err)
            if err > tol:
                report.failures.append({"trial": trial, "check": name, "error": err, "dims": (m, k)})
    report.worst = worst
    return report
