import numpy as np
import pytest

from conftest import random_spd, rel_err
from sqc import engine, oracle, process
from sqc.errors import MassLoss, QuadratureDomain, ValidationError
from sqc.potential import eval_log_barrier, eval_quadratic_penalty


def test_quadrature_scalar_closed_form():
    # exp(-(x-1)^2/2) against N(0,1): posterior N(1/2, 1/2), mass
    # exp(-1/4)/sqrt(2).
    mean, cov, log_norm = oracle.weighted_gaussian_moments(
        np.array([0.0]), np.array([[1.0]]),
        lambda x: eval_quadratic_penalty(x, np.array([1.0]), np.array([[1.0]])),
    )
    np.testing.assert_allclose(mean, [0.5], atol=1e-12)
    np.testing.assert_allclose(cov, [[0.5]], atol=1e-12)
    assert log_norm == pytest.approx(-0.25 - 0.5 * np.log(2.0), abs=1e-12)


def test_quadrature_matches_engine_on_correlated_quadratic():
    mean0 = np.array([0.3, -0.2])
    cov0 = np.array([[1.0, 0.3], [0.3, 0.7]])
    d = np.array([1.0, 0.0])
    weights = np.array([[2.0, 0.0], [0.0, 0.5]])
    dt = 0.5

    belief = engine.GaussianBelief(mean=mean0, cov=cov0)
    pot = eval_quadratic_penalty(mean0, d, weights)
    upd = engine.update(belief, pot, dt)
    diag = engine.normalization(belief, pot, dt)
    qmean, qcov, qlog = oracle.weighted_gaussian_moments(
        mean0, cov0, lambda x: eval_quadratic_penalty(x, d, weights), dt
    )
    assert rel_err(upd.mean, qmean) < 1e-10
    assert rel_err(upd.cov, qcov) < 1e-10
    assert diag.log_n == pytest.approx(-qlog, abs=1e-10)


def test_quadrature_rejects_truncated_domain():
    # A sixth of the prior mass sits below zero where the barrier is
    # undefined; the oracle must refuse rather than silently renormalize.
    with pytest.raises(QuadratureDomain):
        oracle.weighted_gaussian_moments(
            np.array([0.5]), np.array([[0.25]]),
            lambda x: eval_log_barrier(x, np.array([2.0])),
        )


def test_quadrature_dim_limit():
    with pytest.raises(ValidationError):
        oracle.weighted_gaussian_moments(
            np.zeros(3), np.eye(3), lambda x: eval_quadratic_penalty(x, np.zeros(3), np.eye(3))
        )


def test_identity_suite_clean_run():
    report = oracle.identity_suite(seed=0, trials=120)
    assert report.passed
    assert report.checked == 120
    assert not report.failures
    assert max(report.worst.values()) < 1e-10
    d = report.to_dict()
    assert d["passed"] and d["trials"] == 120


def test_identity_suite_catches_corrupted_gain_update():
    def corrupted(belief, pot, dt):
        out = engine.update(belief, pot, dt)
        return engine.GaussianBelief(
            mean=out.mean + 1e-4 * np.linalg.norm(out.mean), cov=out.cov,
            step=out.step, tag=out.tag,
        )

    report = oracle.identity_suite(seed=0, trials=60, update_fn=corrupted)
    assert not report.passed
    assert any(f["check"] == "forms_mean" for f in report.failures)


def test_identity_suite_catches_corrupted_precision_update():
    def corrupted(belief, pot, dt):
        out = engine.update_precision_form(belief, pot, dt)
        return engine.GaussianBelief(
            mean=out.mean, cov=out.cov * (1 + 1e-4), step=out.step, tag=out.tag
        )

    report = oracle.identity_suite(seed=0, trials=60, precision_update_fn=corrupted)
    assert not report.passed
    assert any(f["check"] == "forms_cov" for f in report.failures)


def free_diffusion_model():
    drift, jac = process.make_drift("zero", None, 1)
    return process.ItoProcessModel(dim=1, drift=drift, drift_jacobian=jac, g_inv=[[1.0]])


def standard_gaussian(grid):
    x = grid.points()
    return np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)


def test_grid_validation():
    with pytest.raises(ValidationError):
        oracle.Grid1D(-1.0, 1.0, 32)
    with pytest.raises(ValidationError):
        oracle.Grid1D(1.0, -1.0, 128)
    grid = oracle.Grid1D(0.0, 1.0, 101)
    assert grid.spacing == pytest.approx(0.01)
    assert len(grid.points()) == 101


def test_kernel_residual_shrinks_linearly_with_dt():
    grid = oracle.Grid1D(-9.0, 9.0, 1024)
    density = standard_gaussian(grid)
    model = free_diffusion_model()
    r_coarse = oracle.fokker_planck_residual(model, None, grid, density, 1e-2)
    r_fine = oracle.fokker_planck_residual(model, None, grid, density, 5e-3)
    assert 1.5 < r_coarse / r_fine < 3.0
    assert r_fine < 1e-2


def test_kernel_residual_constant_potential_mass_decay():
    grid = oracle.Grid1D(-9.0, 9.0, 1024)
    density = standard_gaussian(grid)
    model = free_diffusion_model()
    r1 = oracle.fokker_planck_residual(model, lambda x: 0.5, grid, density, 1e-2)
    r2 = oracle.fokker_planck_residual(model, lambda x: 0.5, grid, density, 5e-3)
    assert 1.5 < r1 / r2 < 3.0


def test_kernel_residual_guards():
    grid = oracle.Grid1D(-9.0, 9.0, 1024)
    density = standard_gaussian(grid)
    model = free_diffusion_model()
    with pytest.raises(ValidationError):
        oracle.fokker_planck_residual(model, None, grid, density, 0.5)
    with pytest.raises(ValidationError):
        oracle.fokker_planck_residual(model, None, grid, density[:-1], 1e-2)
    # Too narrow: the kernel leaks mass over the edge.
    narrow = oracle.Grid1D(-2.0, 2.0, 256)
    with pytest.raises(MassLoss):
        oracle.fokker_planck_residual(
            model, None, narrow, standard_gaussian(narrow), 1e-2
        )
