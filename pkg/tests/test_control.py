import numpy as np
import pytest

from conftest import random_spd, rel_err
from sqc import engine, process
from sqc.control import ControlConfig, control_input, run_closed_loop, run_scenario
from sqc.errors import NotPositiveDefinite, ValidationError
from sqc.potential import eval_log_barrier, eval_quadratic_penalty


def zero_model(dim, g_inv=None):
    drift, jac = process.make_drift("zero", None, dim)
    g = np.eye(dim) * 0.01 if g_inv is None else g_inv
    return process.ItoProcessModel(dim=dim, drift=drift, drift_jacobian=jac, g_inv=g)


def test_identity_config_reproduces_update_shift():
    # With B = R = I the input must be exactly the update's mean shift.
    rng = np.random.default_rng(31)
    for _ in range(20):
        m = int(rng.integers(1, 5))
        cfg = ControlConfig(B=np.eye(m), R=np.eye(m))
        belief = engine.GaussianBelief(mean=rng.standard_normal(m), cov=random_spd(rng, m))
        pot = eval_quadratic_penalty(belief.mean, rng.standard_normal(m), random_spd(rng, m))
        dt = float(rng.uniform(0.2, 1.5))
        u = control_input(belief, pot, cfg, dt)
        shift = engine.update(belief, pot, dt).mean - belief.mean
        assert rel_err(u, shift) < 1e-10


def test_wide_input_matrix_takes_least_effort_solution():
    # One state, two actuators: with R = I the minimum-norm u puts the
    # whole shift on the actuator that actually reaches the state.
    cfg = ControlConfig(B=np.array([[1.0, 0.0]]), R=np.eye(2))
    belief = engine.GaussianBelief(mean=[0.7], cov=[[0.5]])
    pot = eval_quadratic_penalty(belief.mean, [0.0], [[4.0]])
    u = control_input(belief, pot, cfg, 1.0)
    shift = engine.update(belief, pot, 1.0).mean - belief.mean
    assert u.shape == (2,)
    assert u[0] == pytest.approx(shift[0], rel=1e-12)
    assert u[1] == pytest.approx(0.0, abs=1e-15)


def test_nonuniform_effort_weight_still_reproduces_shift():
    rng = np.random.default_rng(33)
    b = np.array([[1.0, 0.5], [0.0, 1.0]])
    cfg = ControlConfig(B=b, R=np.diag([2.0, 0.5]))
    belief = engine.GaussianBelief(mean=rng.standard_normal(2), cov=random_spd(rng, 2))
    pot = eval_quadratic_penalty(belief.mean, [0.1, -0.3], random_spd(rng, 2))
    u = control_input(belief, pot, cfg, 1.0)
    shift = engine.update(belief, pot, 1.0).mean - belief.mean
    assert rel_err(b @ u, shift) < 1e-10


def test_config_rejects_indefinite_effort_weight():
    with pytest.raises(NotPositiveDefinite):
        ControlConfig(B=np.eye(2), R=np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_config_rejects_rank_deficient_input_matrix():
    # B without full row rank leaves states no input can shift.
    with pytest.raises(NotPositiveDefinite):
        ControlConfig(B=np.array([[1.0], [0.0]]), R=np.eye(1))


def test_run_closed_loop_record_layout():
    model = zero_model(2)
    cfg = ControlConfig(B=np.eye(2), R=np.eye(2))
    target = np.array([0.2, -0.1])

    def potential_fn(x_hat, t):
        return eval_quadratic_penalty(x_hat, target, np.diag([100.0, 100.0]))

    initial = engine.GaussianBelief(mean=[0.5, 0.5], cov=np.eye(2), step=0, tag="predicted")
    result = run_closed_loop(model, potential_fn, initial, cfg, 10, np.random.default_rng(0))
    assert result.completed and result.failure is None
    assert len(result.records) == 11
    assert [r.step for r in result.records] == list(range(11))
    for r in result.records:
        assert r.x.shape == (2,) and r.u.shape == (2,) and r.cov.shape == (2, 2)
        assert np.isfinite(r.log_n)


def test_run_closed_loop_belief_mode_is_deterministic():
    model = zero_model(1)
    cfg = ControlConfig(B=np.eye(1), R=np.eye(1))

    def potential_fn(x_hat, t):
        return eval_quadratic_penalty(x_hat, [0.0], [[50.0]])

    initial = engine.GaussianBelief(mean=[1.0], cov=[[1.0]], step=0, tag="predicted")
    a = run_closed_loop(model, potential_fn, initial, cfg, 30, None, mode="belief")
    b = run_closed_loop(model, potential_fn, initial, cfg, 30, None, mode="belief")
    np.testing.assert_array_equal(a.records[-1].x, b.records[-1].x)
    np.testing.assert_array_equal(a.records[-1].x, a.records[-1].mean)
    # The penalty drags the belief mean toward the target.
    assert abs(a.records[-1].mean[0]) < 1e-3


def test_run_closed_loop_reports_domain_failure():
    # A hard inward drift shoves the predicted mean through the barrier
    # wall; the run must stop and say where.
    drift, jac = process.make_drift("linear", {"A": [[-5.0]]}, 1)
    model = process.ItoProcessModel(dim=1, drift=drift, drift_jacobian=jac, g_inv=[[1e-6]])

    def potential_fn(x_hat, t):
        return eval_log_barrier(x_hat, [0.1])

    initial = engine.GaussianBelief(mean=[0.1], cov=[[1e-4]], step=0, tag="predicted")
    cfg = ControlConfig(B=np.eye(1), R=np.eye(1))
    result = run_closed_loop(model, potential_fn, initial, cfg, 50, None, mode="belief")
    assert not result.completed
    assert result.failed_step is not None and result.failed_step <= 5
    assert "non-positive" in result.failure
    assert len(result.records) == result.failed_step


def test_run_closed_loop_argument_guards():
    model = zero_model(1)
    cfg = ControlConfig(B=np.eye(1), R=np.eye(1))
    fn = lambda x, t: eval_quadratic_penalty(x, [0.0], [[1.0]])
    predicted = engine.GaussianBelief(mean=[0.0], cov=[[1.0]], step=0, tag="predicted")
    updated = engine.GaussianBelief(mean=[0.0], cov=[[1.0]], step=0, tag="updated")
    with pytest.raises(ValidationError, match="predicted"):
        run_closed_loop(model, fn, updated, cfg, 5, np.random.default_rng(0))
    with pytest.raises(ValidationError, match="horizon"):
        run_closed_loop(model, fn, predicted, cfg, 0, np.random.default_rng(0))
    with pytest.raises(ValidationError, match="mode"):
        run_closed_loop(model, fn, predicted, cfg, 5, np.random.default_rng(0), mode="exact")
    with pytest.raises(ValidationError, match="generator"):
        run_closed_loop(model, fn, predicted, cfg, 5, None, mode="sampled")


def test_run_scenario_bundled_penalty():
    result = run_scenario("penalty", overrides={"horizon": 50}, seed=3)
    assert result.completed and len(result.records) == 51
    again = run_scenario("penalty", overrides={"horizon": 50}, seed=3)
    np.testing.assert_array_equal(result.records[-1].x, again.records[-1].x)
    other = run_scenario("penalty", overrides={"horizon": 50}, seed=4)
    assert not np.array_equal(result.records[-1].x, other.records[-1].x)


def test_run_scenario_rejects_unknown_name():
    with pytest.raises(ValidationError, match="bundled"):
        run_scenario("quadwell")
