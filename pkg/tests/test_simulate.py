"""Path simulation: schemes, seeding, grids, ensemble semantics, guards."""

import numpy as np
import pytest

import sdelasso as sd
from sdelasso.errors import DomainError, NonFiniteError
from sdelasso.models import ParamVector, get_model
from sdelasso.simulate import (
    SimConfig,
    Trajectory,
    simulate,
    simulate_ensemble,
    step_euler,
    step_milstein2,
)


def test_euler_step_without_noise_is_the_deterministic_increment():
    m = get_model("ou")
    pv = ParamVector((1.0, 2.0), (0.5,))
    # x + b(x) dt with b(3) = -(3 - 2) = -1
    assert step_euler(m, pv, 3.0, 0.01, 0.0) == 3.0 + (-1.0) * 0.01


def test_second_order_step_frozen_value():
    # geometric model, b=0.05, s=0.2, x=1, dt=0.01, z=1; every term of the
    # scheme is exactly representable, so the hand-computed rational value
    # 8164081/8000000 is exact
    m = get_model("gbm")
    pv = ParamVector((0.05,), (0.2,))
    got = step_milstein2(m, pv, 1.0, 0.01, 1.0)
    assert got == pytest.approx(1.020510125, rel=1e-12)


def test_second_order_step_reduces_toward_euler_for_constant_coefficients():
    # constant drift and diffusion: correction terms vanish, schemes coincide
    m = get_model("merton")
    pv = ParamVector((0.3,), (0.7,))
    for z in (-1.3, 0.0, 2.1):
        assert step_milstein2(m, pv, 1.5, 0.05, z) == step_euler(m, pv, 1.5, 0.05, z)


def test_paths_are_reproducible_and_keyed_by_path_id():
    m = get_model("ou")
    cfg = SimConfig(n=40, delta=0.1, x0=2.0, seed=9, refine=4)
    a = simulate(m, (1.0, 2.0, 0.5), cfg)
    b = simulate(m, (1.0, 2.0, 0.5), cfg)
    c = simulate(m, (1.0, 2.0, 0.5), cfg, path_id=1)
    assert np.array_equal(a.x, b.x)
    assert not np.array_equal(a.x, c.x)


def test_grid_is_uniform_from_time_zero():
    m = get_model("ou")
    cfg = SimConfig(n=17, delta=0.25, x0=2.0, seed=3)
    traj = simulate(m, (1.0, 2.0, 0.5), cfg)
    assert traj.x.size == 18
    assert traj.n == 17
    assert traj.x[0] == 2.0
    assert np.array_equal(traj.t, np.arange(18.0) * 0.25)
    assert traj.delta == 0.25


def test_refinement_changes_the_draw_sequence():
    m = get_model("ou")
    theta = (1.0, 2.0, 0.5)
    coarse = simulate(m, theta, SimConfig(n=30, delta=0.1, x0=2.0, seed=5, refine=1))
    fine = simulate(m, theta, SimConfig(n=30, delta=0.1, x0=2.0, seed=5, refine=2))
    assert not np.array_equal(coarse.x, fine.x)


def test_schemes_differ_on_state_dependent_noise():
    m = get_model("gbm")
    theta = (0.05, 0.2)
    e = simulate(m, theta, SimConfig(n=30, delta=0.1, x0=1.0, seed=5, scheme="euler"))
    m2 = simulate(
        m, theta, SimConfig(n=30, delta=0.1, x0=1.0, seed=5, scheme="milstein2")
    )
    assert not np.array_equal(e.x, m2.x)


def test_ensemble_rows_equal_individual_paths():
    m = get_model("ou")
    theta = (1.0, 2.0, 0.5)
    cfg = SimConfig(n=20, delta=0.1, x0=2.0, seed=11, refine=3)
    ens = simulate_ensemble(m, theta, cfg, 7)
    assert ens.shape == (7, 21)
    for k in range(7):
        assert np.array_equal(ens[k], simulate(m, theta, cfg, path_id=k).x)


def test_ensemble_retry_paths_match_the_scalar_routine():
    # a design aggressive enough that some paths leave the state space and
    # go through the retry rule; rows must still equal the scalar routine
    m = get_model("cir85")
    theta = (0.0, 0.0, 3.0)
    cfg = SimConfig(n=12, delta=0.5, x0=0.5, seed=2, refine=1, scheme="euler")
    ens = simulate_ensemble(m, theta, cfg, 20)
    for k in range(20):
        assert np.array_equal(ens[k], simulate(m, theta, cfg, path_id=k).x)


def test_mean_reversion_matches_the_closed_form_mean():
    # E X_T = mu + (x0 - mu) exp(-k T) for dX = -k (X - mu) dt + s dW
    m = get_model("ou")
    k, mu, s, x0, T = 1.2, 3.0, 0.4, 0.5, 2.0
    cfg = SimConfig(n=40, delta=0.05, x0=x0, seed=77, refine=10)
    ens = simulate_ensemble(m, (k, mu, s), cfg, 3000)
    xT = ens[:, -1]
    want = mu + (x0 - mu) * np.exp(-k * T)
    se = xT.std(ddof=1) / np.sqrt(xT.size)
    assert abs(xT.mean() - want) < 5.0 * se


def test_inadmissible_start_raises():
    m = get_model("ou")
    with pytest.raises(DomainError):
        simulate(m, (1.0, 2.0, -1.0), SimConfig(n=10, delta=0.1, x0=2.0, seed=0))


def test_escape_after_retries_raises_with_the_step_index():
    # square-root noise, no drift, tiny start: some draw sequence exhausts
    # the per-step retries and must report where
    m = get_model("cir85")
    cfg = SimConfig(n=50, delta=0.5, x0=0.04, seed=11, refine=1, scheme="euler")
    with pytest.raises(DomainError) as exc:
        simulate(m, (0.0, 0.0, 3.0), cfg)
    assert exc.value.step_index == 21


def test_overflowing_scheme_raises_non_finite():
    m = get_model("gbm")
    cfg = SimConfig(n=2, delta=1.0, x0=1.0, seed=0, refine=1, scheme="euler")
    with pytest.raises(NonFiniteError):
        simulate(m, (1e308, 0.2), cfg)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=0, delta=0.1, x0=1.0, seed=0),
        dict(n=10, delta=0.0, x0=1.0, seed=0),
        dict(n=10, delta=np.inf, x0=1.0, seed=0),
        dict(n=10, delta=0.1, x0=np.nan, seed=0),
        dict(n=10, delta=0.1, x0=1.0, seed=0, refine=0),
        dict(n=10, delta=0.1, x0=1.0, seed=0, scheme="rk4"),
        dict(n=10, delta=0.1, x0=1.0, seed=-1),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(t=np.array([0.0]), x=np.array([1.0]), delta=0.1)
    with pytest.raises(ValueError):
        Trajectory(t=np.array([0.0, 0.1]), x=np.array([1.0, 1.1]), delta=-0.1)
    with pytest.raises(ValueError):
        Trajectory(t=np.array([0.0, 0.1, 0.2]), x=np.array([1.0, 1.1]), delta=0.1)


def test_ensemble_validates_path_count():
    m = get_model("ou")
    cfg = SimConfig(n=5, delta=0.1, x0=2.0, seed=0)
    with pytest.raises(ValueError):
        simulate_ensemble(m, (1.0, 2.0, 0.5), cfg, 0)
