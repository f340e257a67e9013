"""Adaptive-LASSO stage: weights, coordinate descent, certificates, select."""

import dataclasses

import numpy as np
import pytest

from oracle_penalized import random_instance, solve_by_enumeration
from sdelasso.alasso import (
    WEIGHT_CAP,
    PenaltyWeights,
    kkt_check,
    make_weights,
    penalized_objective,
    select,
    solve_penalized,
)
from sdelasso.errors import NotPositiveDefiniteError
from sdelasso.models import ParamVector, get_model
from sdelasso.qmle import FitOptions, fit
from sdelasso.simulate import SimConfig, simulate

# --- weights -----------------------------------------------------------------


def test_weights_follow_the_inverse_power_rule():
    w = make_weights(ParamVector((2.0, 0.5), (1.0,)), 1.0, 1.0)
    assert w.lam == (0.5, 2.0)
    assert w.gam == (1.0,)
    assert np.array_equal(w.w, np.array([0.5, 2.0, 1.0]))


def test_weight_exponents_apply_per_block():
    w = make_weights(ParamVector((2.0,), (2.0,)), 1.0, 1.0, delta1=2.0, delta2=1.0)
    assert w.lam == (0.25,)
    assert w.gam == (0.5,)


def test_zero_intensity_means_zero_weights_even_at_zero_estimates():
    w = make_weights(ParamVector((0.0, 1.0), (0.0,)), 0.0, 0.0)
    assert w.lam == (0.0, 0.0) and w.gam == (0.0,)


def test_vanishing_estimates_get_the_weight_cap():
    w = make_weights(ParamVector((1e-13, 1.0), (1e-9,)), 1.0, 1.0, delta2=2.0)
    assert w.lam[0] == WEIGHT_CAP  # below the magnitude floor
    assert w.lam[1] == 1.0
    assert w.gam[0] == WEIGHT_CAP  # 1e18 capped


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(lambda0=-1.0, gamma0=1.0),
        dict(lambda0=1.0, gamma0=np.inf),
        dict(lambda0=1.0, gamma0=1.0, delta1=0.0),
        dict(lambda0=1.0, gamma0=1.0, delta2=-2.0),
    ],
)
def test_weight_rule_rejects_bad_intensities_and_exponents(kwargs):
    with pytest.raises(ValueError):
        make_weights(ParamVector((1.0,), (1.0,)), **kwargs)


def test_weight_container_rejects_negative_entries():
    with pytest.raises(ValueError):
        PenaltyWeights(lam=(-0.1,), gam=(1.0,))


# --- coordinate descent ------------------------------------------------------


def test_scalar_problem_soft_thresholds_exactly():
    theta, info = solve_penalized(np.array([[1.0]]), np.array([2.0]), np.array([1.0]))
    assert theta[0] == 1.5  # 2 - 1/(2*1), exactly
    assert info.converged and info.kkt_ok


def test_zero_weights_return_the_center_bitwise():
    rng = np.random.default_rng(0)
    hess, center, _ = random_instance(12, d=5)
    theta, info = solve_penalized(hess, center, np.zeros(5))
    assert np.array_equal(theta, center)
    assert info.converged and info.kkt_ok and info.sweeps == 1


def test_matches_sign_pattern_enumeration_on_seeded_instances():
    for seed in range(50):
        hess, center, w = random_instance(seed)
        x_oracle, f_oracle = solve_by_enumeration(hess, center, w)
        x_cd, info = solve_penalized(hess, center, w)
        f_cd = penalized_objective(hess, center, w, x_cd)
        assert info.kkt_ok, seed
        assert abs(f_cd - f_oracle) <= 1e-6 * (1.0 + abs(f_oracle)), seed
        assert np.max(np.abs(x_cd - x_oracle)) <= 1e-5, seed


def test_discarded_coordinates_are_exact_zeros():
    hess, center, _ = random_instance(4)
    w = np.full(4, 50.0)  # heavy enough to kill several coordinates
    theta, info = solve_penalized(hess, center, w)
    assert info.kkt_ok
    assert np.any(theta == 0.0)  # bitwise zero, not epsilon-small


def test_debug_mode_verifies_descent_per_update():
    for seed in (0, 7, 23):
        hess, center, w = random_instance(seed)
        theta, _ = solve_penalized(hess, center, w, debug=True)
        ref, _ = solve_penalized(hess, center, w)
        assert np.array_equal(theta, ref)


def test_certificate_accepts_the_optimum_and_rejects_perturbations():
    hess, center, w = random_instance(1)
    theta, _ = solve_penalized(hess, center, w)
    ok, worst = kkt_check(hess, center, w, theta)
    assert ok and worst <= 0.0
    bumped = theta.copy()
    j = int(np.argmax(np.abs(theta)))
    bumped[j] += 1e-3
    ok_b, worst_b = kkt_check(hess, center, w, bumped)
    assert not ok_b and worst_b > 0.0


def test_restricted_rerun_reproduces_the_active_coordinates():
    # freeze the solved zero set, delete it, and condition the center on it:
    # with zero weights on the active block the restricted quadratic's
    # minimizer is that conditioned center, which must match the full solve
    hess, center, _ = random_instance(9)
    w = np.array([0.0, WEIGHT_CAP, 0.0, WEIGHT_CAP])
    theta, info = solve_penalized(hess, center, w)
    assert info.kkt_ok
    active = np.flatnonzero(theta != 0.0)
    zero = np.flatnonzero(theta == 0.0)
    assert set(zero) == {1, 3}
    h_aa = hess[np.ix_(active, active)]
    cond_center = center[active] + np.linalg.solve(
        h_aa, hess[np.ix_(active, zero)] @ center[zero]
    )
    restricted, r_info = solve_penalized(h_aa, cond_center, np.zeros(active.size))
    assert r_info.converged
    assert np.max(np.abs(restricted - theta[active])) <= 1e-8


def test_scalar_zero_sets_grow_with_the_weight():
    for curv in (1.0, 2.0, 10.0):
        hess = np.array([[curv]])
        center = np.array([2.0])
        was_zero = False
        for w in np.linspace(0.0, 8.0 * curv, 33):
            theta, _ = solve_penalized(hess, center, np.array([w]))
            is_zero = theta[0] == 0.0
            # the scalar threshold is exact: zero iff w / (2 curv) >= |center|
            assert is_zero == (w >= 4.0 * curv)
            assert not (was_zero and not is_zero)  # never resurrects
            was_zero = is_zero


def test_zero_sets_nest_under_weight_doubling_on_reference_instances():
    # multi-coordinate selection monotonicity is not a theorem (see the
    # companion test below for a genuine counterexample); on these reference
    # instances it holds and is pinned as a regression
    for seed in range(50):
        if seed in (26, 27):
            continue
        hess, center, w = random_instance(seed)
        x1, _ = solve_by_enumeration(hess, center, w)
        x2, _ = solve_by_enumeration(hess, center, 2.0 * w)
        z1 = set(np.flatnonzero(x1 == 0.0))
        z2 = set(np.flatnonzero(x2 == 0.0))
        assert z1 <= z2, seed


def test_weight_doubling_can_resurrect_a_coordinate():
    # correlated curvature can revive a discarded coordinate when the rest
    # of the support collapses; the solver must stay certified on both sides
    hess, center, w = random_instance(26)
    x1, i1 = solve_penalized(hess, center, w)
    x2, i2 = solve_penalized(hess, center, 2.0 * w)
    assert i1.kkt_ok and i2.kkt_ok
    z1 = set(np.flatnonzero(x1 == 0.0))
    z2 = set(np.flatnonzero(x2 == 0.0))
    assert z1 == {1, 3} and z2 == {1}
    assert not z1 <= z2


def test_sweep_budget_exhaustion_is_flagged():
    hess, center, w = random_instance(2)
    theta, info = solve_penalized(hess, center, w, tol=0.0, max_sweeps=3)
    assert info.max_sweeps_hit and not info.converged
    assert info.sweeps == 3


def test_non_positive_curvature_is_rejected():
    with pytest.raises(NotPositiveDefiniteError):
        solve_penalized(np.diag([1.0, -1.0]), np.zeros(2), np.zeros(2))
    with pytest.raises(NotPositiveDefiniteError):
        solve_penalized(np.array([[np.nan]]), np.zeros(1), np.zeros(1))


def test_dimension_mismatches_are_rejected():
    with pytest.raises(ValueError):
        solve_penalized(np.eye(3), np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        solve_penalized(np.eye(2), np.zeros(2), np.zeros(3))


# --- selection front end -----------------------------------------------------


@pytest.fixture(scope="module")
def rate_family_fit():
    model = get_model("ckls")
    traj = simulate(
        model,
        (2.0, -0.25, 0.15, 1.4),
        SimConfig(n=400, delta=0.1, x0=8.0, seed=5, refine=4),
    )
    fr = fit(model, traj, options=FitOptions(restarts=2))
    assert fr.converged
    return model, traj, fr


def test_select_certifies_and_partitions_the_coordinates(rate_family_fit):
    model, traj, fr = rate_family_fit
    sr = select(model, traj, fr, 1.0, 1.0)
    assert sr.kkt_ok and not sr.max_sweeps_hit
    assert sorted(sr.zero_set + sr.active) == list(range(4))
    assert set(sr.zero_set).isdisjoint(sr.active)
    assert sr.active_std_err.shape == (len(sr.active),)
    assert np.all(sr.active_std_err > 0.0)
    assert all(sr.theta_hat.theta[j] == 0.0 for j in sr.zero_set)
    assert sr.objective == pytest.approx(
        penalized_objective(fr.eval.hess, fr.theta_tilde.theta, sr.weights, sr.theta_hat.theta)
    )
    assert sr.n == traj.n and sr.delta == traj.delta
    assert isinstance(sr.reduced_model, str)


def test_select_without_penalty_returns_the_fit_bitwise(rate_family_fit):
    model, traj, fr = rate_family_fit
    sr = select(model, traj, fr, 0.0, 0.0)
    assert np.array_equal(sr.theta_hat.theta, fr.theta_tilde.theta)
    assert sr.zero_set == ()
    assert sr.reduced_model == "CKLS (1992)"


def test_select_requires_a_converged_fit(rate_family_fit):
    model, traj, fr = rate_family_fit
    broken = dataclasses.replace(fr, converged=False)
    with pytest.raises(ValueError):
        select(model, traj, broken, 1.0, 1.0)


def test_select_only_names_reductions_for_the_rate_family():
    model = get_model("ou")
    traj = simulate(
        model, (1.0, 2.0, 0.5), SimConfig(n=300, delta=0.05, x0=2.0, seed=8, refine=4)
    )
    fr = fit(model, traj, options=FitOptions(restarts=2))
    assert fr.converged
    sr = select(model, traj, fr, 1.0, 1.0)
    assert sr.reduced_model is None
