import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsallis_inf.core import (GapProfile, Trajectory, as_simplex_point, draw_arm,
                              draw_arms, importance_weighted_estimate, lambda_schedule,
                              pseudo_regret_from_pulls, realized_regret, regularizer,
                              regularizer_gradient, regularizer_hessian_diag,
                              tsallis_potential, uniform_point)
from tsallis_inf.errors import InvalidArgument, InvalidState


@pytest.mark.parametrize("t,G,expected", [(1, 1.0, 4.0), (4, 1.0, 8.0), (9, 0.5, 6.0),
                                          (10_000, 2.0, 800.0)])
def test_lambda_schedule(t, G, expected):
    assert lambda_schedule(t, G) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("t,G", [(0, 1.0), (-3, 1.0), (1.5, 1.0), (1, 0.0), (1, -2.0)])
def test_lambda_schedule_rejects(t, G):
    with pytest.raises(InvalidArgument):
        lambda_schedule(t, G)


def test_potential_uniform_4():
    assert tsallis_potential(uniform_point(4)) == pytest.approx(-2.0, abs=1e-15)


@pytest.mark.parametrize("d", range(1, 65))
def test_potential_uniform_is_minus_sqrt_d(d):
    assert abs(tsallis_potential(uniform_point(d)) + math.sqrt(d)) <= 1e-12


@pytest.mark.parametrize("d,j", [(1, 0), (3, 2), (7, 4)])
def test_potential_at_vertex(d, j):
    e = np.zeros(d)
    e[j] = 1.0
    assert tsallis_potential(e) == -1.0


def test_potential_two_arms():
    assert tsallis_potential([0.25, 0.75]) == pytest.approx(-1.3660254, abs=1e-7)


def test_regularizer_derivatives_scale_with_lambda():
    x = np.array([0.1, 0.2, 0.7])
    assert regularizer(x, 3.0) == pytest.approx(3.0 * tsallis_potential(x))
    np.testing.assert_allclose(regularizer_gradient(x, 3.0), -3.0 / (2 * np.sqrt(x)))
    np.testing.assert_allclose(regularizer_hessian_diag(x, 3.0), 3.0 / (4 * x**1.5))


@pytest.mark.parametrize("w", [[0.5, 0.6], [-0.1, 1.1], [np.nan, 1.0], []])
def test_as_simplex_point_rejects(w):
    with pytest.raises(InvalidArgument):
        as_simplex_point(w)


def test_as_simplex_point_tolerance():
    as_simplex_point([0.5, 0.5 + 5e-11])
    with pytest.raises(InvalidArgument):
        as_simplex_point([0.5, 0.5 + 5e-10])


# importance-weighted estimator

@pytest.mark.parametrize("loss,arm,x,expected", [
    (0.5, 1, [0.5, 0.5], [0.0, 1.0]),
    (0.0, 0, [0.2, 0.3, 0.5], [0.0, 0.0, 0.0]),
    (1.0, 0, [0.25, 0.75], [4.0, 0.0]),
])
def test_importance_weighted_estimate(loss, arm, x, expected):
    est = importance_weighted_estimate(loss, arm, x)
    np.testing.assert_array_equal(est.estimates, expected)
    assert est.chosen_arm == arm
    assert np.count_nonzero(est.estimates) <= 1


def test_estimate_zero_probability_raises():
    with pytest.raises(ZeroDivisionError):
        importance_weighted_estimate(1.0, 1, [1.0, 0.0])


@pytest.mark.parametrize("arm", [-1, 3])
def test_estimate_bad_arm(arm):
    with pytest.raises(InvalidArgument):
        importance_weighted_estimate(1.0, arm, [0.2, 0.3, 0.5])


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_estimator_unbiased_by_exact_summation(d, seed):
    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.ones(d)) + 1e-6
    x /= x.sum()
    g = rng.uniform(0, 1, d)
    expectation = sum(x[i] * importance_weighted_estimate(g[i], i, x).estimates
                      for i in range(d))
    np.testing.assert_allclose(expectation, g, rtol=1e-12, atol=1e-15)


# arm sampling

@pytest.mark.parametrize("d,j", [(1, 0), (4, 0), (4, 3), (6, 2)])
def test_draw_point_mass(d, j):
    x = np.zeros(d)
    x[j] = 1.0
    rng = np.random.default_rng(7)
    assert all(draw_arm(x, rng) == j for _ in range(500))


def test_draw_frequencies_uniform():
    rng = np.random.default_rng(0)
    u = rng.random(10**6)
    arms = draw_arms(np.full((10**6, 2), 0.5), u)
    assert abs(np.mean(arms == 0) - 0.5) <= 0.005


def test_draw_deterministic_under_seed():
    x = [0.3, 0.7]
    runs = []
    for _ in range(2):
        rng = np.random.default_rng(11)
        runs.append([draw_arm(x, rng) for _ in range(200)])
    assert runs[0] == runs[1]
    assert set(runs[0]) == {0, 1}


def test_draw_arms_matches_scalar_version():
    rng = np.random.default_rng(3)
    x = rng.dirichlet(np.ones(5), size=300)
    u = rng.random(300)

    class Fixed:
        def __init__(self, v):
            self.v = v

        def random(self):
            return self.v

    scalar = [draw_arm(x[k], Fixed(u[k])) for k in range(300)]
    np.testing.assert_array_equal(draw_arms(x, u), scalar)


def test_draw_never_returns_zero_weight_arm():
    x = np.array([0.0, 0.5, 0.0, 0.5, 0.0])
    rng = np.random.default_rng(1)
    arms = {draw_arm(x, rng) for _ in range(2000)}
    assert arms == {1, 3}


# gap profiles and pseudo-regret

def test_gap_profile():
    p = GapProfile.from_means([0.5, 0.6, 0.9])
    assert p.best_mean == 0.5
    np.testing.assert_allclose(p.gaps, [0.0, 0.1, 0.4])
    assert p.unique_best and p.best_arm == 0
    assert not GapProfile.from_means([0.2, 0.2, 0.5]).unique_best


@pytest.mark.parametrize("pulls,means,expected", [
    ([100, 0, 0], [0.1, 0.5, 0.9], 0.0),
    ([0, 10], [0.0, 0.1], 1.0),
    ([3, 4, 5], [0.2, 0.2, 0.7], 2.5),
])
def test_pseudo_regret_from_pulls(pulls, means, expected):
    assert pseudo_regret_from_pulls(pulls, GapProfile.from_means(means)) == pytest.approx(expected)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1000), min_size=3, max_size=3),
       st.lists(st.integers(0, 1000), min_size=3, max_size=3),
       st.integers(0, 5), st.integers(0, 5))
def test_pseudo_regret_is_linear(s1, s2, a, b):
    p = GapProfile.from_means([0.3, 0.1, 0.6])
    lhs = pseudo_regret_from_pulls(a * np.array(s1) + b * np.array(s2), p)
    rhs = a * pseudo_regret_from_pulls(s1, p) + b * pseudo_regret_from_pulls(s2, p)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)


def test_pseudo_regret_shape_mismatch():
    with pytest.raises(InvalidArgument):
        pseudo_regret_from_pulls([1, 2, 3], GapProfile.from_means([0.0, 1.0]))


# trajectories and realized regret

def _traj(losses, arms, horizon=None):
    losses = np.asarray(losses, dtype=float)
    arms = np.asarray(arms)
    T, d = losses.shape
    return Trajectory(horizon or T, np.full((T, d), 1.0 / d), arms, losses, np.zeros((T, d)))


def test_regret_zero_when_arms_identical():
    losses = np.repeat(np.linspace(0, 1, 7)[:, None], 3, axis=1)
    assert realized_regret(_traj(losses, [0, 2, 1, 1, 0, 2, 2])) == 0.0


def test_regret_hand_computed():
    assert realized_regret(_traj([[0, 1], [0, 1]], [1, 1])) == 2.0


def test_regret_can_be_negative():
    # best fixed arm loses 1; switching between arms loses 0
    assert realized_regret(_traj([[0, 1], [1, 0]], [0, 1])) == -1.0


@pytest.mark.parametrize("seed", range(5))
def test_regret_matches_exhaustive_fixed_arms(seed):
    rng = np.random.default_rng(seed)
    losses = rng.uniform(0, 1, (5, 3))
    arms = rng.integers(0, 3, 5)
    incurred = sum(losses[t, arms[t]] for t in range(5))
    best = min(sum(losses[t, i] for t in range(5)) for i in range(3))
    assert realized_regret(_traj(losses, arms)) == pytest.approx(incurred - best, abs=1e-12)


def test_regret_needs_complete_trajectory():
    with pytest.raises(InvalidState):
        realized_regret(_traj([[0, 1], [1, 0]], [0, 1], horizon=5))


def test_trajectory_pull_counts_and_estimate():
    tr = _traj([[0, 1], [1, 0], [0.5, 0.5]], [1, 1, 0])
    np.testing.assert_array_equal(tr.pull_counts, [1, 2])
    assert tr.n_rounds == 3 and tr.complete
    assert tr.estimate(2).chosen_arm == 1
    with pytest.raises(InvalidState):
        Trajectory(3, np.full((3, 2), 0.5), np.array([0, 1, 0]), np.zeros((3, 2)),
                   np.zeros((3, 2)), pull_counts=np.array([1, 1]))

