import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _instances import dense_update, random_instance
from eigenrate import (
    DegenerateProblemError,
    GameRecord,
    PriorRating,
    ScoreMatrix,
    SolverConfig,
    SolverStateError,
    aggregate,
    consistency_residuals,
    convergence_delta,
    merge_priors,
    normalize,
    solve,
    step_iter1,
    step_iter2,
)
from eigenrate.model import PriorTable


def _bisect_ratio(a, b):
    """Two-player ratio t = x1/x2 solving t*(a+b)/(t+1) = a, by bisection on log t."""
    lo, hi = -50.0, 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        t = math.exp(mid)
        if t * (a + b) / (t + 1) < a:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ----- single steps -----

def test_step_iter1_hand_values(two_player):
    # values checked with exact rational arithmetic
    np.testing.assert_allclose(step_iter1(two_player, [1, 1]), [2.0, 0.5], rtol=1e-15)
    np.testing.assert_allclose(step_iter1(two_player, [1, 1], sigma=0.5), [5 / 3, 3 / 5], rtol=1e-15)


def test_step_iter2_hand_values(two_player):
    np.testing.assert_allclose(step_iter2(two_player, [1, 1]), [4 / 3, 2 / 3], rtol=1e-15)


@pytest.mark.parametrize("sigma", [0.0, 0.3, 2.0])
def test_step_iter1_matches_dense_transcription(rng, sigma):
    for _ in range(5):
        S = random_instance(rng, n_range=(3, 12))
        x = rng.uniform(0.2, 5.0, S.n)
        expected = dense_update(S.to_dense(), x, sigma)
        np.testing.assert_allclose(step_iter1(S, x, sigma), expected, rtol=1e-13)


def _augment(S, extra):
    """Dense S with extra opponents: list of (player, weight, strength) drawn-game blocks."""
    n, k = S.n, len(extra)
    s = np.zeros((n + k, n + k))
    s[:n, :n] = S.to_dense()
    strengths = []
    for c, (players, weight, strength) in enumerate(extra):
        for i in players:
            s[i, n + c] += weight / 2
            s[n + c, i] += weight / 2
        strengths.append(strength)
    return s, strengths


def test_dummy_terms_match_extra_player(rng):
    S = random_instance(rng, n_range=(3, 10))
    x = rng.uniform(0.2, 5.0, S.n)
    gamma = 0.7
    s, extra_x = _augment(S, [(range(S.n), gamma, 1.0)])
    expected = dense_update(s, list(x) + extra_x, 0.3)[:S.n]
    np.testing.assert_allclose(step_iter1(S, x, 0.3, gamma), expected, rtol=1e-13)


def test_prior_terms_match_extra_opponents(rng):
    S = random_instance(rng, n_range=(4, 10))
    x = rng.uniform(0.2, 5.0, S.n)
    x_hat = np.exp(rng.normal(size=S.n))
    w_hat = np.where(rng.random(S.n) < 0.5, rng.uniform(1, 20, S.n), 0.0)
    table = PriorTable(x_hat, w_hat)
    s, extra_x = _augment(S, [([i], w_hat[i], x_hat[i]) for i in range(S.n)])
    expected = dense_update(s, list(x) + extra_x, 0.3)[:S.n]
    np.testing.assert_allclose(step_iter1(S, x, 0.3, 0.0, table), expected, rtol=1e-13)


def test_matching_prior_keeps_fixed_point(rng):
    S = random_instance(rng, n_range=(4, 10))
    x = solve(S, SolverConfig(epsilon=1e-13)).x
    w_hat = rng.uniform(0, 30, S.n)
    with_prior = step_iter1(S, x, 0.0, 0.0, PriorTable(x.copy(), w_hat))
    np.testing.assert_allclose(with_prior, step_iter1(S, x, 0.0), rtol=1e-12)
    np.testing.assert_allclose(with_prior, x, rtol=1e-11)


def test_step_iter2_matches_formula(rng):
    S = random_instance(rng, n_range=(3, 10))
    x = rng.uniform(0.2, 5.0, S.n)
    s = S.to_dense()
    sigma = 0.4
    expected = []
    for i in range(S.n):
        num = sum(s[i]) + sigma
        den = sum((s[i, j] + s[j, i]) / (x[i] + x[j]) for j in range(S.n) if j != i) + sigma / x[i]
        expected.append(num / den)
    np.testing.assert_allclose(step_iter2(S, x, sigma), expected, rtol=1e-13)


@pytest.mark.parametrize("sigma", [0.0, 0.3, 1.0])
def test_all_draws_round_robin_is_fixed(sigma):
    players = "ABCDE"
    S = aggregate([GameRecord(a, b, 0.5) for k, a in enumerate(players) for b in players[k + 1:]])
    for step in (step_iter1, step_iter2):
        np.testing.assert_allclose(step(S, np.ones(5), sigma), np.ones(5), rtol=1e-15)


def test_bad_strengths(two_player):
    for bad in ([0.0, 1.0], [-1.0, 1.0], [np.nan, 1.0], [np.inf, 1.0]):
        with pytest.raises(SolverStateError):
            step_iter1(two_player, bad)
    with pytest.raises(SolverStateError):
        step_iter1(two_player, [1.0, 1.0, 1.0])


def test_zero_denominator_names_player():
    S = ScoreMatrix.from_coo(["A", "B", "C"], [0, 1], [1, 0], [1.0, 1.0], 2)
    with pytest.raises(SolverStateError, match="'C'"):
        step_iter1(S, np.ones(3))
    with pytest.raises(SolverStateError, match="'C'"):
        step_iter2(S, np.ones(3))
    assert np.all(np.isfinite(step_iter1(S, np.ones(3), sigma=0.3)))


def test_threads_are_bitwise_identical(rng):
    S = random_instance(rng, n_range=(40, 51))
    x = rng.uniform(0.2, 5.0, S.n)
    table = PriorTable(np.exp(rng.normal(size=S.n)), rng.uniform(0, 5, S.n))
    for step in (step_iter1, step_iter2):
        serial = step(S, x, 0.3, 0.5, table)
        for t in (2, 3, 8):
            assert np.array_equal(serial, step(S, x, 0.3, 0.5, table, threads=t))
    a = solve(S, SolverConfig(threads=1))
    b = solve(S, SolverConfig(threads=4))
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations


# ----- properties of the step -----

@st.composite
def instances(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    S = random_instance(rng, n_range=(2, 9))
    x = np.exp(rng.uniform(-3, 3, S.n))
    return S, x


@settings(max_examples=60, deadline=None)
@given(instances(), st.floats(0.0, 3.0))
def test_positivity_preserved(inst, sigma):
    S, x = inst
    for step in (step_iter1, step_iter2):
        y = step(S, x, sigma)
        assert np.all(y > 0) and np.all(np.isfinite(y))


@settings(max_examples=60, deadline=None)
@given(instances(), st.floats(1e-3, 1e3))
def test_scale_equivariance_without_damping(inst, kappa):
    S, x = inst
    for step in (step_iter1, step_iter2):
        np.testing.assert_allclose(step(S, kappa * x), kappa * step(S, x), rtol=1e-12)


# ----- helpers -----

@pytest.mark.parametrize("x, expected", [
    ([2.0, 0.5], [2.0, 0.5]),
    ([math.e, math.e], [1.0, 1.0]),
    ([4.0, 1.0], [2.0, 0.5]),
])
def test_normalize(x, expected):
    np.testing.assert_allclose(normalize(x), expected, rtol=1e-15)


def test_normalize_rejects_nonpositive():
    with pytest.raises(SolverStateError):
        normalize([1.0, 0.0])


def test_convergence_delta():
    assert convergence_delta([1, 2], [1, 2]) == 0.0
    assert convergence_delta([1, 1], [2, 0.5]) == 1.0
    assert convergence_delta([1, 1], [1.01, 1]) == pytest.approx(0.01 / 1.01, rel=1e-12)
    with pytest.raises(ValueError):
        convergence_delta([1, 1], [1, 1, 1])


def test_residual_examples(two_player):
    np.testing.assert_allclose(consistency_residuals(two_player, [2, 1]), [0, 0], atol=1e-15)
    np.testing.assert_allclose(consistency_residuals(two_player, [1, 1]), [-0.5, 0.5], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(instances())
def test_residuals_sum_to_zero(inst):
    S, x = inst
    assert abs(consistency_residuals(S, x).sum()) < 1e-10 * S.m


# ----- full solves -----

def test_two_player_closed_form(two_player):
    res = solve(two_player)
    assert res.converged
    np.testing.assert_allclose(res.x, [math.sqrt(2), 1 / math.sqrt(2)], rtol=1e-9)
    assert res.r[0] - res.r[1] == pytest.approx(_bisect_ratio(2, 1), abs=1e-9)
    assert res.r[0] - res.r[1] == pytest.approx(0.693147, abs=1e-6)
    assert abs(res.r.sum()) < 1e-12


def test_all_draws_give_zero_ratings():
    players = "ABCD"
    S = aggregate([GameRecord(a, b, 0.5) for k, a in enumerate(players) for b in players[k + 1:]])
    res = solve(S)
    assert res.converged and res.iterations == 1
    np.testing.assert_array_equal(res.r, np.zeros(4))


def test_undamped_two_player_oscillates(two_player):
    res = solve(two_player, SolverConfig(sigma=0.0))
    assert not res.converged and res.oscillating
    assert res.iterations == 2
    np.testing.assert_allclose(res.x, [1.0, 1.0])


def test_empty_problem():
    res = solve(aggregate([]))
    assert res.converged and res.x.size == 0


def test_degenerate_refused():
    S = aggregate([GameRecord("A", "B", 1)])
    with pytest.raises(DegenerateProblemError) as info:
        solve(S)
    assert info.value.report.zero_loss_players == {0}


def test_degenerate_override_reports_divergence():
    S = aggregate([GameRecord("A", "B", 1)] * 100)
    res = solve(S, SolverConfig(sigma=1e-3, override_degenerate=True, divergence_bound=1e4))
    assert not res.converged
    assert set(res.diverged) == {0, 1}
    assert res.iterations == 1 and res.x[0] > 1e4


def test_degenerate_override_slow_drift_does_not_converge():
    S = aggregate([GameRecord("A", "B", 1)])
    res = solve(S, SolverConfig(override_degenerate=True, max_iters=2000))
    assert not res.converged and res.iterations == 2000
    assert res.r[0] - res.r[1] > 5


def test_undamped_degenerate_hits_zero_denominator():
    S = aggregate([GameRecord("A", "B", 1)])
    with pytest.raises(SolverStateError, match="'A'"):
        solve(S, SolverConfig(sigma=0.0, override_degenerate=True))


def test_dummy_player_makes_degenerate_data_finite():
    S = aggregate([GameRecord("A", "B", 1)])
    res = solve(S, SolverConfig(gamma=1.0))
    assert res.converged and np.all(np.isfinite(res.r))
    assert res.r[0] > res.r[1]
    assert res.max_residual < 1e-9


def test_max_iters_reports_nonconvergence(rng):
    S = random_instance(rng)
    res = solve(S, SolverConfig(max_iters=2))
    assert not res.converged and res.iterations == 2 and res.final_delta > 1e-10


def test_callback_sees_every_iterate(two_player):
    seen = []
    res = solve(two_player, SolverConfig(), callback=seen.append)
    assert [s.k for s in seen] == list(range(1, res.iterations + 1))
    assert seen[-1].delta == res.final_delta
    assert all(s.delta >= 0 for s in seen)


def test_solve_is_deterministic(rng):
    S = random_instance(rng)
    a, b = solve(S), solve(S)
    assert np.array_equal(a.x, b.x)


def test_fixed_point_equivalence(rng):
    for _ in range(5):
        S = random_instance(rng, n_range=(3, 30))
        res = solve(S)
        assert res.converged
        assert res.max_residual < 1e-8
        for step in (step_iter1, step_iter2):
            np.testing.assert_allclose(normalize(step(S, res.x, 0.3)), res.x, rtol=1e-8)
        res2 = solve(S, SolverConfig(variant="iter2"))
        assert res2.converged and res2.max_residual < 1e-8
        np.testing.assert_allclose(res2.x, res.x, rtol=1e-8)


def test_sigma_and_start_independence(rng):
    eps = 1e-10
    for _ in range(4):
        S = random_instance(rng, n_range=(3, 30))
        ref = solve(S, SolverConfig(sigma=0.3, epsilon=eps)).x
        for sigma in (0.1, 0.5, 1.0):
            np.testing.assert_allclose(solve(S, SolverConfig(sigma=sigma, epsilon=eps)).x, ref,
                                       rtol=100 * eps)
        for _ in range(3):
            x0 = rng.uniform(0.01, 100, S.n)
            res = solve(S, SolverConfig(epsilon=eps), x0=x0)
            np.testing.assert_allclose(res.x, ref, rtol=100 * eps)


def test_prior_dominance(rng):
    S = random_instance(rng, n_range=(5, 6), games_per_pair=(1, 2), density=(1.0, 1.0))
    target = 1.7
    priors = merge_priors(S, [PriorRating(S.players[2], target, 1e6)])
    res = solve(S, SolverConfig(), priors)
    assert res.converged
    assert abs(res.r[2] - target) < 1e-3


def test_zero_weight_prior_is_absent(rng):
    S = random_instance(rng)
    priors = merge_priors(S, [PriorRating(p, 3.0, 0.0) for p in S.players])
    assert np.array_equal(solve(S, priors=priors).x, solve(S).x)


def test_round_robin_equal_scores(rng):
    # a 4-player round robin where every player scores 1.5 despite different results
    S = aggregate([
        GameRecord("A", "B", 1), GameRecord("A", "C", 0.5), GameRecord("A", "D", 0),
        GameRecord("B", "C", 1), GameRecord("B", "D", 0.5), GameRecord("C", "D", 1),
    ])
    np.testing.assert_array_equal(S.points(), [1.5, 1.5, 1.5, 1.5])
    res = solve(S)
    assert np.max(np.abs(res.r)) < 1e-8
