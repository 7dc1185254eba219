import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ruingame.bellman import Lookahead
from ruingame.equilibrium import (
    best_response,
    exhaustive_enumeration,
    g_count,
    h_count,
    k3_analytic_ne,
    k3_conditions,
    mvi,
    profile_from_index,
    residual_j,
    verify_ne,
)
from ruingame.game import (
    GameParams,
    InvalidParameterError,
    StationaryProfile,
    build_transition_matrix,
    enumerate_states,
)
from ruingame.io import certificate_to_dict
from ruingame.payoff import solve_payoff_direct

from conftest import games, random_instance


def tie_free_p(rng, margin=1e-2):
    while True:
        p = rng.uniform(0.02, 0.98, 3)
        params = GameParams(*p, 3)
        if min(abs(c) for c in k3_conditions(params)) >= margin:
            return params


def test_counts_table():
    assert [g_count(K) for K in range(3, 8)] == [1, 3, 6, 10, 15]
    assert [h_count(K) for K in (3, 4, 5)] == [8, 512, 262144]
    assert h_count(7) == 35184372088832


def test_best_response_k3_example():
    params = GameParams(0.9, 0.5, 0.2, 3)
    for x1 in (0.0, 0.5, 1.0):
        br = best_response(params, StationaryProfile(3, [[x1, 0.3, 0.8]]), 1)
        assert br.strategy.tolist() == [1.0]


def test_best_response_symmetric_indifferent():
    params = GameParams(0.5, 0.5, 0.5, 3)
    for x1 in (0.0, 1.0):
        prof = StationaryProfile(3, [[x1, 1.0, 0.0]])
        cert = verify_ne(params, prof)
        assert cert.gains[0] <= 1e-15
    v0 = solve_payoff_direct(build_transition_matrix(params, StationaryProfile(3, [[0, 1, 0]])), 1)
    v1 = solve_payoff_direct(build_transition_matrix(params, StationaryProfile(3, [[1, 1, 0]])), 1)
    assert np.allclose(v0.values, v1.values, atol=1e-15)


def _brute_force_best(params, profile, n):
    """Statewise max over all of player n's deterministic strategies."""
    g = enumerate_states(params.K).n_interior
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=g):
        tm = build_transition_matrix(params, profile.with_player(n, bits))
        v = solve_payoff_direct(tm, n).values
        best = v if best is None else np.maximum(best, v)
    return best


@pytest.mark.parametrize("K", [3, 4])
def test_best_response_matches_brute_force(K, rng):
    for _ in range(15):
        params, prof = random_instance(rng, K)
        for n in (1, 2, 3):
            br = best_response(params, prof, n)
            assert set(br.strategy) <= {0.0, 1.0}
            assert np.max(np.abs(br.payoff.values - _brute_force_best(params, prof, n))) <= 1e-10


def test_best_response_dominates_incumbent(rng):
    for _ in range(100):
        params, prof = random_instance(rng, int(rng.integers(3, 8)))
        n = int(rng.integers(1, 4))
        br = best_response(params, prof, n)
        own = solve_payoff_direct(build_transition_matrix(params, prof), n).values
        assert np.all(br.payoff.values >= own - 1e-11)
        assert set(np.unique(br.strategy)) <= {0.0, 1.0}


@settings(max_examples=50, deadline=None)
@given(games(k_max=7), st.floats(0, 1), st.integers(1, 3), st.floats(0.01, 100))
def test_lookahead_bang_bang_and_scaling(game, t, n, scale):
    params, prof = game
    look = Lookahead(params, enumerate_states(params.K))
    V = np.random.default_rng(0).uniform(0, 1, len(look.space))
    M = look.match_values(V)
    a1, a0 = look.choice_values(M, n)
    mixed = t * a1 + (1 - t) * a0
    assert np.all(mixed <= np.maximum(a1, a0) + 1e-15)
    assert np.all(mixed >= np.minimum(a1, a0) - 1e-15)
    assert np.array_equal(look.greedy(M, n), look.greedy(scale * M, n))


def test_k3_analytic():
    prof, indiff = k3_analytic_ne(GameParams(0.9, 0.5, 0.2, 3))
    assert prof.x[0, 0] == 1.0 and indiff == (False, False, False)
    _, indiff = k3_analytic_ne(GameParams(0.5, 0.5, 0.5, 3))
    assert indiff == (True, True, True)
    with pytest.raises(InvalidParameterError):
        k3_analytic_ne(GameParams(0.5, 0.5, 0.5, 4))


def test_verify_analytic_and_flipped():
    params = GameParams(0.9, 0.5, 0.2, 3)
    prof, _ = k3_analytic_ne(params)
    cert = verify_ne(params, prof, tol=1e-9)
    assert cert.certified and cert.j_value <= 1e-12
    assert verify_ne(params, prof, tol=1e-3).certified
    flipped = prof.with_player(1, 1 - prof.player(1))
    bad = verify_ne(params, flipped, tol=1e-9)
    assert not bad.certified and bad.gains[0] > 0
    doc = certificate_to_dict(bad)
    assert doc["certified"] is False and doc["x"] == {"1,1,1": [0.0, 0.0, 1.0]}


def test_analytic_certifies_random(rng):
    for _ in range(100):
        params = tie_free_p(rng)
        assert verify_ne(params, k3_analytic_ne(params)[0], tol=1e-9).certified


def test_residual_j():
    params = GameParams(0.9, 0.5, 0.2, 3)
    prof, _ = k3_analytic_ne(params)
    assert residual_j(params, prof) <= 1e-12
    anti = StationaryProfile(3, 1 - prof.x)
    assert residual_j(params, anti) > 0
    sym = GameParams(0.5, 0.5, 0.5, 3)
    assert residual_j(sym, StationaryProfile(3, [[0, 1, 1]])) == pytest.approx(
        residual_j(sym, StationaryProfile(3, [[1, 1, 1]])), abs=1e-15)


def test_residual_j_nonnegative_and_zero_iff_certified(rng):
    for _ in range(30):
        params, prof = random_instance(rng, 4, deterministic=True)
        J = residual_j(params, prof)
        assert J >= 0
        assert (J <= 1e-12) == verify_ne(params, prof, tol=1e-9).certified


def test_enumeration_counts():
    assert exhaustive_enumeration(GameParams(0.9, 0.5, 0.2, 3)).evaluated == 8
    assert exhaustive_enumeration(GameParams(0.9, 0.5, 0.2, 4)).evaluated == 512


def test_enumeration_k3_unique():
    params = GameParams(0.9, 0.5, 0.2, 3)
    res = exhaustive_enumeration(params)
    assert len(res.equilibria) == 1
    assert res.equilibria[0].profile == k3_analytic_ne(params)[0]


def test_enumeration_guard():
    with pytest.raises(InvalidParameterError, match="1073741824"):
        exhaustive_enumeration(GameParams(0.5, 0.5, 0.5, 6))


def test_enumeration_filter_is_exact(rng):
    # compare the batched filter against plain verification of all 512 profiles
    params = GameParams(*rng.uniform(0.05, 0.95, 3), 4)
    fast = {c.profile for c in exhaustive_enumeration(params).equilibria}
    slow = {profile_from_index(4, i) for i in range(512)
            if verify_ne(params, profile_from_index(4, i)).certified}
    assert fast == slow


def test_no_deterministic_ne_counterexample():
    # Exact rational arithmetic (Fraction, all 512 profiles x all deviations)
    # gives min over profiles of the worst deviation gain = 3.989766820847612e-05.
    params = GameParams(0.96, 0.15, 0.48, 4)
    assert exhaustive_enumeration(params).equilibria == []
    best = StationaryProfile(4, [[1, 0, 0], [1, 0, 0], [1, 1, 0]])
    assert verify_ne(params, best).max_gain == pytest.approx(3.989766820847612e-05, rel=1e-8)


def test_mvi_k3_recovers_analytic(rng):
    for _ in range(100):
        params = tie_free_p(rng)
        res = mvi(params)
        assert res.success
        assert res.profile == k3_analytic_ne(params)[0]


@pytest.mark.parametrize("schedule", ["sequential", "synchronous"])
def test_mvi_converged_results_are_certified(schedule, rng):
    for _ in range(10):
        params = GameParams(*rng.uniform(0.02, 0.98, 3), int(rng.integers(4, 7)))
        res = mvi(params, schedule=schedule)
        if res.converged:
            assert res.certificate is not None
            assert res.success == verify_ne(params, res.profile, tol=1e-8).certified
        else:
            assert not res.success and res.reason == "max-iters"


def test_mvi_k5_against_enumeration():
    params = GameParams(0.9, 0.01, 0.5, 5)
    ne = {c.profile for c in exhaustive_enumeration(params).equilibria}
    res = mvi(params)
    if res.converged and res.success:
        assert res.profile in ne
    if not ne:
        assert not res.success


def test_mvi_rejects_bad_schedule():
    with pytest.raises(InvalidParameterError):
        mvi(GameParams(0.5, 0.5, 0.5, 3), schedule="random")
