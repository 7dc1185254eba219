"""The auxiliary discounted game.

Terminal states become *preterminal*: they pay 1 to their winner and then
move to an extra absorbing state with no payoff.  A player's discounted value
is therefore ``E[gamma^T ; he wins]`` where ``T`` is the absorption round.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bellman import Lookahead
from .equilibrium import (
    BR_MAX_ITERS,
    BR_TOL,
    MVI_MAX_ITERS,
    MVI_TOL,
    NE_TOL,
    BestResponse,
    EquilibriumCertificate,
    MVIResult,
    _mvi,
    best_response,
    verify_ne,
)
from .game import (
    GameParams,
    InvalidParameterError,
    StationaryProfile,
    build_transition_matrix,
    check_profile,
    enumerate_states,
)
from .payoff import PayoffVector


@dataclass(frozen=True)
class DiscountedGameParams:
    game: GameParams
    gamma: float

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise InvalidParameterError(f"gamma={self.gamma} must lie in (0, 1)")

    @property
    def K(self) -> int:
        return self.game.K


def augmented_chain(dparams: DiscountedGameParams, profile: StationaryProfile) -> np.ndarray:
    """Transition matrix with the extra absorbing state appended last."""
    P = build_transition_matrix(dparams.game, profile).P
    N = len(P)
    Q = np.zeros((N + 1, N + 1))
    Q[:N, :N] = P
    Q[:3, :] = 0.0
    Q[:3, N] = 1.0
    Q[N, N] = 1.0
    return Q


def turn_payoff(K: int, n: int) -> np.ndarray:
    q = np.zeros(len(enumerate_states(K)) + 1)
    q[n - 1] = 1.0
    return q


def discounted_value(
    dparams: DiscountedGameParams, profile: StationaryProfile, n: int
) -> PayoffVector:
    """Solve ``V = q_n + gamma Q V`` on the augmented chain; drop the extra state."""
    check_profile(dparams.game, profile)
    Q = augmented_chain(dparams, profile)
    q = turn_payoff(dparams.K, n)
    V = np.linalg.solve(np.eye(len(Q)) - dparams.gamma * Q, q)
    return PayoffVector(n, enumerate_states(dparams.K), V[:-1])


def discounted_best_response(
    dparams: DiscountedGameParams,
    profile: StationaryProfile,
    n: int,
    tol: float = BR_TOL,
    max_iters: int = BR_MAX_ITERS,
) -> BestResponse:
    return best_response(dparams.game, profile, n, tol, max_iters, gamma=dparams.gamma)


def discounted_verify_ne(
    dparams: DiscountedGameParams, profile: StationaryProfile, tol: float = NE_TOL
) -> EquilibriumCertificate:
    return verify_ne(dparams.game, profile, tol, method="discounted", gamma=dparams.gamma)


def discounted_mvi(
    dparams: DiscountedGameParams,
    seed: StationaryProfile | None = None,
    tol: float = MVI_TOL,
    max_iters: int = MVI_MAX_ITERS,
    verify_tol: float | None = None,
    schedule: str = "sequential",
) -> MVIResult:
    K = dparams.K
    if seed is None:
        seed = StationaryProfile.constant(K, 0.0)
    check_profile(dparams.game, seed)
    look = Lookahead(dparams.game, enumerate_states(K), dparams.gamma)
    return _mvi(look, seed, tol, max_iters,
                10 * tol if verify_tol is None else verify_tol, "discounted-mvi", schedule)
