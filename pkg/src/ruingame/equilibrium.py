"""Best responses, Nash certification, MultiValue Iteration, enumeration.

All searches are over deterministic stationary profiles: with the opponents
fixed, a player's lookahead at each interior state is affine in his own
selection probability, so some pure pick is always optimal.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bellman import CHOICES, TIE_TOL, Lookahead
from .game import (
    GameParams,
    InvalidParameterError,
    StationaryProfile,
    check_profile,
    enumerate_states,
)
from .payoff import NonConvergenceError, PayoffVector

BR_TOL = 1e-12
BR_MAX_ITERS = 10**6
NE_TOL = 1e-9
MVI_TOL = 1e-9
MVI_MAX_ITERS = 2000
MVI_STABLE_STEPS = 3
ENUM_MAX_K = 5
SCHEDULES = ("sequential", "synchronous")


@dataclass(frozen=True, eq=False)
class BestResponse:
    player: int
    strategy: np.ndarray            # 0/1 per interior state
    payoff: PayoffVector
    iterations: int


@dataclass(eq=False)
class EquilibriumCertificate:
    params: GameParams
    profile: StationaryProfile
    gains: np.ndarray               # max_s [BR payoff - incumbent payoff], per player
    tol: float
    method: str
    j_value: float = float("nan")
    gamma: float = 1.0

    @property
    def certified(self) -> bool:
        return bool(np.all(self.gains <= self.tol))

    @property
    def max_gain(self) -> float:
        return float(np.max(self.gains))


@dataclass(eq=False)
class MVIResult:
    converged: bool
    profile: StationaryProfile
    values: np.ndarray              # (3, N) last value iterates
    iterations: int
    certificate: EquilibriumCertificate | None = None
    residual_j: float = float("nan")
    reason: str = ""
    deltas: list = field(default_factory=list, repr=False)

    @property
    def success(self) -> bool:
        """Converged and certified."""
        return self.converged and self.certificate is not None and self.certificate.certified


@dataclass(eq=False)
class EnumerationResult:
    equilibria: list
    evaluated: int


def g_count(K: int) -> int:
    """Interior states, i.e. states where any player has a choice."""
    return (K + 1) * (K + 2) // 2 - 3 * K


def h_count(K: int) -> int:
    """Number of deterministic stationary profiles."""
    return 2 ** (3 * g_count(K))


def _check_player(n):
    if n not in (1, 2, 3):
        raise InvalidParameterError(f"player must be 1, 2 or 3, got {n}")


def _best_response(look: Lookahead, x: np.ndarray, n: int, tol: float, max_iters: int):
    """Value iteration on player n's control problem, then policy polishing.

    Returns ``(strategy, exact values, VI iterations)``.
    """
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    incumbent = x[:, n - 1]
    V = look.indicator(n)
    for it in range(1, max_iters + 1):
        M = look.match_values(V)
        pick = look.greedy(M, n, incumbent)
        V_new = look.apply(V, _with(x, n, pick), n)
        delta = np.max(np.abs(V_new - V))
        V = V_new
        if delta < tol:
            break
    else:
        raise NonConvergenceError(
            f"best-response value iteration exceeded {max_iters} steps", V, max_iters
        )
    # Exact re-solve of the extracted policy, improving until no pick changes.
    # Pure policy iteration from here terminates in a handful of steps.
    pick = look.greedy(look.match_values(V), n, incumbent)
    for _ in range(4 * len(pick) + 10):
        y = _with(x, n, pick)
        V = look.evaluate(y, n)
        a1, a0 = look.choice_values(look.match_values(V), n)
        better = np.where(pick == 1, a0 > a1 + TIE_TOL, a1 > a0 + TIE_TOL)
        if not np.any(better):
            break
        pick = np.where(better, 1 - pick, pick)
    return pick, V, it


def _with(x: np.ndarray, n: int, column) -> np.ndarray:
    y = np.array(x, dtype=float)
    y[:, n - 1] = column
    return y


def best_response(
    params: GameParams,
    profile: StationaryProfile,
    n: int,
    tol: float = BR_TOL,
    max_iters: int = BR_MAX_ITERS,
    gamma: float = 1.0,
) -> BestResponse:
    _check_player(n)
    check_profile(params, profile)
    look = Lookahead(params, enumerate_states(params.K), gamma)
    pick, V, it = _best_response(look, profile.x, n, tol, max_iters)
    return BestResponse(n, pick, PayoffVector(n, look.space, V), it)


def _gains(look: Lookahead, x: np.ndarray, tol: float, max_iters: int) -> np.ndarray:
    own = look.evaluate_all(x)
    gains = np.empty(3)
    for n in (1, 2, 3):
        _, V_br, _ = _best_response(look, x, n, tol, max_iters)
        gains[n - 1] = np.max(V_br - own[n - 1])
    return np.maximum(gains, 0.0)


def _residual_j(look: Lookahead, x: np.ndarray) -> float:
    V = look.evaluate_all(x)
    total = 0.0
    for n in (1, 2, 3):
        diff = V[n - 1] - look.optimal_apply(V[n - 1], x, n)
        total += float(diff @ diff)
    return total


def residual_j(params: GameParams, profile: StationaryProfile, gamma: float = 1.0) -> float:
    """Sum over players of ``||V_n - F_n(V_n | x)||^2`` with exact ``V_n``."""
    check_profile(params, profile)
    return _residual_j(Lookahead(params, enumerate_states(params.K), gamma), profile.x)


def verify_ne(
    params: GameParams,
    profile: StationaryProfile,
    tol: float = NE_TOL,
    method: str = "given",
    gamma: float = 1.0,
    br_tol: float = BR_TOL,
    br_max_iters: int = BR_MAX_ITERS,
) -> EquilibriumCertificate:
    check_profile(params, profile)
    look = Lookahead(params, enumerate_states(params.K), gamma)
    gains = _gains(look, profile.x, br_tol, br_max_iters)
    return EquilibriumCertificate(
        params, profile, gains, tol, method, _residual_j(look, profile.x), gamma
    )


def _mvi(look: Lookahead, seed: StationaryProfile, tol: float, max_iters: int,
         verify_tol: float, method: str, schedule: str = "sequential") -> MVIResult:
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    if schedule not in SCHEDULES:
        raise InvalidParameterError(f"schedule must be one of {SCHEDULES}, got {schedule!r}")
    x = np.array(seed.x, dtype=float)
    V = look.evaluate_all(x)
    stable = 0
    deltas = []
    for t in range(1, max_iters + 1):
        new_x = x.copy()
        if schedule == "synchronous":
            for n in (1, 2, 3):
                new_x[:, n - 1] = look.greedy(look.match_values(V[n - 1]), n, x[:, n - 1])
            V_new = np.stack([look.apply(V[m - 1], new_x, m) for m in (1, 2, 3)])
        else:
            V_new = V
            for n in (1, 2, 3):
                new_x[:, n - 1] = look.greedy(look.match_values(V_new[n - 1]), n, x[:, n - 1])
                V_new = np.stack([look.apply(V_new[m - 1], new_x, m) for m in (1, 2, 3)])
        delta = float(np.max(np.abs(V_new - V)))
        deltas.append(delta)
        same = np.array_equal(new_x, x)
        V, x = V_new, new_x
        stable = stable + 1 if (delta < tol and same) else 0
        if stable >= MVI_STABLE_STEPS:
            profile = StationaryProfile(seed.K, x)
            cert = EquilibriumCertificate(
                look.params, profile, _gains(look, x, BR_TOL, BR_MAX_ITERS),
                verify_tol, method, _residual_j(look, x), look.gamma,
            )
            reason = "" if cert.certified else "certificate-gap"
            return MVIResult(True, profile, V, t, cert, cert.j_value, reason, deltas)
    profile = StationaryProfile(seed.K, x)
    return MVIResult(False, profile, V, max_iters, None, _residual_j(look, x),
                     "max-iters", deltas)


def mvi(
    params: GameParams,
    seed_profile: StationaryProfile | None = None,
    tol: float = MVI_TOL,
    max_iters: int = MVI_MAX_ITERS,
    verify_tol: float | None = None,
    schedule: str = "sequential",
) -> MVIResult:
    """MultiValue Iteration from ``seed_profile`` (all zeros by default).

    Values start at the exact payoffs of the seed.  In each step every player
    greedily re-picks against his own current values and the three value
    vectors get one Bellman update under the new picks.  With
    ``schedule="synchronous"`` all picks use the previous step's values; with
    ``"sequential"`` players go in order 1, 2, 3 and each pick is followed by
    a value update, so later players react to earlier ones within the step.
    Converged means values moved less than ``tol`` with an unchanged profile
    for three consecutive steps; the result is then certified with
    :func:`verify_ne` at ``verify_tol`` (default ``10 * tol``).
    """
    if seed_profile is None:
        seed_profile = StationaryProfile.constant(params.K, 0.0)
    check_profile(params, seed_profile)
    look = Lookahead(params, enumerate_states(params.K))
    return _mvi(look, seed_profile, tol, max_iters,
                10 * tol if verify_tol is None else verify_tol, "mvi", schedule)


def profile_from_index(K: int, idx: int) -> StationaryProfile:
    """Deterministic profile number ``idx``; bit ``3*i + (n-1)`` is x_n at interior state i."""
    g = g_count(K)
    bits = (idx >> np.arange(3 * g)) & 1
    return StationaryProfile(K, bits.reshape(g, 3).astype(float))


def exhaustive_enumeration(
    params: GameParams,
    tol: float = NE_TOL,
    max_k: int = ENUM_MAX_K,
    chunk: int = 8192,
) -> EnumerationResult:
    """Every deterministic stationary NE, found by checking all profiles.

    Each profile's payoffs are solved exactly in batches.  A profile where some
    player has a one-step improvement larger than ``3 * tol`` cannot be an NE
    (the improvement propagates to the deviation gain), so only the remaining
    candidates go through the full :func:`verify_ne`.
    """
    K = params.K
    if K > max_k:
        raise InvalidParameterError(
            f"enumeration at K={K} would evaluate {h_count(K)} profiles; "
            f"raise max_k to allow it"
        )
    space = enumerate_states(K)
    look = Lookahead(params, space)
    g = space.n_interior
    total = h_count(K)
    shifts = np.arange(3 * g)
    found = []
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        x = ((idx[:, None] >> shifts) & 1).reshape(len(idx), g, 3).astype(float)
        V = look.evaluate_all(x)                          # (B, 3, N)
        ok = np.ones(len(idx), dtype=bool)
        for n in (1, 2, 3):
            a1, a0 = look.choice_values(look.match_values(V[:, n - 1]), n)
            cur = np.where(x[..., n - 1] == 1, a1, a0)
            gap = np.max(np.maximum(a1, a0) - cur, axis=-1)
            ok &= look.gamma * gap / 3.0 <= tol
        for k in np.flatnonzero(ok):
            cert = verify_ne(params, StationaryProfile(K, x[k]), tol, method="enumeration")
            if cert.certified:
                found.append(cert)
    return EnumerationResult(found, total)


def k3_conditions(params: GameParams) -> tuple[float, float, float]:
    """The three sign products deciding each player's K=3 optimal pick."""
    p1, p2, p3 = params.p
    return (
        (p1 + p3 - 1) * (p1 - p3),
        (p2 + p1 - 1) * (p2 - p1),
        (p3 + p2 - 1) * (p3 - p2),
    )


def k3_analytic_ne(params: GameParams) -> tuple[StationaryProfile, tuple[bool, bool, bool]]:
    """The K=3 equilibrium and, per player, whether he is indifferent.

    Indifferent players (sign product exactly 0) are assigned pick 1.
    """
    if params.K != 3:
        raise InvalidParameterError(f"analytic equilibrium needs K=3, got K={params.K}")
    c = k3_conditions(params)
    x = [1.0 if v >= 0 else 0.0 for v in c]
    return StationaryProfile(3, [x]), tuple(v == 0 for v in c)


def all_deterministic_profiles(K: int):
    g = g_count(K)
    for bits in itertools.product((0.0, 1.0), repeat=3 * g):
        yield StationaryProfile(K, np.array(bits).reshape(g, 3))


def enumeration_size_estimate(K: int) -> str:
    h = h_count(K)
    return f"2^{3 * g_count(K)} = {h} profiles (~10^{math.log10(h):.1f})"


__all__ = [
    "BestResponse", "EquilibriumCertificate", "MVIResult", "EnumerationResult",
    "best_response", "verify_ne", "mvi", "exhaustive_enumeration", "k3_analytic_ne",
    "k3_conditions", "residual_j", "g_count", "h_count", "profile_from_index",
    "CHOICES",
]
