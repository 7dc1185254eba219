"""Winning probabilities under a fixed stationary profile.

Three independent routes to the same vector:

* :func:`solve_payoff_direct` -- dense LU solve of ``(I - P~) V = b``;
* :func:`solve_payoff_power` -- terminal columns of ``P^t`` as ``t`` grows;
* :func:`solve_payoff_fixed_point` -- the affine iteration ``U <- P~ U + b``.

:func:`absorption_report` adds the fundamental-matrix view, and
:func:`closed_form_k3` gives the hand-derived K=3 formulas used as an oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .game import (
    GameParams,
    InvalidParameterError,
    StateSpace,
    TransitionMatrix,
    enumerate_states,
)

DIRECT_RESIDUAL_TOL = 1e-11
ITER_TOL = 1e-10
ITER_MAX = 10**6


class SolverFailure(RuntimeError):
    """A linear system that should be nonsingular was not."""


class NonConvergenceError(RuntimeError):
    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class PayoffVector:
    player: int
    space: StateSpace
    values: np.ndarray
    iterations: int = 0

    def __getitem__(self, s) -> float:
        return float(self.values[self.space.index[tuple(s)]])

    def as_dict(self) -> dict:
        return {s: float(v) for s, v in zip(self.space.states, self.values)}


def _check_player(n: int) -> int:
    if n not in (1, 2, 3):
        raise InvalidParameterError(f"player must be 1, 2 or 3, got {n}")
    return n


def reduced_system(tm: TransitionMatrix, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(P~_n, b_n)``: terminal rows zeroed, unit vector on terminal-for-n."""
    Pt = np.array(tm.P)
    Pt[:3] = 0.0
    b = np.zeros(len(Pt))
    b[n - 1] = 1.0
    return Pt, b


def solve_payoff_direct(tm: TransitionMatrix, n: int) -> PayoffVector:
    _check_player(n)
    Pt, b = reduced_system(tm, n)
    A = np.eye(len(Pt)) - Pt
    try:
        lu = scipy.linalg.lu_factor(A, check_finite=False)
    except (ValueError, scipy.linalg.LinAlgError) as exc:
        raise SolverFailure(str(exc)) from exc
    if np.any(np.diag(lu[0]) == 0):
        raise SolverFailure("singular payoff system")
    V = scipy.linalg.lu_solve(lu, b, check_finite=False)
    resid = np.max(np.abs(A @ V - b))
    if not resid <= DIRECT_RESIDUAL_TOL:
        raise SolverFailure(f"payoff system residual {resid:.3e} exceeds {DIRECT_RESIDUAL_TOL}")
    return PayoffVector(n, tm.space, np.clip(V, 0.0, 1.0))


def _settled(delta: float, prev_delta: float | None, tol: float) -> bool:
    # Geometric tail estimate: remaining error ~ delta * r / (1 - r).
    if delta == 0.0:
        return True
    if prev_delta is None or prev_delta == 0.0:
        return False
    r = delta / prev_delta
    if r >= 1.0:
        return False
    return delta * r / (1.0 - r) < tol and delta < tol


def solve_payoff_power(
    tm: TransitionMatrix, n: int, tol: float = ITER_TOL, max_t: int = ITER_MAX
) -> PayoffVector:
    """Terminal column ``n`` of ``lim P^t``, by repeated application of ``P``.

    Stops once the step size is below ``tol`` and the geometric tail estimate
    of the remaining error is too.
    """
    _check_player(n)
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    P = tm.P
    col = np.zeros(len(P))
    col[n - 1] = 1.0
    prev = None
    for t in range(1, max_t + 1):
        new = P @ col
        delta = float(np.max(np.abs(new - col)))
        col = new
        if _settled(delta, prev, tol):
            return PayoffVector(n, tm.space, col, iterations=t - 1 if delta == 0 else t)
        prev = delta
    raise NonConvergenceError(
        f"power iteration did not reach tol={tol} in {max_t} steps", col, max_t
    )


def solve_payoff_fixed_point(
    tm: TransitionMatrix,
    n: int,
    u0=None,
    tol: float = ITER_TOL,
    max_t: int = ITER_MAX,
) -> PayoffVector:
    _check_player(n)
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    Pt, b = reduced_system(tm, n)
    U = np.zeros(len(Pt)) if u0 is None else np.array(u0, dtype=float)
    if U.shape != b.shape:
        raise InvalidParameterError(f"seed must have shape {b.shape}")
    prev = None
    for t in range(1, max_t + 1):
        new = Pt @ U + b
        delta = float(np.max(np.abs(new - U)))
        U = new
        if _settled(delta, prev, tol):
            return PayoffVector(n, tm.space, U, iterations=t)
        prev = delta
    raise NonConvergenceError(
        f"fixed-point iteration did not reach tol={tol} in {max_t} steps", U, max_t
    )


@dataclass(frozen=True, eq=False)
class AbsorptionReport:
    space: StateSpace
    fundamental: np.ndarray       # (I - U)^-1 over transient states
    absorption: np.ndarray        # (N-3, 3): F W
    expected_time: np.ndarray     # (N-3,): F 1

    def limit_matrix(self) -> np.ndarray:
        """Terminal columns of the limit matrix for every state."""
        out = np.zeros((len(self.space), 3))
        out[:3] = np.eye(3)
        out[3:] = self.absorption
        return out

    def time_from(self, s) -> float:
        i = self.space.index[tuple(s)]
        return 0.0 if i < 3 else float(self.expected_time[i - 3])


def absorption_report(tm: TransitionMatrix) -> AbsorptionReport:
    U, W = tm.U, tm.W
    A = np.eye(len(U)) - U
    try:
        F = scipy.linalg.solve(A, np.eye(len(U)), check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SolverFailure(f"I - U is singular: {exc}") from exc
    return AbsorptionReport(tm.space, F, F @ W, F.sum(axis=1))


def _k3_player1(p1, p2, p3, x1, x2, x3) -> dict:
    d1 = 1 - p1 + p1**2
    d3 = 1 - p3 + p3**2
    v210 = p1 / d1
    v120 = p1**2 / d1
    v201 = (1 - p3) / d3
    v102 = (1 - 2 * p3 + p3**2) / d3
    v111 = (
        (1 - p3) * (x1 + 1 - x2) * p1 / (3 * d3)
        + p1 * (x3 + 1 - x1) * (1 - p3) / (3 * d1)
        + (1 - p3) ** 2 * (x2 + 1 - x3) * (1 - p2) / (3 * d3)
        + p1**2 * (x2 + 1 - x3) * p2 / (3 * d1)
    )
    return {
        (3, 0, 0): 1.0, (0, 3, 0): 0.0, (0, 0, 3): 0.0,
        (0, 1, 2): 0.0, (0, 2, 1): 0.0,
        (2, 1, 0): v210, (1, 2, 0): v120,
        (2, 0, 1): v201, (1, 0, 2): v102,
        (1, 1, 1): v111,
    }


def closed_form_k3(params: GameParams, x, n: int = 1) -> PayoffVector:
    """Player ``n``'s winning probabilities at K=3 from the explicit formulas.

    ``x`` is ``(x1, x2, x3)`` at the single interior state (1,1,1).  Players
    2 and 3 come from relabelling 1->2->3->1.
    """
    _check_player(n)
    if params.K != 3:
        raise InvalidParameterError(f"closed form needs K=3, got K={params.K}")
    p = params.p
    x = tuple(float(v) for v in x)
    r = n - 1
    # player n seen as player 1 after rotating indices by r
    rot_p = p[r:] + p[:r]
    rot_x = x[r:] + x[:r]
    table = _k3_player1(*rot_p, *rot_x)
    space = enumerate_states(3)
    values = np.array([table[s[r:] + s[:r]] for s in space.states])
    return PayoffVector(n, space, values)
