"""Game data model: parameters, canonical state space, stationary profiles
and the Markov chain a profile induces.

States are capital splits ``(s1, s2, s3)`` summing to ``K``.  Indices 0, 1, 2
are always the terminal states ``(K,0,0)``, ``(0,K,0)``, ``(0,0,K)``; the rest
follow in lexicographically descending ``(s1, s2)`` order.

A stationary profile stores three numbers per interior state:

* ``x1`` -- probability that P1 picks P2 (otherwise P3),
* ``x2`` -- probability that P2 picks P3 (otherwise P1),
* ``x3`` -- probability that P3 picks P1 (otherwise P2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

State = tuple[int, int, int]

TERMINAL = "terminal"
INTERIOR = "interior"
BOUNDARY = "boundary"

# Ordered matches and their move columns in StateSpace.moves:
#   pair (1,2): col 0 = P1 wins, col 1 = P2 wins
#   pair (2,3): col 2 = P2 wins, col 3 = P3 wins
#   pair (3,1): col 4 = P3 wins, col 5 = P1 wins
_TRANSFERS = (
    (0, 1), (1, 0),
    (1, 2), (2, 1),
    (2, 0), (0, 2),
)


class GameError(ValueError):
    """Base class for invalid inputs to the game model."""


class InvalidParameterError(GameError):
    pass


class InvalidStateError(GameError):
    pass


class IncompleteProfileError(GameError):
    pass


@dataclass(frozen=True)
class GameParams:
    """Pairwise win probabilities and total capital.

    ``p1 = P(P1 beats P2)``, ``p2 = P(P2 beats P3)``, ``p3 = P(P3 beats P1)``.
    """

    p1: float
    p2: float
    p3: float
    K: int

    def __post_init__(self):
        for name in ("p1", "p2", "p3"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise InvalidParameterError(f"{name}={v} must lie in (0, 1)")
        if int(self.K) != self.K or self.K < 3:
            raise InvalidParameterError(f"K={self.K} must be an integer >= 3")
        object.__setattr__(self, "K", int(self.K))

    @property
    def p(self) -> tuple[float, float, float]:
        return (self.p1, self.p2, self.p3)

    def win_prob(self, m: int, n: int) -> float:
        """Probability that player ``m`` beats player ``n`` (1-based)."""
        table = {
            (1, 2): self.p1, (2, 1): 1 - self.p1,
            (2, 3): self.p2, (3, 2): 1 - self.p2,
            (3, 1): self.p3, (1, 3): 1 - self.p3,
        }
        try:
            return table[(m, n)]
        except KeyError:
            raise InvalidParameterError(f"no match between players {m} and {n}") from None


def classify_state(s: Iterable[int], K: int) -> str | tuple[str, int]:
    """Return ``("terminal", n)``, ``"interior"`` or ``"boundary"``."""
    s = tuple(int(v) for v in s)
    if len(s) != 3 or any(v < 0 for v in s) or sum(s) != K:
        raise InvalidStateError(f"{s} is not a capital split of K={K}")
    for n, v in enumerate(s, start=1):
        if v == K:
            return (TERMINAL, n)
    if all(v > 0 for v in s):
        return INTERIOR
    return BOUNDARY


def neighbors(s: Iterable[int]) -> set[State]:
    """States reachable in one round from ``s``; empty for terminal states."""
    s = tuple(int(v) for v in s)
    alive = [i for i in range(3) if s[i] > 0]
    if len(alive) <= 1:
        return set()
    out = set()
    for w, l in _TRANSFERS:
        if w in alive and l in alive:
            t = list(s)
            t[w] += 1
            t[l] -= 1
            out.add(tuple(t))
    return out


@dataclass(frozen=True, eq=False)
class StateSpace:
    K: int
    states: tuple[State, ...]
    index: Mapping[State, int] = field(repr=False)
    interior: np.ndarray = field(repr=False)
    # interior position -> state index of the six successors (see _TRANSFERS)
    moves: np.ndarray = field(repr=False)
    # boundary-nonterminal rows: state index, P-win successor, P-lose successor,
    # and which pair plays (0 -> (1,2), 1 -> (2,3), 2 -> (3,1))
    boundary: np.ndarray = field(repr=False)
    boundary_next: np.ndarray = field(repr=False)
    boundary_pair: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.states)

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def interior_states(self) -> list[State]:
        return [self.states[i] for i in self.interior]

    def interior_position(self) -> dict[State, int]:
        return {self.states[i]: k for k, i in enumerate(self.interior)}


def _state_order(K: int) -> list[State]:
    terminal = [(K, 0, 0), (0, K, 0), (0, 0, K)]
    rest = [
        (s1, s2, K - s1 - s2)
        for s1 in range(K, -1, -1)
        for s2 in range(K - s1, -1, -1)
        if (s1, s2, K - s1 - s2) not in terminal
    ]
    return terminal + rest


@lru_cache(maxsize=None)
def enumerate_states(K: int) -> StateSpace:
    if int(K) != K or K < 3:
        raise InvalidParameterError(f"K={K} must be an integer >= 3")
    K = int(K)
    states = tuple(_state_order(K))
    index = {s: i for i, s in enumerate(states)}

    interior, moves = [], []
    boundary, bnext, bpair = [], [], []
    for i, s in enumerate(states):
        kind = classify_state(s, K)
        if kind == INTERIOR:
            row = []
            for w, l in _TRANSFERS:
                t = list(s)
                t[w] += 1
                t[l] -= 1
                row.append(index[tuple(t)])
            interior.append(i)
            moves.append(row)
        elif kind == BOUNDARY:
            dead = s.index(0)
            # the surviving pair is the one not involving the dead player
            pair = {2: 0, 0: 1, 1: 2}[dead]
            w, l = _TRANSFERS[2 * pair]
            win = list(s)
            win[w] += 1
            win[l] -= 1
            lose = list(s)
            lose[w] -= 1
            lose[l] += 1
            boundary.append(i)
            bnext.append((index[tuple(win)], index[tuple(lose)]))
            bpair.append(pair)

    def frozen(a, dtype=np.intp, shape=None):
        arr = np.array(a, dtype=dtype)
        if shape is not None:
            arr = arr.reshape(shape)
        arr.setflags(write=False)
        return arr

    return StateSpace(
        K=K,
        states=states,
        index=index,
        interior=frozen(interior),
        moves=frozen(moves, shape=(-1, 6)),
        boundary=frozen(boundary),
        boundary_next=frozen(bnext, shape=(-1, 2)),
        boundary_pair=frozen(bpair),
    )


class StationaryProfile:
    """Opponent-selection probabilities at every interior state.

    ``x`` has shape ``(n_interior, 3)`` in the state space's interior order.
    Instances are immutable; use :meth:`with_player` to derive new ones.
    """

    __slots__ = ("K", "x")

    def __init__(self, K: int, x):
        space = enumerate_states(K)
        x = np.array(x, dtype=float)
        if x.shape != (space.n_interior, 3):
            raise IncompleteProfileError(
                f"profile for K={K} needs shape {(space.n_interior, 3)}, got {x.shape}"
            )
        if np.any(~np.isfinite(x)) or np.any(x < 0) or np.any(x > 1):
            raise InvalidParameterError("profile entries must lie in [0, 1]")
        x.setflags(write=False)
        self.K = space.K
        self.x = x

    @classmethod
    def constant(cls, K: int, value: float) -> StationaryProfile:
        return cls(K, np.full((enumerate_states(K).n_interior, 3), float(value)))

    @classmethod
    def uniform(cls, K: int) -> StationaryProfile:
        return cls.constant(K, 0.5)

    @classmethod
    def from_mapping(cls, K: int, entries: Mapping[State, Iterable[float]]) -> StationaryProfile:
        space = enumerate_states(K)
        pos = space.interior_position()
        x = np.full((space.n_interior, 3), np.nan)
        for s, v in entries.items():
            s = tuple(int(c) for c in s)
            if s not in pos:
                raise InvalidStateError(f"{s} is not an interior state for K={K}")
            x[pos[s]] = list(v)
        missing = [space.states[space.interior[k]] for k in np.flatnonzero(np.isnan(x).any(axis=1))]
        if missing:
            raise IncompleteProfileError(f"no profile entry for interior states {missing}")
        return cls(K, x)

    def to_mapping(self) -> dict[State, tuple[float, float, float]]:
        space = enumerate_states(self.K)
        return {s: tuple(float(v) for v in row) for s, row in zip(space.interior_states, self.x)}

    def at(self, s: Iterable[int]) -> np.ndarray:
        space = enumerate_states(self.K)
        return self.x[space.interior_position()[tuple(s)]]

    def player(self, n: int) -> np.ndarray:
        return self.x[:, n - 1]

    def with_player(self, n: int, column) -> StationaryProfile:
        x = self.x.copy()
        x[:, n - 1] = column
        return StationaryProfile(self.K, x)

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all((self.x == 0) | (self.x == 1)))

    def __eq__(self, other):
        if not isinstance(other, StationaryProfile):
            return NotImplemented
        return self.K == other.K and np.array_equal(self.x, other.x)

    def __hash__(self):
        return hash((self.K, self.x.tobytes()))

    def __repr__(self):
        return f"StationaryProfile(K={self.K}, x={self.x.tolist()})"


def check_profile(params: GameParams, profile: StationaryProfile) -> None:
    if profile.K != params.K:
        raise IncompleteProfileError(
            f"profile is for K={profile.K}, game has K={params.K}"
        )


def pair_weights(x: np.ndarray) -> np.ndarray:
    """Probability that each pair (1,2), (2,3), (3,1) plays, per interior state.

    Works on any array whose last axis holds ``(x1, x2, x3)``.
    """
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return np.stack([x1 + 1 - x2, x2 + 1 - x3, x3 + 1 - x1], axis=-1) / 3.0


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    params: GameParams
    profile: StationaryProfile
    space: StateSpace
    P: np.ndarray

    @property
    def n_terminal(self) -> int:
        return 3

    @property
    def W(self) -> np.ndarray:
        """Transient-to-absorbing block."""
        return self.P[3:, :3]

    @property
    def U(self) -> np.ndarray:
        """Transient-to-transient block."""
        return self.P[3:, 3:]


def build_transition_matrix(params: GameParams, profile: StationaryProfile) -> TransitionMatrix:
    check_profile(params, profile)
    space = enumerate_states(params.K)
    N = len(space)
    p = np.array(params.p)
    P = np.zeros((N, N))
    P[[0, 1, 2], [0, 1, 2]] = 1.0

    # boundary: the surviving pair plays every round
    pb = p[space.boundary_pair]
    np.add.at(P, (space.boundary, space.boundary_next[:, 0]), pb)
    np.add.at(P, (space.boundary, space.boundary_next[:, 1]), 1 - pb)

    w = pair_weights(profile.x)
    probs = np.empty((space.n_interior, 6))
    probs[:, 0::2] = w * p
    probs[:, 1::2] = w * (1 - p)
    rows = np.repeat(space.interior, 6)
    np.add.at(P, (rows, space.moves.ravel()), probs.ravel())
    P.setflags(write=False)
    return TransitionMatrix(params=params, profile=profile, space=space, P=P)
