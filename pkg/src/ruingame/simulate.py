"""Monte Carlo play of the game, round by round, under a stationary profile.

Games are advanced in lockstep as numpy arrays.  The random stream is
numpy's Philox (a counter-based generator); a master seed is split into one
independent stream per fixed-size batch of games with ``SeedSequence.spawn``,
so results do not depend on how batches are scheduled.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .game import (
    INTERIOR,
    GameParams,
    InvalidParameterError,
    InvalidStateError,
    StationaryProfile,
    check_profile,
    classify_state,
    enumerate_states,
)

ROUND_CAP = 10**7
BATCH = 20000


class SimulationDivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationResult:
    wins: tuple[int, int, int]
    games: int
    mean_rounds: float
    var_rounds: float
    seed: int

    @property
    def frequencies(self) -> np.ndarray:
        return np.array(self.wins, dtype=float) / self.games

    def stderr(self) -> np.ndarray:
        """Binomial standard errors of the frequencies."""
        f = self.frequencies
        return np.sqrt(f * (1 - f) / self.games)


@dataclass(frozen=True)
class DurationEstimate:
    mean: float
    stderr: float
    games: int

    def interval(self, z: float = 3.0) -> tuple[float, float]:
        return (self.mean - z * self.stderr, self.mean + z * self.stderr)


def _pick_table(params: GameParams, profile: StationaryProfile) -> np.ndarray:
    """``x[s1, s2, n]``: profile entries indexed by capitals (NaN off the interior)."""
    K = params.K
    table = np.full((K + 1, K + 1, 3), np.nan)
    space = enumerate_states(K)
    for (s1, s2, _), row in zip(space.interior_states, profile.x):
        table[s1, s2] = row
    return table


def _play_batch(params: GameParams, x_table: np.ndarray, start, games: int,
                seed_seq: np.random.SeedSequence, round_cap: int):
    rng = np.random.Generator(np.random.Philox(seed_seq))
    K = params.K
    # win[m, o]: probability that player m beats player o (0-based)
    win = np.full((3, 3), np.nan)
    for m in range(3):
        for o in range(3):
            if m != o:
                win[m, o] = params.win_prob(m + 1, o + 1)

    caps = np.tile(np.asarray(start, dtype=np.int64), (games, 1))
    rounds = np.zeros(games, dtype=np.int64)
    live = np.flatnonzero(caps.max(axis=1) < K)
    rows = np.arange(games)
    while live.size:
        c = caps[live]
        alive = c > 0
        n_alive = alive.sum(axis=1)
        m = live.size

        # mover: uniform over surviving players
        k = np.floor(rng.random(m) * n_alive).astype(np.int64)
        order = np.cumsum(alive, axis=1) - 1
        mover = np.argmax(alive & (order == k[:, None]), axis=1)

        # opponent: the other survivor, or per profile when all three survive
        nxt = (mover + 1) % 3
        prv = (mover + 2) % 3
        u_pick = rng.random(m)
        three = n_alive == 3
        opp = np.where(alive[rows[:m], nxt], nxt, prv)
        if np.any(three):
            xs = x_table[c[:, 0], c[:, 1], mover]
            # x_n is the probability of picking the next player cyclically
            opp = np.where(three, np.where(u_pick < xs, nxt, prv), opp)

        mover_wins = rng.random(m) < win[mover, opp]
        gainer = np.where(mover_wins, mover, opp)
        loser = np.where(mover_wins, opp, mover)
        caps[live, gainer] += 1
        caps[live, loser] -= 1
        rounds[live] += 1
        if rounds[live].max() > round_cap:
            raise SimulationDivergenceError(f"a game exceeded {round_cap} rounds")
        live = live[caps[live].max(axis=1) < K]

    winners = np.argmax(caps, axis=1)
    wins = np.bincount(winners, minlength=3)
    return wins, rounds


def _check_start(params: GameParams, start) -> tuple[int, int, int]:
    start = tuple(int(v) for v in start)
    kind = classify_state(start, params.K)
    if isinstance(kind, tuple):
        raise InvalidStateError(f"start {start} is terminal")
    return start


def _run(params, profile, start, games, seed, round_cap, workers):
    check_profile(params, profile)
    start = _check_start(params, start)
    if games < 1:
        raise InvalidParameterError("games must be >= 1")
    table = _pick_table(params, profile)
    sizes = [BATCH] * (games // BATCH) + ([games % BATCH] if games % BATCH else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(params, table, start, n, s, round_cap) for n, s in zip(sizes, seeds)]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_play_star, jobs))
    else:
        parts = [_play_batch(*j) for j in jobs]
    wins = np.sum([w for w, _ in parts], axis=0)
    rounds = np.concatenate([r for _, r in parts])
    return wins, rounds


def _play_star(job):
    return _play_batch(*job)


def simulate(
    params: GameParams,
    profile: StationaryProfile,
    start,
    games: int,
    seed: int,
    round_cap: int = ROUND_CAP,
    workers: int = 1,
) -> SimulationResult:
    wins, rounds = _run(params, profile, start, games, seed, round_cap, workers)
    return SimulationResult(
        wins=tuple(int(w) for w in wins),
        games=int(games),
        mean_rounds=float(rounds.mean()),
        var_rounds=float(rounds.var(ddof=1)) if games > 1 else 0.0,
        seed=int(seed),
    )


def estimate_duration(
    params: GameParams,
    profile: StationaryProfile,
    start,
    games: int,
    seed: int,
    round_cap: int = ROUND_CAP,
    workers: int = 1,
) -> DurationEstimate:
    res = simulate(params, profile, start, games, seed, round_cap, workers)
    se = np.sqrt(res.var_rounds / res.games)
    return DurationEstimate(res.mean_rounds, float(se), res.games)


__all__ = [
    "SimulationResult", "DurationEstimate", "SimulationDivergenceError",
    "simulate", "estimate_duration", "INTERIOR",
]
