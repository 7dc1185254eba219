"""Experiment configs and the two batch experiments: the MVI convergence
sweep over K and the payoff-loss (delta V) table."""
from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .equilibrium import MVI_MAX_ITERS, MVI_TOL, mvi
from .game import GameParams, GameError, InvalidParameterError, StationaryProfile, enumerate_states

EPS = 1e-6

KINDS = (
    "solve", "best-response", "verify", "mvi", "enumerate",
    "simulate", "sweep-convergence", "delta-v",
)

# Default p vectors for the delta-V table; a 0.00 coordinate is clamped to EPS.
DEFAULT_DELTA_V_P = [
    (0.10, 0.10, 0.10),
    (0.90, 0.00, 0.50),
    (0.80, 0.80, 0.50),
    (0.3922, 0.8932, 0.6634),
    (0.53, 0.20, 0.80),
    (0.9000, 0.8747, 0.2252),
]


class ConfigError(GameError):
    def __init__(self, message, field_name=None):
        super().__init__(message)
        self.field = field_name


@dataclass
class ExperimentConfig:
    kind: str = "solve"
    # single game
    p: list | None = None
    K: int | None = None
    x: dict | None = None
    player: int = 1
    start: str | None = None
    # random p sampling: coordinates listed in `fixed` are held (clamped into [EPS, 1-EPS])
    fixed: dict = field(default_factory=dict)
    repetitions: int = 100
    K_min: int = 3
    K_max: int = 9
    p_list: list | None = None
    # solver knobs
    tol: float = MVI_TOL
    max_iters: int = MVI_MAX_ITERS
    schedule: str = "sequential"
    gamma: float | None = None
    enum_max_k: int = 5
    closed_form: bool = False
    # simulation
    games: int = 100_000
    # bookkeeping
    seed: int = 0
    threads: int = 1
    out: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}", unknown[0])
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}", "kind")
        if self.p is not None and (not isinstance(self.p, (list, tuple)) or len(self.p) != 3):
            raise ConfigError("p must be a list of three probabilities", "p")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1", "repetitions")
        if not (3 <= self.K_min <= self.K_max):
            raise ConfigError("need 3 <= K_min <= K_max", "K_min")
        if not self.tol > 0:
            raise ConfigError("tol must be positive", "tol")
        for key in self.fixed:
            if key not in ("p1", "p2", "p3"):
                raise ConfigError(f"fixed keys must be p1, p2 or p3, got {key!r}", "fixed")
        if self.player not in (1, 2, 3):
            raise ConfigError("player must be 1, 2 or 3", "player")


def clamp(v: float) -> float:
    return min(max(float(v), EPS), 1 - EPS)


def sample_p(rng: np.random.Generator, fixed: dict, count: int) -> np.ndarray:
    """``count`` probability vectors, uniform on (EPS, 1-EPS) unless fixed."""
    ps = rng.uniform(EPS, 1 - EPS, (count, 3))
    for k, v in fixed.items():
        ps[:, int(k[1]) - 1] = clamp(v)
    return ps


def balanced_start(K: int) -> tuple[int, int, int]:
    base, extra = divmod(K, 3)
    return tuple(base + (1 if i < extra else 0) for i in range(3))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def _map(fn, jobs, threads: int):
    if threads and threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(threads) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _sweep_job(job):
    p, Ks, tol, max_iters, schedule = job
    out = []
    for K in Ks:
        try:
            res = mvi(GameParams(*p, K), tol=tol, max_iters=max_iters, schedule=schedule)
            out.append((K, bool(res.success), res.iterations))
        except (GameError, ArithmeticError, RuntimeError, np.linalg.LinAlgError):
            out.append((K, False, -1))
    return out


def run_sweep_convergence(cfg: ExperimentConfig) -> dict:
    """Fraction of certified MVI runs per K over sampled p vectors."""
    if cfg.K_max > 9:
        raise ConfigError("convergence sweep supports K up to 9", "K_max")
    ps = sample_p(make_rng(cfg.seed), cfg.fixed, cfg.repetitions)
    Ks = list(range(cfg.K_min, cfg.K_max + 1))
    jobs = [(tuple(p), Ks, cfg.tol, cfg.max_iters, cfg.schedule) for p in ps]
    results = _map(_sweep_job, jobs, cfg.threads)
    rows = []
    for j, K in enumerate(Ks):
        succ = sum(r[j][1] for r in results)
        rows.append({"K": K, "runs": len(ps), "successes": succ,
                     "proportion": succ / len(ps)})
    runs = [
        {"rep": i, "p1": p[0], "p2": p[1], "p3": p[2], "K": K, "success": ok, "iterations": it}
        for i, (p, r) in enumerate(zip(ps, results))
        for K, ok, it in r
    ]
    return {"rows": rows, "runs": runs}


def _payoff_at(look, x, n, idx):
    return float(look.evaluate(x, n)[idx])


def _delta_v_job(job):
    from .bellman import Lookahead

    row_id, p, K, start, seed, tol, max_iters, schedule = job
    p = tuple(clamp(v) for v in p)
    params = GameParams(*p, K)
    res = mvi(params, tol=tol, max_iters=max_iters, schedule=schedule)
    row: dict[str, Any] = {"row": row_id, "p1": p[0], "p2": p[1], "p3": p[2],
                           "start": ",".join(map(str, start))}
    if not res.success:
        row["status"] = "failed"
        return row
    look = Lookahead(params, enumerate_states(K))
    idx = look.space.index[start]
    x = res.profile.x
    rng = make_rng(seed, row_id)
    for n in (1, 2, 3):
        ne_val = _payoff_at(look, x, n, idx)
        rnd = np.array(x)
        rnd[:, n - 1] = rng.uniform(0, 1, len(x))
        uni = np.array(x)
        uni[:, n - 1] = 0.5
        row[f"dV_random{n}"] = ne_val - _payoff_at(look, rnd, n, idx)
        row[f"dV_uniform{n}"] = ne_val - _payoff_at(look, uni, n, idx)
    row["status"] = "ok"
    return row


DELTA_V_FIELDS = ["row", "p1", "p2", "p3", "start", "status",
                  "dV_random1", "dV_random2", "dV_random3",
                  "dV_uniform1", "dV_uniform2", "dV_uniform3"]


def run_delta_v(cfg: ExperimentConfig) -> dict:
    """Payoff lost by replacing one player's NE strategy with a random or uniform one."""
    K = cfg.K or 9
    start = tuple(int(v) for v in cfg.start.split(",")) if cfg.start else balanced_start(K)
    if sum(start) != K or min(start) <= 0:
        raise ConfigError(f"start {start} must be an interior split of K={K}", "start")
    if cfg.p_list is not None:
        plist = [tuple(p) for p in cfg.p_list]
    elif cfg.p is not None:
        plist = [tuple(cfg.p)]
    else:
        plist = DEFAULT_DELTA_V_P
    jobs = [(i, p, K, start, cfg.seed, cfg.tol, cfg.max_iters, cfg.schedule)
            for i, p in enumerate(plist)]
    rows = sorted(_map(_delta_v_job, jobs, cfg.threads), key=lambda r: r["row"])
    return {"K": K, "start": start, "rows": rows}


def game_of(cfg: ExperimentConfig) -> tuple[GameParams, StationaryProfile]:
    from .io import game_from_dict

    if cfg.p is None or cfg.K is None:
        raise ConfigError("this command needs p and K", "p" if cfg.p is None else "K")
    doc = {"p": cfg.p, "K": cfg.K}
    if cfg.x is not None:
        doc["x"] = cfg.x
    try:
        return game_from_dict(doc)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc), "p") from exc
