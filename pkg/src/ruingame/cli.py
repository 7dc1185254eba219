"""Command-line front end.

Every subcommand resolves an :class:`ExperimentConfig` from an optional JSON
file plus flags (flags win), runs, and writes JSON or CSV to ``--out`` or
stdout.  Failures print a JSON error object on stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone

import numpy as np

from . import experiments as ex
from .discounted import DiscountedGameParams, discounted_mvi, discounted_verify_ne
from .equilibrium import (
    best_response,
    exhaustive_enumeration,
    h_count,
    mvi,
    verify_ne,
)
from .game import GameError, StationaryProfile, build_transition_matrix, enumerate_states
from .io import certificate_to_dict, parse_state, payoffs_to_csv, simulation_to_csv, state_key
from .payoff import NonConvergenceError, SolverFailure, closed_form_k3, solve_payoff_direct
from .simulate import SimulationDivergenceError, simulate

EXIT_USAGE = 2
EXIT_FAILURE = 1


class UsageError(Exception):
    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line


def _fixed(items):
    out = {}
    for item in items or []:
        key, _, val = item.partition("=")
        if not val:
            raise UsageError(f"--fix expects NAME=VALUE, got {item!r}", "fixed")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"--fix value {val!r} is not a number", "fixed") from None
    return out


# flag dest -> config field
_OVERRIDES = {
    "p": "p", "K": "K", "player": "player", "start": "start", "reps": "repetitions",
    "k_min": "K_min", "k_max": "K_max", "tol": "tol", "max_iters": "max_iters",
    "schedule": "schedule", "gamma": "gamma", "games": "games", "max_k": "enum_max_k",
    "seed": "seed", "threads": "threads", "out": "out",
}


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc.strerror}", "config") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path!r}: {exc.msg}", "config", exc.lineno) from None
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object", "config")
    return doc


def resolve_config(args) -> ex.ExperimentConfig:
    doc = load_config(args.config) if args.config else {}
    if getattr(args, "game", None):
        game = load_config(args.game)
        for key in ("p", "K", "x"):
            if key in game:
                doc[key] = game[key]
    doc["kind"] = args.command
    for dest, name in _OVERRIDES.items():
        val = getattr(args, dest, None)
        if val is not None:
            doc[name] = val
    if getattr(args, "fix", None):
        doc["fixed"] = _fixed(args.fix)
    if getattr(args, "closed_form", False):
        doc["closed_form"] = True
    if "p" in doc and isinstance(doc["p"], tuple):
        doc["p"] = list(doc["p"])
    try:
        return ex.ExperimentConfig.from_dict(doc)
    except TypeError as exc:
        raise UsageError(str(exc), "config") from None


def _stamp() -> str:
    return "# generated " + datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ") + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _start_of(cfg, K):
    return parse_state(cfg.start) if cfg.start else ex.balanced_start(K)


def cmd_solve(cfg):
    params, profile = ex.game_of(cfg)
    tm = build_transition_matrix(params, profile)
    vals = np.stack([solve_payoff_direct(tm, n).values for n in (1, 2, 3)])
    doc = {
        "p": list(params.p), "K": params.K,
        "payoffs": {state_key(s): list(map(float, vals[:, i]))
                    for i, s in enumerate(tm.space.states)},
        "max_sum_error": float(np.max(np.abs(vals.sum(axis=0) - 1))),
    }
    if cfg.closed_form:
        if params.K != 3:
            raise UsageError("the closed-form comparison needs K=3", "closed_form")
        cf = np.stack([closed_form_k3(params, profile.x[0], n).values for n in (1, 2, 3)])
        doc["closed_form_max_abs_diff"] = float(np.max(np.abs(cf - vals)))
    if cfg.out and cfg.out.endswith(".csv"):
        return payoffs_to_csv(params.K, vals)
    return _json_text(doc)


def _profile_doc(profile: StationaryProfile) -> dict:
    return {state_key(s): list(v) for s, v in profile.to_mapping().items()}


def cmd_best_response(cfg):
    params, profile = ex.game_of(cfg)
    br = best_response(params, profile, cfg.player, gamma=cfg.gamma or 1.0)
    space = enumerate_states(params.K)
    return _json_text({
        "player": cfg.player,
        "strategy": {state_key(s): float(v) for s, v in zip(space.interior_states, br.strategy)},
        "payoff": {state_key(s): float(v) for s, v in zip(space.states, br.payoff.values)},
        "iterations": br.iterations,
    })


def cmd_verify(cfg):
    params, profile = ex.game_of(cfg)
    if cfg.gamma is not None:
        cert = discounted_verify_ne(DiscountedGameParams(params, cfg.gamma), profile, cfg.tol)
    else:
        cert = verify_ne(params, profile, cfg.tol)
    return _json_text(certificate_to_dict(cert))


def cmd_mvi(cfg):
    params, given = ex.game_of(cfg)
    seed = None if cfg.x is None else given
    if cfg.gamma is not None:
        res = discounted_mvi(DiscountedGameParams(params, cfg.gamma), seed, cfg.tol,
                             cfg.max_iters, schedule=cfg.schedule)
    else:
        res = mvi(params, seed, cfg.tol, cfg.max_iters, schedule=cfg.schedule)
    return _json_text({
        "converged": res.converged,
        "success": res.success,
        "iterations": res.iterations,
        "reason": res.reason,
        "J": res.residual_j,
        "x": _profile_doc(res.profile),
        "certificate": certificate_to_dict(res.certificate) if res.certificate else None,
    })


def cmd_enumerate(cfg):
    params, _ = ex.game_of(cfg)
    res = exhaustive_enumeration(params, cfg.tol, max_k=cfg.enum_max_k)
    return _json_text({
        "p": list(params.p), "K": params.K,
        "evaluated": res.evaluated,
        "expected": h_count(params.K),
        "equilibria": [certificate_to_dict(c) for c in res.equilibria],
    })


def cmd_simulate(cfg):
    params, profile = ex.game_of(cfg)
    start = _start_of(cfg, params.K)
    res = simulate(params, profile, start, cfg.games, cfg.seed, workers=cfg.threads)
    return _stamp() + simulation_to_csv(params, start, res)


def cmd_sweep(cfg):
    out = ex.run_sweep_convergence(cfg)
    fixed = ";".join(f"{k}={ex.clamp(v)!r}" for k, v in sorted(cfg.fixed.items()))
    head = (_stamp() + f"# seed={cfg.seed} repetitions={cfg.repetitions} max_iters={cfg.max_iters} "
            f"schedule={cfg.schedule} fixed={fixed or 'none'}\n")
    rows = [(r["K"], r["runs"], r["successes"], float(r["proportion"])) for r in out["rows"]]
    return head + _csv_text(["K", "runs", "successes", "proportion"], rows)


def cmd_delta_v(cfg):
    out = ex.run_delta_v(cfg)
    head = _stamp() + f"# K={out['K']} start={state_key(out['start'])} seed={cfg.seed}\n"
    rows = [[r.get(f, "") for f in ex.DELTA_V_FIELDS] for r in out["rows"]]
    return head + _csv_text(ex.DELTA_V_FIELDS, rows)


COMMANDS = {
    "solve": cmd_solve,
    "best-response": cmd_best_response,
    "verify": cmd_verify,
    "mvi": cmd_mvi,
    "enumerate": cmd_enumerate,
    "simulate": cmd_simulate,
    "sweep-convergence": cmd_sweep,
    "delta-v": cmd_delta_v,
}


def run_single(cfg: ex.ExperimentConfig) -> str:
    return COMMANDS[cfg.kind](cfg)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its fields")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--tol", type=float)
    common.add_argument("--threads", type=int)
    common.add_argument("--emit-config", action="store_true",
                        help="print the resolved config and exit")

    game = argparse.ArgumentParser(add_help=False)
    game.add_argument("--game", help="JSON game document with p, K and optional x")
    game.add_argument("--p", type=float, nargs=3, metavar=("P1", "P2", "P3"))
    game.add_argument("--K", type=int)

    parser = argparse.ArgumentParser(prog="ruingame",
                                     description="Three-player strategic gambler's ruin.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common, game], help="exact winning probabilities")
    p.add_argument("--closed-form", action="store_true",
                   help="at K=3, report the max difference from the closed form")

    p = sub.add_parser("best-response", parents=[common, game])
    p.add_argument("--player", type=int, choices=(1, 2, 3))
    p.add_argument("--gamma", type=float)

    p = sub.add_parser("verify", parents=[common, game], help="certify a profile as an NE")
    p.add_argument("--gamma", type=float)

    p = sub.add_parser("mvi", parents=[common, game], help="MultiValue Iteration")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--schedule", choices=("sequential", "synchronous"))
    p.add_argument("--gamma", type=float)

    p = sub.add_parser("enumerate", parents=[common, game],
                       help="all deterministic stationary NE")
    p.add_argument("--max-k", type=int)

    p = sub.add_parser("simulate", parents=[common, game], help="Monte Carlo play")
    p.add_argument("--games", type=int)
    p.add_argument("--start", help="start state as s1,s2,s3")

    p = sub.add_parser("sweep-convergence", parents=[common],
                       help="MVI success proportion per K")
    p.add_argument("--reps", type=int)
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--fix", action="append", metavar="pN=VALUE",
                   help="hold a p coordinate fixed (clamped into [1e-6, 1-1e-6])")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--schedule", choices=("sequential", "synchronous"))

    p = sub.add_parser("delta-v", parents=[common, game],
                       help="payoff lost against NE opponents")
    p.add_argument("--start", help="start state as s1,s2,s3")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--schedule", choices=("sequential", "synchronous"))
    return parser


def _error(exc, code) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("field", "line"):
        val = getattr(exc, attr, None)
        if val is not None:
            doc[attr] = val
    print(json.dumps(doc), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.emit_config:
            sys.stdout.write(cfg.to_json() + "\n")
            return 0
        text = run_single(cfg)
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except (UsageError, ex.ConfigError) as exc:
        return _error(exc, EXIT_USAGE)
    except (GameError, NonConvergenceError, SolverFailure, SimulationDivergenceError,
            OSError, np.linalg.LinAlgError) as exc:
        return _error(exc, EXIT_FAILURE)


if __name__ == "__main__":
    sys.exit(main())
