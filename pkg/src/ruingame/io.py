"""JSON and CSV forms of game inputs and results."""
from __future__ import annotations

import csv
import io
import json
from typing import Any

import numpy as np

from .game import GameParams, InvalidParameterError, StationaryProfile, enumerate_states


def state_key(s) -> str:
    return ",".join(str(int(v)) for v in s)


def parse_state(text: str) -> tuple[int, int, int]:
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 3:
        raise InvalidParameterError(f"state {text!r} must be three comma-separated integers")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise InvalidParameterError(f"state {text!r} must be three comma-separated integers") from None


def game_to_dict(params: GameParams, profile: StationaryProfile | None = None) -> dict:
    doc: dict[str, Any] = {"p": list(params.p), "K": params.K}
    if profile is not None:
        doc["x"] = {state_key(s): list(v) for s, v in profile.to_mapping().items()}
    return doc


def game_from_dict(doc: dict) -> tuple[GameParams, StationaryProfile]:
    """Parse ``{"p": [...], "K": K, "x": {"s1,s2,s3": [x1,x2,x3]}}``.

    A missing ``"x"`` means the uniform profile.
    """
    try:
        p = doc["p"]
        K = doc["K"]
    except KeyError as exc:
        raise InvalidParameterError(f"game document is missing field {exc.args[0]!r}") from None
    if not isinstance(p, (list, tuple)) or len(p) != 3:
        raise InvalidParameterError("field 'p' must be a list of three probabilities")
    params = GameParams(float(p[0]), float(p[1]), float(p[2]), K)
    x = doc.get("x")
    if x is None:
        return params, StationaryProfile.uniform(params.K)
    entries = {parse_state(k): v for k, v in x.items()}
    return params, StationaryProfile.from_mapping(params.K, entries)


def dumps_game(params: GameParams, profile: StationaryProfile | None = None) -> str:
    return json.dumps(game_to_dict(params, profile), indent=2)


def loads_game(text: str) -> tuple[GameParams, StationaryProfile]:
    return game_from_dict(json.loads(text))


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def payoffs_to_csv(K: int, values: np.ndarray) -> str:
    """``values`` has shape ``(3, N)``: one row per player, canonical state order."""
    space = enumerate_states(K)
    rows = [
        [*s, *(repr(float(values[n, i])) for n in range(3))]
        for i, s in enumerate(space.states)
    ]
    return _csv(rows, ["s1", "s2", "s3", "V1", "V2", "V3"])


def payoffs_from_csv(text: str) -> tuple[list, np.ndarray]:
    reader = csv.DictReader(io.StringIO(text))
    states, vals = [], []
    for row in reader:
        states.append((int(row["s1"]), int(row["s2"]), int(row["s3"])))
        vals.append([float(row["V1"]), float(row["V2"]), float(row["V3"])])
    return states, np.array(vals).T


def certificate_to_dict(cert) -> dict:
    return {
        "p": list(cert.params.p),
        "K": cert.params.K,
        "x": {state_key(s): list(v) for s, v in cert.profile.to_mapping().items()},
        "gains": [float(g) for g in cert.gains],
        "certified": cert.certified,
        "method": cert.method,
        "tol": cert.tol,
        "J": cert.j_value,
        "gamma": cert.gamma,
    }


SIM_HEADER = ["K", "p1", "p2", "p3", "start", "games", "seed", "f1", "f2", "f3", "mean_rounds"]


def simulation_row(params: GameParams, start, result) -> list:
    f = result.frequencies
    return [
        params.K, *params.p, state_key(start), result.games, result.seed,
        *(repr(float(v)) for v in f), repr(result.mean_rounds),
    ]


def simulation_to_csv(params: GameParams, start, result) -> str:
    return _csv([simulation_row(params, start, result)], SIM_HEADER)
