import numpy as np
import pytest
from hypothesis import strategies as st

from ruingame.game import GameParams, StationaryProfile, enumerate_states

prob = st.floats(min_value=1e-3, max_value=1 - 1e-3, allow_nan=False)


@st.composite
def games(draw, k_min=3, k_max=7, deterministic=False):
    K = draw(st.integers(k_min, k_max))
    params = GameParams(draw(prob), draw(prob), draw(prob), K)
    g = enumerate_states(K).n_interior
    if deterministic:
        cell = st.sampled_from([0.0, 1.0])
    else:
        cell = st.floats(0.0, 1.0, allow_nan=False)
    x = draw(st.lists(cell, min_size=3 * g, max_size=3 * g))
    return params, StationaryProfile(K, np.reshape(x, (g, 3)))


def random_instance(rng, K, deterministic=False):
    p = rng.uniform(0.02, 0.98, 3)
    g = enumerate_states(K).n_interior
    x = rng.integers(0, 2, (g, 3)).astype(float) if deterministic else rng.uniform(0, 1, (g, 3))
    return GameParams(*p, K), StationaryProfile(K, x)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}")
