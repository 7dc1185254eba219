import numpy as np
import pytest

from ruingame.experiments import (
    EPS,
    ConfigError,
    ExperimentConfig,
    balanced_start,
    make_rng,
    run_delta_v,
    run_sweep_convergence,
    sample_p,
)


def test_sample_p_range_and_fixed():
    ps = sample_p(make_rng(0), {"p1": 1.0}, 500)
    assert ps.shape == (500, 3)
    assert np.all(ps[:, 0] == 1 - EPS)
    assert np.all((ps > 0) & (ps < 1))
    assert ps[:, 1:].std() > 0.2


def test_sample_p_deterministic():
    a = sample_p(make_rng(5), {}, 10)
    b = sample_p(make_rng(5), {}, 10)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("K, s", [(9, (3, 3, 3)), (10, (4, 3, 3)), (11, (4, 4, 3)), (3, (1, 1, 1))])
def test_balanced_start(K, s):
    assert balanced_start(K) == s


def test_config_roundtrip():
    cfg = ExperimentConfig(kind="mvi", p=[0.1, 0.2, 0.3], K=4)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize(
    "doc",
    [{"kind": "nope"}, {"repetitions": 0}, {"K_min": 2}, {"tol": 0.0}, {"fixed": {"q": 1}},
     {"nonsense": 3}],
)
def test_config_rejects(doc):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(doc)


def test_sweep_small():
    cfg = ExperimentConfig(kind="sweep-convergence", repetitions=4, K_min=3, K_max=4, seed=3)
    out = run_sweep_convergence(cfg)
    assert [r["K"] for r in out["rows"]] == [3, 4]
    assert out["rows"][0]["proportion"] == 1.0
    assert len(out["runs"]) == 8


def test_sweep_rejects_large_k():
    with pytest.raises(ConfigError):
        run_sweep_convergence(ExperimentConfig(kind="sweep-convergence", K_max=10))


def test_delta_v_nonnegative():
    cfg = ExperimentConfig(kind="delta-v", K=6,
                           p_list=[[0.3, 0.6, 0.8], [0.5, 0.5, 0.5], [0.9, 0.0, 0.5]])
    out = run_delta_v(cfg)
    assert out["start"] == (2, 2, 2)
    for row in out["rows"]:
        if row["status"] != "ok":
            continue
        for n in (1, 2, 3):
            assert row[f"dV_random{n}"] >= -1e-12
            assert row[f"dV_uniform{n}"] >= -1e-12


def test_delta_v_bad_start():
    with pytest.raises(ConfigError):
        run_delta_v(ExperimentConfig(kind="delta-v", K=6, start="3,3,3", p=[0.5, 0.5, 0.5]))
