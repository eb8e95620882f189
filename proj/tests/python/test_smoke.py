import math

import numpy as np
import pytest

import dkf


def test_adapt_scalar():
    theta_bar, P_bar, gain = dkf.adapt(
        np.zeros(1), np.eye(1), 1.0, 0.1 * np.eye(1), np.ones(1), 1.0
    )
    assert theta_bar[0] == pytest.approx(0.5)
    assert P_bar[0, 0] == pytest.approx(0.6)
    assert gain[0] == pytest.approx(0.5)


def test_combine_two_sensors():
    out = dkf.combine([np.array([1.0]), np.array([3.0])],
                      [np.eye(1), 3 * np.eye(1)], np.full((2, 2), 0.5))
    for theta, P in out:
        assert P[0, 0] == pytest.approx(1.5)
        assert theta[0] == pytest.approx(1.5)


def test_graph_helpers():
    cfg = dkf.fig1_config()
    report = dkf.validate_graph(cfg.adjacency)
    assert report["ok"]
    assert dkf.diameter(cfg.adjacency) == 2
    assert dkf.a_min(cfg.adjacency) > 0
    assert not dkf.validate_graph(np.array([[1.0, 0.5], [0.0, 0.5]]))["ok"]


def test_invalid_prior_raises():
    with pytest.raises(dkf.ValidationError):
        dkf.adapt(np.zeros(1), np.eye(1), 0.0, np.eye(1), np.ones(1), 1.0)


def test_config_error_is_typed():
    text = dkf.bundled_fig1_config().replace("r = 0.1", "r = 0")
    with pytest.raises(dkf.ConfigError, match=r"\[r\]"):
        dkf.parse_config(text)


def test_small_monte_carlo():
    cfg = dkf.fig1_config()
    cfg.horizon = 100
    cfg.runs = 3
    cfg.record_stride = 50
    art = dkf.run_monte_carlo(cfg)
    assert art.distributed["ks"] == [1, 50, 100]
    assert len(art.noncooperative["mse"]) == 3
    assert all(math.isfinite(v) for row in art.distributed["mse"] for v in row)
    csv = art.errors_csv().splitlines()
    assert csv[0] == "mode,sensor,k,mse,stderr"
    assert len(csv) == 1 + 2 * 3 * 3
    cfg.workers = 3
    assert dkf.run_monte_carlo(cfg).errors_csv() == art.errors_csv()


def test_estimate_lambda_deterministic():
    value, se = dkf.estimate_lambda(np.eye(1), np.zeros((1, 1)), np.eye(1), np.eye(1),
                                    np.ones(1), h=1, mc=10)
    assert value == pytest.approx(0.25)
    assert se < 1e-15


def test_verify_small():
    results = dkf.verify(instances=20, seed=3)
    assert {r["name"] for r in results} >= {"mixing", "sandwich", "degeneracy"}
    assert all(r["passed"] for r in results)


def test_run_cli(tmp_path):
    code, out, err = dkf.run_cli(["reproduce-fig1", "--runs", "2", "--horizon", "50",
                                  "--out", str(tmp_path)])
    assert code == 0, err
    assert (tmp_path / "errors.csv").exists()
    assert dkf.run_cli(["simulate"])[0] == 2
