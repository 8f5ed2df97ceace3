import os
import pathlib

import numpy as np
import pytest

import avar

DATA = pathlib.Path(os.environ.get("AVAR_DATA_DIR", pathlib.Path(__file__).resolve().parents[2] / "data"))
CHAIN_A = np.array([[0.75, 0.25], [0.25, 0.75]])
PM1 = np.array([1.0, -1.0])


def test_oracles_on_symmetric_chain():
    assert np.allclose(avar.stationary_distribution(CHAIN_A), [0.5, 0.5])
    v, f_bar = avar.solve_poisson(CHAIN_A, PM1)
    assert np.allclose(v, [2.0, -2.0], atol=1e-12)
    assert abs(f_bar) < 1e-15
    assert avar.exact_kappa(CHAIN_A, PM1) == pytest.approx(3.0, abs=1e-12)
    assert avar.exact_kappa(CHAIN_A, PM1, method="difference") == pytest.approx(3.0, abs=1e-12)
    assert avar.exact_kappa_truncated(CHAIN_A, PM1, 60) == pytest.approx(3.0, abs=1e-7)
    assert avar.delta_one(CHAIN_A) == pytest.approx(0.25, abs=1e-12)


def test_oracles_match_numpy_on_random_chain():
    rng = np.random.default_rng(0)
    p = rng.exponential(size=(5, 5)) + 1e-3
    p /= p.sum(axis=1, keepdims=True)
    f = rng.uniform(-1, 1, size=5)
    w, vecs = np.linalg.eig(p.T)
    pi = np.real(vecs[:, np.argmin(abs(w - 1))])
    pi /= pi.sum()
    assert np.allclose(avar.stationary_distribution(p), pi, atol=1e-12)
    g = f - pi @ f
    z = np.linalg.solve(np.eye(5) - p + np.outer(np.ones(5), pi), g)
    kappa = 2 * pi @ (g * z) - pi @ (g * g)
    assert avar.exact_kappa(p, f) == pytest.approx(kappa, abs=1e-10)


def test_chain_validation_and_errors():
    assert avar.is_valid_chain(CHAIN_A)
    assert avar.chain_period(np.array([[0.0, 1.0], [1.0, 0.0]])) == 2
    with pytest.raises(avar.AvarError) as err:
        avar.stationary_distribution(np.eye(2))
    assert err.value.kind == "Reducible"
    with pytest.raises(avar.AvarError) as err:
        avar.stationary_distribution(np.array([[0.9, 0.2], [0.5, 0.5]]))
    assert err.value.kind == "NonStochastic"


def test_simulate_is_deterministic():
    a = avar.simulate(CHAIN_A, 200, 7)
    assert a == avar.simulate(CHAIN_A, 200, 7)
    assert len(a) == 200
    assert avar.simulate(np.full((2, 2), 0.5), 1, 3, start=0) == [0]


def test_constants_and_bound():
    c = avar.suggest_constants(0.25)
    assert c.c1 == pytest.approx(2.125)
    assert avar.constants_violations(0.25, c) == []
    assert avar.constants_violations(0.25, avar.SAConstants(1.0, 0.01, 0.02))
    assert avar.eta(avar.SAConstants(0.0, 0.0, 0.0)) == pytest.approx(np.sqrt(5.0))
    b = avar.theorem_bound(0.25, c, np.sqrt(17.0), alpha=1e-5, n=1000)
    assert b == pytest.approx(123.57747171569561, rel=1e-9)


def test_tabular_run_converges_and_matches_lfa_identity():
    c = avar.suggest_constants(0.25)
    tr = avar.run_tabular(CHAIN_A, PM1, c, alpha=800.0, h=1700.0, n=100_000, seed=1)
    assert abs(tr["final"]["kappa"] - 3.0) < 0.5
    assert tr["max_projection_residual"] < 1e-8
    lf = avar.run_lfa(CHAIN_A, PM1, np.eye(2), c, alpha=800.0, h=1700.0, n=100_000, seed=1)
    assert np.allclose(lf["final"]["theta"], tr["final"]["v"], atol=1e-12)
    assert lf["final"]["kappa"] == pytest.approx(tr["final"]["kappa"], abs=1e-12)


def test_covariance_and_stationary_runs():
    c = avar.suggest_constants(0.25)
    f2 = np.column_stack([PM1, PM1])
    cov = avar.run_covariance(CHAIN_A, f2, c, alpha=800.0, h=1700.0, n=2000, seed=4)
    tab = avar.run_tabular(CHAIN_A, PM1, c, alpha=800.0, h=1700.0, n=2000, seed=4)
    assert np.all(cov["final"]["c"] == tab["final"]["kappa"])
    assert np.allclose(avar.exact_covariance(CHAIN_A, f2), 3.0)
    st = avar.run_stationary(np.full((2, 2), 0.5), PM1, 1.0, alpha=4.0, h=477.0, n=100_000, seed=2)
    assert abs(st["final"]["v"] - 1.0) < 0.05


def test_lfa_and_rl_oracles():
    theta, v_tilde, kappa_star = avar.theta_star(CHAIN_A, np.ones((2, 1)), PM1)
    assert theta[0] == 0.0 and v_tilde == 0.0
    assert kappa_star == pytest.approx(-1.0, abs=1e-12)
    assert avar.min_approx_error(CHAIN_A, np.ones((2, 1)), PM1) == pytest.approx(2.0, abs=1e-12)
    assert avar.delta_two(CHAIN_A, np.array([[1.0], [-1.0]])) == pytest.approx(0.5, abs=1e-12)
    kernels = [np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]])]
    r = np.array([[1.0, 1.0], [-1.0, -1.0]])
    mu = np.full((2, 2), 0.5)
    assert avar.kappa_mu(kernels, r, mu) == pytest.approx(1.0, abs=1e-12)
    assert avar.average_reward(kernels, r, mu) == pytest.approx(0.0, abs=1e-15)


def test_batch_means_and_slope():
    x = [1.0, -1.0] * 500
    assert avar.batch_means(x, 2) == pytest.approx(0.0, abs=1e-15)
    y = np.random.default_rng(1).normal(size=4000).tolist()
    assert avar.batch_means([2 * v for v in y], 15) == 4 * avar.batch_means(y, 15)
    slope, _ = avar.fit_loglog_slope([(1e3, 1e-2), (1e4, 1e-3), (1e5, 1e-4)])
    assert slope == pytest.approx(-1.0)


def test_sweep_from_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        '{"spec": "%s", "estimator": "tabular", "n_grid": [100, 1000], "seeds": 3}' % (DATA / "chain_a.json")
    )
    rows = avar.run_sweep(cfg, threads=2)
    assert len(rows) == 6
    assert rows == avar.run_sweep(cfg, threads=1)
    for row in rows:
        assert row["sq_err"] == (row["estimate"] - row["truth"]) ** 2
