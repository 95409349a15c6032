import math

import numpy as np
import pytest

import bcid


def test_gauss_legendre_integrates_polynomials():
    nodes, weights = bcid.gauss_legendre(8)
    x, w = np.asarray(nodes), np.asarray(weights)
    assert w.sum() == pytest.approx(2.0)
    # exact through degree 15
    assert (w * x**14).sum() == pytest.approx(2.0 / 15.0)
    ref_x, ref_w = np.polynomial.legendre.leggauss(8)
    assert np.allclose(np.sort(x), ref_x)


def test_fundamental_solution_2d_and_3d():
    assert bcid.fundamental_solution([0.0, 0.0], [2.0, 0.0]) == pytest.approx(-math.log(2.0) / (2 * math.pi))
    assert bcid.fundamental_solution([0.0, 0.0, 0.0], [0.0, 0.0, 2.0]) == pytest.approx(1.0 / (8 * math.pi))


def test_network_gradient_matches_differences():
    x = np.array([[0.3, 0.7], [0.4, 0.1]])
    values, grads = bcid.network_forward(3, x)
    h = 1e-6
    for k in range(2):
        shifted = x.copy()
        shifted[k] += h
        up, _ = bcid.network_forward(3, shifted)
        shifted[k] -= 2 * h
        down, _ = bcid.network_forward(3, shifted)
        assert np.allclose((up - down) / (2 * h), grads[k], rtol=1e-5, atol=1e-8)
    assert values.shape == (2,)


def test_forward_solver_balances_flux():
    grid = bcid.solve_forward("laplace_2d", 1.0 / 16)
    assert grid["nodes_per_axis"] == 17
    assert len(grid["values"]) == 17 * 17
    assert grid["flux_imbalance"] < 1e-6


def test_fit_loglog_known_slope():
    fit = bcid.fit_loglog([16, 32, 64, 128], [m**-1.5 for m in (16, 32, 64, 128)])
    assert fit["slope"] == pytest.approx(-1.5)
    assert not fit["flagged"]


def test_short_experiment_is_deterministic():
    cfg = "[problem]\nname = laplace_2d\neval_resolution = 11\n[recovery]\nepochs = 20\n"
    a = bcid.run_experiment(cfg, seed=1, epochs=5)
    b = bcid.run_experiment(cfg, seed=1, epochs=5)
    assert a["status"] == "ok"
    assert len(a["loss1"]) == 5
    assert a["loss1"] == b["loss1"]
    assert math.isfinite(a["l2_u"]) and math.isfinite(a["l2_eps"])


def test_config_errors_raise():
    with pytest.raises(bcid.ConfigurationError, match=r"\[train\] epochs"):
        bcid.run_experiment("[train]\nepochs = abc\n")
    assert bcid.config_hash("[train]\nepochs=3\n") == bcid.config_hash("[train]\n epochs = 3 ; note\n")


def test_invariant_suite_passes():
    checks = bcid.run_checks()
    assert checks
    for name, passed, detail in checks:
        assert passed, f"{name}: {detail}"
