from types import SimpleNamespace

import numpy as np
import pytest

from photonic_vqa.counts import NoiseConfig
from photonic_vqa.errors import InvalidArgument, OptimizationError
from photonic_vqa.experiments import h2_cost_function, run_vqe_gradient
from photonic_vqa.optimizers import (
    GaussianProcess, GdConfig, GpConfig, bayesian_optimize, gradient_descent,
)


def quadratic(center):
    center = np.asarray(center, float)
    return lambda p: SimpleNamespace(value=float(np.sum((np.asarray(p) - center) ** 2)), std_err=0.0)


def test_gd_quadratic():
    run = gradient_descent(quadratic([0.5, -0.2]), [0.0, 0.0], GdConfig(eta=0.2, epsilon_fd=1e-6))
    assert run.converged
    assert np.allclose(run.trajectory[-1].params, [0.5, -0.2], atol=5e-3)
    # one base evaluation plus one probe per parameter per iteration
    assert run.n_evaluations == 3 * (run.iterations - 1) + 1


def test_gd_nan_keeps_partial_trajectory():
    calls = {"n": 0}

    def cost(p):
        calls["n"] += 1
        return SimpleNamespace(value=np.nan if calls["n"] > 4 else float(p[0] ** 2), std_err=0.0)

    with pytest.raises(OptimizationError) as err:
        gradient_descent(cost, [1.0], GdConfig(eta=0.1, epsilon_fd=1e-3))
    assert len(err.value.trajectory) >= 1


def test_gd_config_validation():
    with pytest.raises(InvalidArgument):
        GdConfig(eta=0)


def test_h2_gradient_descent():
    run = run_vqe_gradient(0.736)
    assert run.trajectory[-1].cost == pytest.approx(-1.137271, abs=1e-5)


class TestGaussianProcess:
    def test_interpolates_noise_free_data(self):
        x = np.array([-0.5, 0.1, 0.9])
        y = np.sin(3 * x)
        gp = GaussianProcess(0.6, 0.65).fit(x, y, np.full(3, 1e-12), y[0])
        mu, var = gp.predict(x)
        assert np.allclose(mu, y, atol=1e-6)
        assert np.all(var < 1e-6)

    def test_prior_far_from_data(self):
        gp = GaussianProcess(0.6, 0.65).fit([0.0], [2.0], [1e-8], 1.5)
        mu, var = gp.predict([50.0])
        assert mu[0] == pytest.approx(1.5) and var[0] == pytest.approx(0.36)

    def test_singular_kernel(self):
        with pytest.raises(OptimizationError):
            GaussianProcess(0.6, 0.65).fit([0.0, 0.0], [1.0, 2.0], [0.0, 0.0], 1.0)


def test_bo_finds_parabola_minimum():
    run = bayesian_optimize(quadratic([0.3]), 0.0, GpConfig(max_iters=20))
    assert run.estimate.params[0] == pytest.approx(0.3, abs=2e-3)


def test_bo_rejects_start_outside_domain():
    with pytest.raises(InvalidArgument):
        bayesian_optimize(quadratic([0.0]), 3.0)


def test_bo_config_validation():
    with pytest.raises(InvalidArgument):
        GpConfig(grid_size=100)


def test_bo_reproducible():
    runs = [bayesian_optimize(h2_cost_function(0.736, NoiseConfig(2000, seed=4)), 0.0) for _ in range(2)]
    assert runs[0].to_dict() == runs[1].to_dict()
