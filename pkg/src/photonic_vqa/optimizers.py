"""Classical optimizers driving the variational loop."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import InvalidArgument, OptimizationError


@dataclass
class TrajectoryPoint:
    params: list[float]
    cost: float
    std_err: float = 0.0


@dataclass
class OptRun:
    trajectory: list[TrajectoryPoint]
    best: TrajectoryPoint
    converged: bool
    iterations: int
    n_evaluations: int
    config: dict = field(default_factory=dict)
    estimate: TrajectoryPoint | None = None

    def to_dict(self) -> dict:
        return {"trajectory": [asdict(p) for p in self.trajectory], "best": asdict(self.best),
                "converged": self.converged, "iterations": self.iterations,
                "n_evaluations": self.n_evaluations, "config": self.config,
                "estimate": None if self.estimate is None else asdict(self.estimate)}


@dataclass(frozen=True)
class GdConfig:
    """Forward-difference gradient descent.

    Iteration stops when every parameter moves by less than ``tol_param``
    and the cost changes by less than ``tol_cost`` between iterates.
    """

    eta: float = 0.3
    epsilon_fd: float = 0.05
    max_iters: int = 100
    tol_param: float = 1e-3
    tol_cost: float = 1e-3

    def __post_init__(self):
        if self.eta <= 0 or self.epsilon_fd <= 0 or self.max_iters < 1:
            raise InvalidArgument("eta, epsilon_fd and max_iters must be positive")


@dataclass(frozen=True)
class GpConfig:
    """Gaussian-process Bayesian optimization over one bounded parameter."""

    m_k: float = 0.6
    sigma_k: float = 0.65
    z_lcb: float = 1.959964
    jitter: float = 1e-8
    max_iters: int = 13
    tol_param: float = 1e-3
    tol_cost: float = 1e-4
    lower: float = -np.pi / 4
    upper: float = np.pi / 2
    grid_size: int = 2049

    def __post_init__(self):
        if self.m_k <= 0 or self.sigma_k <= 0 or self.max_iters < 1:
            raise InvalidArgument("kernel scales and max_iters must be positive")
        if not self.lower < self.upper or self.grid_size < 512:
            raise InvalidArgument("need lower < upper and at least 512 grid points")


def _point(params, ev) -> TrajectoryPoint:
    if not np.isfinite(ev.value):
        raise OptimizationError("non-finite cost")
    return TrajectoryPoint([float(p) for p in np.atleast_1d(params)], float(ev.value), float(ev.std_err))


def gradient_descent(cost_fn: Callable, init, cfg: GdConfig = GdConfig()) -> OptRun:
    """theta <- theta - eta * grad C, with grad C by forward differences."""
    theta = np.atleast_1d(np.asarray(init, dtype=float)).copy()
    traj: list[TrajectoryPoint] = []
    n_eval, converged = 0, False
    try:
        for _ in range(cfg.max_iters):
            base = cost_fn(theta)
            n_eval += 1
            traj.append(_point(theta, base))
            if len(traj) > 1:
                dp = np.max(np.abs(np.array(traj[-1].params) - np.array(traj[-2].params)))
                if dp < cfg.tol_param and abs(traj[-1].cost - traj[-2].cost) < cfg.tol_cost:
                    converged = True
                    break
            grad = np.empty_like(theta)
            for j in range(theta.size):
                probe = theta.copy()
                probe[j] += cfg.epsilon_fd
                ev = cost_fn(probe)
                n_eval += 1
                if not np.isfinite(ev.value):
                    raise OptimizationError("non-finite cost", traj)
                grad[j] = (ev.value - base.value) / cfg.epsilon_fd
            theta = theta - cfg.eta * grad
            if not np.all(np.isfinite(theta)):
                raise OptimizationError("parameters diverged", traj)
    except OptimizationError as err:
        err.trajectory = traj
        raise
    best = min(traj, key=lambda p: p.cost)
    return OptRun(traj, best, converged, len(traj), n_eval, asdict(cfg), traj[-1])


class GaussianProcess:
    """GP regression with a squared-exponential kernel and constant prior mean."""

    def __init__(self, m_k: float, sigma_k: float):
        self.m_k, self.sigma_k = m_k, sigma_k

    def kernel(self, a, b):
        d = np.subtract.outer(np.asarray(a, float), np.asarray(b, float))
        return self.m_k ** 2 * np.exp(-0.5 * (d / self.sigma_k) ** 2)

    def fit(self, x, y, noise_var, prior_mean: float):
        self.x = np.asarray(x, dtype=float)
        self.mean = float(prior_mean)
        k = self.kernel(self.x, self.x) + np.diag(np.asarray(noise_var, dtype=float))
        try:
            self._chol = cho_factor(k, lower=True)
        except LinAlgError as err:
            raise OptimizationError(f"singular kernel matrix: {err}") from err
        self._alpha = cho_solve(self._chol, np.asarray(y, dtype=float) - self.mean)
        return self

    def predict(self, xs):
        ks = self.kernel(xs, self.x)
        mu = self.mean + ks @ self._alpha
        v = cho_solve(self._chol, ks.T)
        var = np.clip(self.m_k ** 2 - np.sum(ks * v.T, axis=1), 0.0, None)
        return mu, var


def bayesian_optimize(cost_fn: Callable, init: float, cfg: GpConfig = GpConfig()) -> OptRun:
    """Minimize a 1-D cost with a GP surrogate and a lower-confidence-bound rule.

    The first sample at ``init`` sets the prior mean.  Each further sample
    is the grid minimizer of mu - z sigma; sample noise enters the kernel
    diagonal as std_err**2 + jitter.
    """
    x0 = float(np.atleast_1d(init)[0])
    if not cfg.lower <= x0 <= cfg.upper:
        raise InvalidArgument("initial point outside the search interval")
    grid = np.linspace(cfg.lower, cfg.upper, cfg.grid_size)
    gp = GaussianProcess(cfg.m_k, cfg.sigma_k)
    traj = [_point([x0], cost_fn(np.array([x0])))]
    converged = False
    try:
        while len(traj) < cfg.max_iters:
            xs = np.array([p.params[0] for p in traj])
            ys = np.array([p.cost for p in traj])
            noise = np.array([p.std_err for p in traj]) ** 2 + cfg.jitter
            mu, var = gp.fit(xs, ys, noise, ys[0]).predict(grid)
            x_new = float(grid[np.argmin(mu - cfg.z_lcb * np.sqrt(var))])
            traj.append(_point([x_new], cost_fn(np.array([x_new]))))
            if (abs(x_new - traj[-2].params[0]) < cfg.tol_param
                    and abs(traj[-1].cost - traj[-2].cost) < cfg.tol_cost):
                converged = True
                break
    except OptimizationError as err:
        err.trajectory = traj
        raise
    # report the surrogate minimum: it averages shot noise over all samples
    xs = np.array([p.params[0] for p in traj])
    ys = np.array([p.cost for p in traj])
    noise = np.array([p.std_err for p in traj]) ** 2 + cfg.jitter
    mu, var = gp.fit(xs, ys, noise, ys[0]).predict(grid)
    k = int(np.argmin(mu))
    estimate = TrajectoryPoint([float(grid[k])], float(mu[k]), float(np.sqrt(var[k])))
    best = min(traj, key=lambda p: p.cost)
    return OptRun(traj, best, converged, len(traj), len(traj), asdict(cfg), estimate)
